#include "floodlab/coordinator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace floodlab {

GlobalSnapshot collect_feedback(const RoundRecord& record, const GlobalSnapshot& previous,
                                const NetConfig& cfg) {
    GlobalSnapshot next;
    next.per_node.resize(record.feedback.size());
    for (std::size_t n = 0; n < record.feedback.size(); ++n) {
        const NodeFeedback& fb = record.feedback[n];
        if (fb.present) {
            next.per_node[n] = fb;
        } else {
            next.per_node[n] = {0.0, cfg.slot_max_ms, false};
        }
    }
    for (int i = kHistoryLen - 1; i > 0; --i) next.history[i] = previous.history[i - 1];
    next.history[0] = record.any_loss ? -1 : 1;
    return next;
}

namespace {
double radio_on_feature(double radio_on_ms, double slot_max_ms) {
    return std::clamp(2.0 * radio_on_ms / slot_max_ms - 1.0, -1.0, 1.0);
}

double reliability_feature(double reliability) {
    // [0.5, 1.0] -> [-1, 1]; anything below 50% is equally unacceptable
    return std::clamp(4.0 * reliability - 3.0, -1.0, 1.0);
}
}  // namespace

DqnInput encode_input(const GlobalSnapshot& snapshot, int current_ntx, const NetConfig& cfg,
                      NodeId coordinator) {
    if (current_ntx < 0 || current_ntx > kNtxMax)
        throw ValidationError("encode_input: ntx outside one-hot range");

    std::vector<NodeId> order;
    order.reserve(snapshot.per_node.size());
    for (NodeId n = 0; n < static_cast<NodeId>(snapshot.per_node.size()); ++n) {
        if (!cfg.include_coordinator && n == coordinator) continue;
        order.push_back(n);
    }
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        const double ra = snapshot.per_node[a].reliability;
        const double rb = snapshot.per_node[b].reliability;
        if (ra != rb) return ra < rb;
        return a < b;
    });

    DqnInput out;
    out.values.setZero();
    const int available = static_cast<int>(order.size());
    for (int k = 0; k < kLowestK; ++k) {
        if (k < available) {
            const NodeFeedback& fb = snapshot.per_node[order[k]];
            out.values(k) = radio_on_feature(fb.radio_on_ms, cfg.slot_max_ms);
            out.values(kLowestK + k) = reliability_feature(fb.reliability);
        } else {
            out.values(k) = 1.0;  // pessimistic pad: full radio-on, dead reliability
            out.values(kLowestK + k) = -1.0;
            out.padded = true;
        }
    }
    out.values(2 * kLowestK + current_ntx) = 1.0;
    for (int m = 0; m < kHistoryLen; ++m)
        out.values(2 * kLowestK + kOneHotWidth + m) = static_cast<double>(snapshot.history[m]);
    return out;
}

int apply_action(int current_ntx, Action action) {
    int next = current_ntx;
    if (action == Action::decrease) --next;
    if (action == Action::increase) ++next;
    return std::clamp(next, 1, kNtxMax);
}

std::unique_ptr<Controller> make_controller(const std::string& mode, int node_count,
                                            NodeId coordinator, const NetConfig& cfg,
                                            int static_ntx, std::uint64_t seed,
                                            const std::string& model_path) {
    if (mode == "static") return std::make_unique<StaticController>(static_ntx);
    if (mode == "pid") return std::make_unique<PidController>();
    if (mode == "mab")
        return std::make_unique<MabController>(node_count, coordinator, MabConfig{}, static_ntx,
                                               seed);
    if (mode == "dqn") {
        if (model_path.empty()) throw ValidationError("dqn controller needs a model file");
        QuantizedModel q;
        if (model_file_kind(model_path) == "quantized") {
            q = load_quantized(model_path);
        } else {
            q = quantize(load_model(model_path)).model;
        }
        return std::make_unique<DqnController>(std::move(q), cfg, coordinator);
    }
    throw ValidationError("unknown controller mode: " + mode);
}

}  // namespace floodlab
