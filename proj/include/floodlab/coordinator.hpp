// Control plane: aggregates per-node feedback into a global snapshot,
// encodes the Q-network input vector, applies incremental retransmission
// actions and dispatches to the active controller.
#pragma once

#include <array>
#include <memory>
#include <string>

#include "floodlab/core.hpp"
#include "floodlab/dqn.hpp"
#include "floodlab/mab.hpp"
#include "floodlab/pid.hpp"
#include "floodlab/simnet.hpp"

namespace floodlab {

// Coordinator-side view of the network. history holds the last loss flags,
// most recent first: +1 = loss-free round, -1 = at least one packet lost.
struct GlobalSnapshot {
    std::vector<NodeFeedback> per_node;
    std::array<int, kHistoryLen> history{1, 1};
};

// Fold a finished round into the snapshot. Nodes whose feedback did not
// arrive get the pessimistic fill: 0% reliability, a full slot of radio-on.
GlobalSnapshot collect_feedback(const RoundRecord& record, const GlobalSnapshot& previous,
                                const NetConfig& cfg = {});

// The encoded 31-feature vector. padded is set when fewer than K nodes were
// available and pessimistic entries filled the rest.
struct DqnInput {
    FeatureVector values;
    bool padded = false;
};

// Features, in order: K radio-on values and K reliability values of the K
// lowest-reliability nodes (ascending reliability, ties by node id), the
// one-hot of the current retransmission parameter, then the history flags.
// Radio-on maps [0, slot_max] onto [-1, 1]; reliability maps [0.5, 1.0] onto
// [-1, 1] with anything below 50% clamped to -1.
DqnInput encode_input(const GlobalSnapshot& snapshot, int current_ntx,
                      const NetConfig& cfg = {}, NodeId coordinator = -1);

enum class Action { decrease = 0, maintain = 1, increase = 2 };

// One step up or down, clamped to [1, kNtxMax]; a global 0 would halt
// dissemination, so the lower clamp is 1.
int apply_action(int current_ntx, Action action);

struct AdaptivityCommand {
    enum class Kind { set_ntx, run_mab };
    Kind kind = Kind::set_ntx;
    int ntx = 3;
    NodeId learner = -1;
};

// A controller consumes the end-of-round snapshot and decides the command
// distributed in the next control slot.
class Controller {
public:
    virtual ~Controller() = default;
    virtual AdaptivityCommand decide(const GlobalSnapshot& snapshot, int current_ntx,
                                     long round_index) = 0;
    virtual std::string name() const = 0;
};

class StaticController final : public Controller {
public:
    explicit StaticController(int ntx) : ntx_(ntx) {
        if (ntx < 1 || ntx > kNtxMax) throw ValidationError("static controller: ntx out of range");
    }
    AdaptivityCommand decide(const GlobalSnapshot&, int, long) override {
        return {AdaptivityCommand::Kind::set_ntx, ntx_, -1};
    }
    std::string name() const override { return "static"; }

private:
    int ntx_;
};

// Greedy action from quantized inference, once per round end. Executing the
// network after every flood would not fit the slot timing on the embedded
// target, so decisions happen at round granularity.
class DqnController final : public Controller {
public:
    DqnController(QuantizedModel model, NetConfig cfg, NodeId coordinator)
        : model_(std::move(model)), cfg_(cfg), coordinator_(coordinator) {}
    AdaptivityCommand decide(const GlobalSnapshot& snapshot, int current_ntx, long) override {
        const DqnInput input = encode_input(snapshot, current_ntx, cfg_, coordinator_);
        const auto q = infer_fixed(model_, input.values);
        const Action a = static_cast<Action>(argmax3(q));
        return {AdaptivityCommand::Kind::set_ntx, apply_action(current_ntx, a), -1};
    }
    std::string name() const override { return "dqn"; }

private:
    QuantizedModel model_;
    NetConfig cfg_;
    NodeId coordinator_;
};

// PI baseline. The regulated signal is the round success flag (1.0 when the
// round was loss-free, 0.0 otherwise): individual destination misses are too
// diluted at this scale to move a ratio-based error.
class PidController final : public Controller {
public:
    explicit PidController(const PiConfig& cfg = {}) : cfg_(cfg) { state_.n_current = cfg.n_base; }
    AdaptivityCommand decide(const GlobalSnapshot& snapshot, int, long) override {
        const double reliability = snapshot.history[0] > 0 ? 1.0 : 0.0;
        PiStep step = pid_step(state_, reliability, cfg_);
        state_ = step.state;
        return {AdaptivityCommand::Kind::set_ntx, step.ntx, -1};
    }
    std::string name() const override { return "pid"; }

private:
    PiConfig cfg_;
    PiState state_;
};

// Pins the retransmission parameter and grants learning blocks to the
// forwarder-selection bandits while the medium stays calm.
class MabController final : public Controller {
public:
    MabController(int node_count, NodeId coordinator, const MabConfig& cfg, int static_ntx,
                  std::uint64_t seed)
        : selection_(node_count, coordinator, cfg, seed), ntx_(static_ntx) {}

    AdaptivityCommand decide(const GlobalSnapshot& snapshot, int, long round_index) override {
        const bool calm = snapshot.history[0] > 0 && snapshot.history[1] > 0;
        const NodeId learner = selection_.schedule().learner_at(round_index + 1);
        if (calm && learner >= 0)
            return {AdaptivityCommand::Kind::run_mab, ntx_, learner};
        return {AdaptivityCommand::Kind::set_ntx, ntx_, -1};
    }
    std::string name() const override { return "mab"; }

    ForwarderSelection& selection() { return selection_; }

private:
    ForwarderSelection selection_;
    int ntx_;
};

std::unique_ptr<Controller> make_controller(const std::string& mode, int node_count,
                                            NodeId coordinator, const NetConfig& cfg,
                                            int static_ntx, std::uint64_t seed,
                                            const std::string& model_path);

}  // namespace floodlab
