#include "floodlab/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "floodlab/rng.hpp"
#include "json.hpp"

namespace floodlab {

void Topology::build_adjacency() {
    adjacency.assign(node_count, {});
    for (const Link& l : links) {
        adjacency[l.a].emplace_back(l.b, l.base_loss);
        adjacency[l.b].emplace_back(l.a, l.base_loss);
    }
}

void Topology::validate() const {
    if (node_count <= 0) throw ValidationError("topology: node_count must be positive");
    if (coordinator < 0 || coordinator >= node_count)
        throw ValidationError("topology: coordinator id out of range");
    if (static_cast<int>(jam_exposure.size()) != node_count)
        throw ValidationError("topology: jam_exposure must cover every node");
    for (double e : jam_exposure)
        if (e < 0.0 || e > 1.0) throw ValidationError("topology: jam_exposure outside [0,1]");
    for (const Link& l : links) {
        if (l.a == l.b) throw ValidationError("topology: self-link");
        if (l.a < 0 || l.a >= node_count || l.b < 0 || l.b >= node_count)
            throw ValidationError("topology: link endpoint out of range");
        if (l.base_loss < 0.0 || l.base_loss >= 1.0)
            throw ValidationError("topology: base_loss must lie in [0,1)");
    }
    // connectivity with all nodes forwarding
    std::vector<char> seen(node_count, 0);
    std::vector<NodeId> stack{coordinator};
    seen[coordinator] = 1;
    int count = 1;
    std::vector<std::vector<NodeId>> adj(node_count);
    for (const Link& l : links) {
        adj[l.a].push_back(l.b);
        adj[l.b].push_back(l.a);
    }
    while (!stack.empty()) {
        NodeId n = stack.back();
        stack.pop_back();
        for (NodeId m : adj[n]) {
            if (!seen[m]) {
                seen[m] = 1;
                ++count;
                stack.push_back(m);
            }
        }
    }
    if (count != node_count) throw ValidationError("topology: graph is not connected");
}

Topology Topology::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("topology: invalid JSON: ") + e.what());
    }
    Topology t;
    try {
        t.node_count = j.at("node_count").get<int>();
        t.coordinator = j.at("coordinator").get<NodeId>();
        for (const auto& l : j.at("links")) {
            t.links.push_back({l.at(0).get<NodeId>(), l.at(1).get<NodeId>(), l.at(2).get<double>()});
        }
        if (j.contains("jam_exposure")) {
            t.jam_exposure = j.at("jam_exposure").get<std::vector<double>>();
        } else {
            t.jam_exposure.assign(t.node_count, 1.0);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("topology: bad field: ") + e.what());
    }
    t.validate();
    t.build_adjacency();
    return t;
}

Topology Topology::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("topology: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

double link_loss_prob(double base_loss, const InterferencePattern& pattern,
                      double exposure, double airtime_ms) {
    if (pattern.kind == InterferenceKind::none) return base_loss;
    if (pattern.period_ms <= 0.0)
        throw ValidationError("link_loss_prob: non-positive jammer period");
    const double overlap = std::min(1.0, (pattern.burst_ms + airtime_ms) / pattern.period_ms);
    return 1.0 - (1.0 - base_loss) * (1.0 - exposure * overlap);
}

FloodOutcome simulate_flood(const Topology& topo, NodeId source, int ntx,
                            const std::vector<char>& active,
                            const InterferencePattern& pattern, std::uint64_t seed,
                            const NetConfig& cfg) {
    const int n = topo.node_count;
    if (source < 0 || source >= n) throw ValidationError("simulate_flood: source not in topology");
    if (static_cast<int>(active.size()) != n)
        throw ValidationError("simulate_flood: active set size mismatch");
    if (std::find(active.begin(), active.end(), char(1)) == active.end())
        throw ValidationError("simulate_flood: empty active set");
    if (!active[source]) throw ValidationError("simulate_flood: source must be active");
    if (ntx < 0 || ntx > kNtxMax) throw ValidationError("simulate_flood: ntx out of range");

    const int budget = static_cast<int>(cfg.slot_max_ms / cfg.microslot_ms);
    Rng rng(seed);

    FloodOutcome out;
    out.source = source;
    out.received.assign(n, 0);
    out.first_rx_microslot.assign(n, -1);
    out.radio_on_ms.assign(n, 0.0);

    std::vector<int> tx_remaining(n, 0);
    std::vector<int> next_tx(n, -1);
    std::vector<int> off_after(n, -1);  // last micro-slot with the radio on, -1 = still on

    out.received[source] = 1;
    out.first_rx_microslot[source] = 0;
    tx_remaining[source] = std::max(1, ntx);
    next_tx[source] = 0;

    std::vector<NodeId> transmitters;
    std::vector<NodeId> new_rx;
    for (int t = 0; t < budget; ++t) {
        transmitters.clear();
        for (NodeId m = 0; m < n; ++m)
            if (tx_remaining[m] > 0 && next_tx[m] == t) transmitters.push_back(m);

        if (!transmitters.empty()) {
            new_rx.clear();
            for (NodeId r = 0; r < n; ++r) {
                if (out.received[r]) continue;
                // every copy from a transmitting neighbor is lost independently;
                // the slot succeeds if at least one survives
                double all_lost = 1.0;
                bool heard = false;
                for (const auto& [nbr, base] : topo.adjacency[r]) {
                    if (tx_remaining[nbr] > 0 && next_tx[nbr] == t) {
                        heard = true;
                        all_lost *= link_loss_prob(base, pattern, topo.jam_exposure[r],
                                                   cfg.airtime_ms);
                    }
                }
                if (heard && rng.uniform() >= all_lost) new_rx.push_back(r);
            }
            for (NodeId m : transmitters) {
                if (--tx_remaining[m] == 0)
                    off_after[m] = t;  // done transmitting, radio off
                else
                    next_tx[m] = t + 2;  // listen one micro-slot, then transmit again
            }
            for (NodeId r : new_rx) {
                out.received[r] = 1;
                out.first_rx_microslot[r] = t;
                int k = 0;
                if (active[r] && ntx > 0) {
                    // transmissions at t+1, t+3, ... while they fit in the slot
                    k = std::min(ntx, (budget - t) / 2);
                }
                if (k > 0) {
                    tx_remaining[r] = k;
                    next_tx[r] = t + 1;
                } else {
                    off_after[r] = t;  // passive (or no budget left): off after first rx
                }
            }
        }
    }

    for (NodeId m = 0; m < n; ++m) {
        double on_ms;
        if (!out.received[m]) {
            on_ms = cfg.slot_max_ms;  // kept listening the whole slot
        } else if (off_after[m] < 0) {
            on_ms = budget * cfg.microslot_ms;
        } else {
            on_ms = (off_after[m] + 1) * cfg.microslot_ms;
        }
        out.radio_on_ms[m] = std::min(on_ms, cfg.slot_max_ms);
    }
    return out;
}

RoundRecord simulate_round(const Topology& topo, int ntx,
                           const std::vector<char>& active_roles,
                           const InterferencePattern& pattern, int data_slot_count,
                           std::uint64_t seed, std::vector<RunningStats>* stats,
                           long round_index, const NetConfig& cfg) {
    const int n = topo.node_count;
    if (data_slot_count < 1) throw ValidationError("simulate_round: need at least one data slot");
    if (static_cast<int>(active_roles.size()) != n)
        throw ValidationError("simulate_round: active_roles size mismatch");
    if (stats && static_cast<int>(stats->size()) != n)
        throw ValidationError("simulate_round: stats size mismatch");

    RoundRecord rec;
    rec.round_index = round_index;
    rec.ntx = ntx;
    rec.any_loss = false;
    rec.slots.reserve(1 + data_slot_count);

    std::vector<char> slot_active = active_roles;
    for (int s = 0; s <= data_slot_count; ++s) {
        const NodeId source = (s == 0) ? topo.coordinator : NodeId((s - 1) % n);
        slot_active = active_roles;
        slot_active[source] = 1;  // a slot owner always sources its own flood
        FloodOutcome slot = simulate_flood(topo, source, ntx, slot_active, pattern,
                                           mix_seed(seed, static_cast<std::uint64_t>(s)), cfg);
        for (NodeId d = 0; d < n; ++d) {
            if (d != source && active_roles[d] && !slot.received[d]) rec.any_loss = true;
        }
        rec.slots.push_back(std::move(slot));
    }

    // Nodes report stats measured through the previous round; the report lands
    // at the coordinator only if their data slot was received there.
    rec.feedback.assign(n, {});
    std::vector<double> inst_rel(n, 0.0), inst_rot(n, 0.0);
    std::vector<int> dest_slots(n, 0), rx_slots(n, 0);
    for (const FloodOutcome& slot : rec.slots) {
        for (NodeId d = 0; d < n; ++d) {
            inst_rot[d] += slot.radio_on_ms[d];
            if (d == slot.source) continue;
            ++dest_slots[d];
            if (slot.received[d]) ++rx_slots[d];
        }
    }
    const double slot_count = static_cast<double>(rec.slots.size());
    for (NodeId d = 0; d < n; ++d) {
        inst_rel[d] = dest_slots[d] == 0 ? 1.0 : double(rx_slots[d]) / double(dest_slots[d]);
        inst_rot[d] /= slot_count;
    }

    for (int s = 1; s <= data_slot_count; ++s) {
        const NodeId owner = NodeId((s - 1) % n);
        if (!rec.slots[s].received[topo.coordinator]) continue;
        NodeFeedback& fb = rec.feedback[owner];
        fb.present = true;
        if (stats) {
            fb.reliability = (*stats)[owner].reliability;
            fb.radio_on_ms = (*stats)[owner].radio_on_ms;
        } else {
            fb.reliability = inst_rel[owner];
            fb.radio_on_ms = inst_rot[owner];
        }
    }

    if (stats) {
        for (NodeId d = 0; d < n; ++d)
            (*stats)[d].update(inst_rel[d], inst_rot[d], cfg.stats_ewa);
    }
    return rec;
}

}  // namespace floodlab
