// Discrete-event simulation of synchronous-transmission floods and bus
// rounds over a graph topology under burst interference.
//
// A flood advances in micro-slots of microslot_ms. The source transmits at
// micro-slot 0; every node in possession of the packet alternates RX/TX until
// it has spent its transmission budget. Concurrent copies never destruct:
// each transmitting neighbor offers an independent reception chance
// (constructive-interference idealization), and the jammer enters as a
// per-copy loss inflation derived from its burst/period geometry.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "floodlab/core.hpp"

namespace floodlab {

struct Link {
    NodeId a = 0;
    NodeId b = 0;
    double base_loss = 0.0;
};

struct Topology {
    int node_count = 0;
    NodeId coordinator = 0;
    std::vector<Link> links;
    std::vector<double> jam_exposure;  // per node, scales jammer impact on its receptions

    // adjacency[n] = (neighbor, base_loss) pairs
    std::vector<std::vector<std::pair<NodeId, double>>> adjacency;

    void build_adjacency();
    // Requires: dense ids, no self-links, base_loss < 1, connected graph.
    void validate() const;

    static Topology from_json(const std::string& text);
    static Topology from_json_file(const std::string& path);
};

// Probability that one transmitted copy is lost on a link, combining the
// static link quality with the chance that the jammer burst overlaps the
// packet airtime: overlap = min(1, (burst + airtime) / period), and
// loss = 1 - (1 - base_loss) * (1 - exposure * overlap).
double link_loss_prob(double base_loss, const InterferencePattern& pattern,
                      double exposure, double airtime_ms);

struct FloodOutcome {
    NodeId source = 0;
    std::vector<char> received;
    std::vector<int> first_rx_microslot;  // -1 when never received
    std::vector<double> radio_on_ms;
};

struct RoundRecord {
    long round_index = 0;
    int ntx = 0;
    std::vector<FloodOutcome> slots;       // control slot first, then data slots
    std::vector<NodeFeedback> feedback;    // per node, as observed at the coordinator
    bool any_loss = false;                 // some active destination missed some slot
};

// Per-node running statistics a node would carry in its feedback header:
// reliability and radio-on time smoothed over the recent rounds.
struct RunningStats {
    double reliability = 1.0;
    double radio_on_ms = 0.0;
    bool initialized = false;

    void update(double round_reliability, double round_radio_on, double ewa) {
        if (!initialized) {
            reliability = round_reliability;
            radio_on_ms = round_radio_on;
            initialized = true;
        } else {
            reliability = ewa * round_reliability + (1.0 - ewa) * reliability;
            radio_on_ms = ewa * round_radio_on + (1.0 - ewa) * radio_on_ms;
        }
    }
};

// One flood from `source`. `active` marks the forwarder set (size node_count);
// the source must be active. ntx = 0 turns a node's radio off after its first
// reception; the source still transmits once.
FloodOutcome simulate_flood(const Topology& topo, NodeId source, int ntx,
                            const std::vector<char>& active,
                            const InterferencePattern& pattern, std::uint64_t seed,
                            const NetConfig& cfg = {});

// One bus round: a control flood from the coordinator followed by
// data_slot_count floods whose sources cycle over all nodes. A node reports
// its running stats as of the previous round (feedback needs a full round to
// be measured and another to be shared); the report reaches the coordinator
// only if the coordinator received that node's data slot. When stats is
// null, this-round instantaneous values are reported instead.
RoundRecord simulate_round(const Topology& topo, int ntx,
                           const std::vector<char>& active_roles,
                           const InterferencePattern& pattern, int data_slot_count,
                           std::uint64_t seed, std::vector<RunningStats>* stats = nullptr,
                           long round_index = 0, const NetConfig& cfg = {});

}  // namespace floodlab
