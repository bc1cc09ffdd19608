// Offline training substrate: traces record round outcomes swept over every
// retransmission value, back-to-back, so that any action sequence can later
// be replayed against timely-coupled datapoints. The replay environment
// turns a trace into RL transitions with the efficiency-reliability reward.
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "floodlab/coordinator.hpp"
#include "floodlab/core.hpp"
#include "floodlab/dqn.hpp"
#include "floodlab/simnet.hpp"

namespace floodlab {

// Reward for one decision: loss-free rounds pay 1 - C * ntx / n_max with
// C = 0.3; any loss pays nothing.
inline constexpr double kRewardCost = 0.3;
double reward(bool any_loss, int ntx);

struct TraceDatapoint {
    int block = 0;
    int ntx = 0;
    std::vector<std::pair<double, double>> per_node;  // (reliability, radio_on_ms)
    bool any_loss = false;
};

struct TraceHeader {
    int node_count = 0;
    int n_max = kNtxMax;
    int block_count = 0;
    int sweep_min = 1;  // set to 0 to sweep the all-passive value as well
    std::string scenario;
    std::uint64_t seed = 0;
};

class Trace {
public:
    Trace() = default;
    Trace(TraceHeader header, std::vector<TraceDatapoint> datapoints);

    const TraceHeader& header() const { return header_; }
    int blocks() const { return header_.block_count; }
    int sweep_min() const { return header_.sweep_min; }
    int sweep_max() const { return header_.n_max; }

    // Lookup is exact; a missing (block, ntx) pair is a hard error, the
    // environment never interpolates.
    const TraceDatapoint& at(int block, int ntx) const;

    const std::vector<TraceDatapoint>& datapoints() const { return datapoints_; }

    // Fraction of datapoints that saw at least one loss (dataset balance).
    double lossy_fraction() const;

    // JSONL: one header object, then one object per datapoint.
    void serialize(std::ostream& os) const;
    static Trace parse(std::istream& is);
    void save(const std::string& path) const;
    static Trace load(const std::string& path);

private:
    void index();
    TraceHeader header_;
    std::vector<TraceDatapoint> datapoints_;
    int sweep_width_ = 0;
};

// Runs `blocks` sweeps: for each block, one simulated round per ntx value in
// [sweep_min, n_max], back-to-back, while the interference timeline advances
// with every simulated round. Per-node running stats are kept per ntx lane so
// a lane reflects what nodes would have reported had that value been in use.
Trace collect_trace(const Topology& topo, const InterferenceTimeline& timeline, int blocks,
                    int data_slot_count, std::uint64_t seed, const NetConfig& cfg = {},
                    int sweep_min = 1, const std::string& scenario_tag = "");

// Cursor into a trace during replay.
struct EnvState {
    int cursor = 0;
    int ntx = 3;
    std::array<int, kHistoryLen> history{1, 1};
};

struct EnvStep {
    DqnInput observation;
    double reward = 0.0;
    EnvState next;
    bool end_of_trace = false;
};

// Apply an action: advance to the next block, fetch the datapoint for the
// updated ntx, compute the reward and encode the next observation.
EnvStep env_step(const EnvState& state, const Trace& trace, Action action,
                 const NetConfig& cfg = {});

// Fixed-length episodes starting at uniformly random block offsets with a
// uniformly random initial retransmission value.
class ReplayEnvironment final : public Environment {
public:
    ReplayEnvironment(const Trace& trace, const NetConfig& cfg = {}, int episode_length = 100);

    FeatureVector reset(Rng& rng) override;
    StepResult step(int action, Rng& rng) override;
    void save_state(std::ostream& os) const override;
    void load_state(std::istream& is) override;

    const EnvState& state() const { return state_; }

private:
    DqnInput observe(const EnvState& s) const;

    const Trace& trace_;
    NetConfig cfg_;
    int episode_length_;
    EnvState state_;
    int steps_taken_ = 0;
};

}  // namespace floodlab
