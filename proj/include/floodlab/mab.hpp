// Distributed forwarder selection: every node runs a two-armed Exp3 bandit
// deciding between active forwarder and passive receiver. Learning is
// sequential (one node per 10-round block, pseudo-random order); a passive
// learner that breaks the network has its passive weight reset.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "floodlab/core.hpp"

namespace floodlab {

enum class Arm { active, passive };

struct MabConfig {
    double gamma_explore = 0.1;
    double initial_w = 1.0;
    double reward_passive = 1.0;  // loss-free block, learner stayed quiet
    double reward_active = 0.7;   // loss-free block, learner kept forwarding
    int rounds_per_learner = 10;
    bool exclude_coordinator = true;
};

struct BanditState {
    double w_active = 1.0;
    double w_passive = 1.0;
    Arm role = Arm::active;
};

// p_i = (1 - gamma) * w_i / (w_active + w_passive) + gamma / 2
struct ArmProbabilities {
    double active = 0.5;
    double passive = 0.5;
};
ArmProbabilities arm_probability(const BanditState& state, double gamma_explore);

// w_chosen *= exp(gamma * reward / (2 * p_chosen)); renormalizes both weights
// by their maximum if one would overflow, which leaves the probabilities
// untouched.
void update_weight(BanditState& state, Arm chosen, double reward, double p_chosen,
                   double gamma_explore);

// Reset the passive weight after a network-breaking configuration and force
// the node back to forwarding.
void punish_breaking(BanditState& state, double initial_w);

// Reward over a learner's block: any loss => 0, otherwise shaped so that
// passivity pays more than forwarding.
double bandit_reward(bool any_loss_in_block, Arm role, const MabConfig& cfg);

// Seeded pseudo-random learning order over the nodes.
struct SelectionSchedule {
    std::vector<NodeId> permutation;
    int rounds_per_learner = 10;

    static SelectionSchedule make(int node_count, NodeId coordinator, bool exclude_coordinator,
                                  std::uint64_t seed, int rounds_per_learner = 10);

    NodeId learner_at(long round_index) const;
    long block_of(long round_index) const { return round_index / rounds_per_learner; }
};

// One completed learning block, for the per-block log.
struct MabLogRow {
    long block = 0;
    NodeId learner = -1;
    Arm drawn_role = Arm::active;
    double p_passive_before = 0.0;
    double reward = 0.0;
    bool reset_applied = false;
};

// Round-by-round orchestration of the sequential learning scheme. The
// coordinator opens a block only in a calm regime (recent rounds loss-free);
// under interference every node forwards.
class ForwarderSelection {
public:
    ForwarderSelection(int node_count, NodeId coordinator, const MabConfig& cfg,
                       std::uint64_t seed);

    // Roles to apply for this round (true = active forwarder).
    std::vector<char> roles_for_round(long round_index, bool calm);

    // Feed back the round outcome; may close a block and emit a log row.
    std::optional<MabLogRow> on_round_end(long round_index, bool any_loss);

    const BanditState& bandit(NodeId n) const { return bandits_[n]; }
    const SelectionSchedule& schedule() const { return schedule_; }
    int active_count() const;
    NodeId current_learner() const { return block_open_ ? learner_ : -1; }

private:
    MabConfig cfg_;
    NodeId coordinator_;
    SelectionSchedule schedule_;
    std::vector<BanditState> bandits_;  // role persists between a node's turns

    bool block_open_ = false;
    long block_index_ = -1;
    NodeId learner_ = -1;
    Arm drawn_ = Arm::active;
    double p_drawn_ = 0.5;
    double p_passive_before_ = 0.5;
    bool block_loss_ = false;
    bool punished_ = false;
    std::uint64_t seed_;
};

}  // namespace floodlab
