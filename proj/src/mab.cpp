#include "floodlab/mab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "floodlab/rng.hpp"

namespace floodlab {

ArmProbabilities arm_probability(const BanditState& state, double gamma_explore) {
    const double total = state.w_active + state.w_passive;
    ArmProbabilities p;
    p.active = (1.0 - gamma_explore) * state.w_active / total + gamma_explore / 2.0;
    p.passive = (1.0 - gamma_explore) * state.w_passive / total + gamma_explore / 2.0;
    return p;
}

void update_weight(BanditState& state, Arm chosen, double reward, double p_chosen,
                   double gamma_explore) {
    const double factor = std::exp(gamma_explore * reward / (2.0 * p_chosen));
    if (chosen == Arm::active)
        state.w_active *= factor;
    else
        state.w_passive *= factor;
    // keep weights bounded; scaling both preserves the distribution
    const double m = std::max(state.w_active, state.w_passive);
    if (m > 1e12) {
        state.w_active /= m;
        state.w_passive /= m;
    }
}

void punish_breaking(BanditState& state, double initial_w) {
    state.w_passive = initial_w;
    state.role = Arm::active;
}

double bandit_reward(bool any_loss_in_block, Arm role, const MabConfig& cfg) {
    if (any_loss_in_block) return 0.0;
    return role == Arm::passive ? cfg.reward_passive : cfg.reward_active;
}

SelectionSchedule SelectionSchedule::make(int node_count, NodeId coordinator,
                                          bool exclude_coordinator, std::uint64_t seed,
                                          int rounds_per_learner) {
    SelectionSchedule s;
    s.rounds_per_learner = rounds_per_learner;
    for (NodeId n = 0; n < node_count; ++n)
        if (!(exclude_coordinator && n == coordinator)) s.permutation.push_back(n);
    // Fisher-Yates with the project RNG
    Rng rng(mix_seed(seed, 0x6d61625f6f726465ULL));
    for (int i = static_cast<int>(s.permutation.size()) - 1; i > 0; --i) {
        const int j = rng.uniform_int(i + 1);
        std::swap(s.permutation[i], s.permutation[j]);
    }
    return s;
}

NodeId SelectionSchedule::learner_at(long round_index) const {
    if (permutation.empty()) return -1;
    const long block = round_index / rounds_per_learner;
    return permutation[block % static_cast<long>(permutation.size())];
}

ForwarderSelection::ForwarderSelection(int node_count, NodeId coordinator, const MabConfig& cfg,
                                       std::uint64_t seed)
    : cfg_(cfg),
      coordinator_(coordinator),
      schedule_(SelectionSchedule::make(node_count, coordinator, cfg.exclude_coordinator, seed,
                                        cfg.rounds_per_learner)),
      bandits_(node_count),
      seed_(seed) {
    for (BanditState& b : bandits_) {
        b.w_active = cfg.initial_w;
        b.w_passive = cfg.initial_w;
    }
}

std::vector<char> ForwarderSelection::roles_for_round(long round_index, bool calm) {
    if (!calm && !block_open_) {
        // interference regime: everyone forwards, learning paused
        return std::vector<char>(bandits_.size(), 1);
    }

    const long block = schedule_.block_of(round_index);
    if (!block_open_ && round_index % cfg_.rounds_per_learner == 0) {
        // open a new block: the scheduled learner draws its role once
        learner_ = schedule_.learner_at(round_index);
        if (learner_ >= 0) {
            block_open_ = true;
            block_index_ = block;
            block_loss_ = false;
            punished_ = false;
            BanditState& b = bandits_[learner_];
            const ArmProbabilities p = arm_probability(b, cfg_.gamma_explore);
            p_passive_before_ = p.passive;
            Rng draw(mix_seed(seed_, 0x626c6f636bULL + static_cast<std::uint64_t>(block)));
            drawn_ = draw.uniform() < p.passive ? Arm::passive : Arm::active;
            p_drawn_ = drawn_ == Arm::passive ? p.passive : p.active;
            b.role = drawn_;
        }
    }

    std::vector<char> roles(bandits_.size());
    for (std::size_t n = 0; n < roles.size(); ++n)
        roles[n] = static_cast<char>(bandits_[n].role == Arm::active);
    return roles;
}

std::optional<MabLogRow> ForwarderSelection::on_round_end(long round_index, bool any_loss) {
    if (!block_open_ || schedule_.block_of(round_index) != block_index_) return std::nullopt;

    if (any_loss) {
        block_loss_ = true;
        if (drawn_ == Arm::passive && !punished_) {
            // the learner tried passivity and the network broke
            punish_breaking(bandits_[learner_], cfg_.initial_w);
            punished_ = true;
        }
    }

    const bool last_round_of_block =
        (round_index + 1) % cfg_.rounds_per_learner == 0;
    if (!last_round_of_block) return std::nullopt;

    // close the block: reward the drawn arm over the whole block
    const double reward = bandit_reward(block_loss_, drawn_, cfg_);
    update_weight(bandits_[learner_], drawn_, reward, p_drawn_, cfg_.gamma_explore);

    MabLogRow row;
    row.block = block_index_;
    row.learner = learner_;
    row.drawn_role = drawn_;
    row.p_passive_before = p_passive_before_;
    row.reward = reward;
    row.reset_applied = punished_;
    block_open_ = false;
    learner_ = -1;
    return row;
}

int ForwarderSelection::active_count() const {
    return static_cast<int>(
        std::count_if(bandits_.begin(), bandits_.end(),
                      [](const BanditState& b) { return b.role == Arm::active; }));
}

}  // namespace floodlab
