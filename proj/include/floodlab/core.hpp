// Shared vocabulary: identifiers, network parameters, feedback records,
// interference patterns and the two evaluation metrics.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace floodlab {

using NodeId = int;

// Raised for malformed inputs (bad files, out-of-range parameters).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Retransmission parameter bounds. The one-hot encoding spans 0..kNtxMax,
// but the coordinator never commands less than 1 globally.
inline constexpr int kNtxMax = 8;
inline constexpr int kOneHotWidth = kNtxMax + 1;  // 9
inline constexpr int kLowestK = 10;               // node subset fed to the DQN
inline constexpr int kHistoryLen = 2;             // loss-history flags
inline constexpr int kInputSize = 2 * kLowestK + kOneHotWidth + kHistoryLen;  // 31

static_assert(kInputSize == 31);

// Slot-level timing. slot_max_ms is global; the micro-slot length covers one
// 30-byte packet airtime (~0.96 ms at 250 kb/s) plus turnaround.
struct NetConfig {
    double slot_max_ms = 20.0;
    double microslot_ms = 1.2;
    double airtime_ms = 0.96;
    double round_period_s = 4.0;
    double stats_ewa = 0.25;       // weight of the newest round in running stats
    bool include_coordinator = true;  // coordinator participates in the K-lowest subset
};

enum class InterferenceKind { none, periodic_burst };

// Duty-cycle jammer: a burst of burst_ms repeated every period_ms.
struct InterferencePattern {
    InterferenceKind kind = InterferenceKind::none;
    double burst_ms = 0.0;
    double period_ms = 0.0;

    static InterferencePattern off() { return {}; }
    static InterferencePattern burst(double burst_ms, double period_ms) {
        return {InterferenceKind::periodic_burst, burst_ms, period_ms};
    }
};

// Fraction of time the jammer occupies the medium.
double duty_cycle(const InterferencePattern& pattern);

// What a node reports about itself: packet reception rate and mean radio-on
// time per slot. present = false means the coordinator got no feedback this
// round; consumers must then assume 0% reliability and a full slot of
// radio-on time.
struct NodeFeedback {
    double reliability = 0.0;
    double radio_on_ms = 0.0;
    bool present = false;
};

struct Metrics {
    double reliability_pct = 0.0;
    double avg_radio_on_ms = 0.0;
};

struct RoundRecord;  // defined in simnet.hpp

// Reliability = delivered destination-slots over all destination-slots;
// radio-on time averaged over every (node, slot) pair, empty slots included.
Metrics aggregate_metrics(std::span<const RoundRecord> rounds);

// Piecewise-constant interference schedule over round indices.
struct InterferenceTimeline {
    struct Segment {
        long start_round = 0;
        InterferencePattern pattern;
    };
    std::vector<Segment> segments;

    const InterferencePattern& at(long round) const;
};

}  // namespace floodlab
