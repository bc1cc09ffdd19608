#include "floodlab/core.hpp"

#include "floodlab/simnet.hpp"

namespace floodlab {

double duty_cycle(const InterferencePattern& pattern) {
    if (pattern.kind == InterferenceKind::none) return 0.0;
    if (pattern.period_ms <= 0.0)
        throw ValidationError("interference pattern has non-positive period");
    if (pattern.burst_ms < 0.0 || pattern.burst_ms > pattern.period_ms)
        throw ValidationError("interference burst must lie within the period");
    return pattern.burst_ms / pattern.period_ms;
}

Metrics aggregate_metrics(std::span<const RoundRecord> rounds) {
    if (rounds.empty()) throw ValidationError("aggregate_metrics: no rounds");
    long delivered = 0;
    long destinations = 0;
    double radio_on_sum = 0.0;
    long radio_on_count = 0;
    for (const RoundRecord& round : rounds) {
        for (const FloodOutcome& slot : round.slots) {
            const int n = static_cast<int>(slot.received.size());
            for (NodeId node = 0; node < n; ++node) {
                radio_on_sum += slot.radio_on_ms[node];
                ++radio_on_count;
                if (node == slot.source) continue;
                ++destinations;
                if (slot.received[node]) ++delivered;
            }
        }
    }
    Metrics m;
    m.reliability_pct =
        destinations == 0 ? 100.0
                          : 100.0 * static_cast<double>(delivered) / static_cast<double>(destinations);
    m.avg_radio_on_ms = radio_on_count == 0 ? 0.0 : radio_on_sum / static_cast<double>(radio_on_count);
    return m;
}

const InterferencePattern& InterferenceTimeline::at(long round) const {
    static const InterferencePattern quiet{};
    const InterferencePattern* current = &quiet;
    for (const Segment& seg : segments) {
        if (seg.start_round > round) break;
        current = &seg.pattern;
    }
    return *current;
}

}  // namespace floodlab
