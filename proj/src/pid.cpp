#include "floodlab/pid.hpp"

#include <algorithm>
#include <cmath>

namespace floodlab {

PiStep pid_step(const PiState& state, double reliability, const PiConfig& cfg) {
    if (reliability < 0.0 || reliability > 1.0)
        throw ValidationError("pid_step: reliability outside [0,1]");

    PiStep out;
    out.state = state;
    const double e = 1.0 - reliability;
    if (e <= 0.0) {
        out.state.integral = std::clamp(state.integral * cfg.integral_leak, 0.0, cfg.integral_max);
        out.state.hold_counter = state.hold_counter + 1;
    } else {
        out.state.integral = std::clamp(state.integral + e, 0.0, cfg.integral_max);
        out.state.hold_counter = 0;
    }

    const double u = cfg.kp * e + cfg.ki * out.state.integral;
    const int target = std::clamp(cfg.n_base + static_cast<int>(std::lround(u * kNtxMax)), 1, kNtxMax);

    if (target > state.n_current) {
        out.state.n_current = target;  // respond to losses immediately
    } else if (target < state.n_current && out.state.hold_counter >= cfg.hold_rounds) {
        out.state.n_current = state.n_current - 1;  // ease down one step at a time
    }
    out.ntx = out.state.n_current;
    return out;
}

}  // namespace floodlab
