// PI baseline controller: maps the reliability error onto a discrete
// retransmission count. Increases apply immediately; decreases are limited to
// one step per round and only after a run of loss-free rounds, to avoid the
// reliability dips rapid down-tuning causes.
#pragma once

#include "floodlab/core.hpp"

namespace floodlab {

struct PiConfig {
    double kp = 1.0;
    double ki = 0.25;
    double integral_max = 4.0;
    double integral_leak = 0.8;  // applied on loss-free rounds
    int hold_rounds = 3;         // loss-free rounds required before decreasing
    int n_base = 3;
};

struct PiState {
    double integral = 0.0;
    int hold_counter = 0;
    int n_current = 3;
};

struct PiStep {
    int ntx = 3;
    PiState state;
};

// e = 1 - reliability; u = kp*e + ki*I; target = n_base + round(u * n_max).
PiStep pid_step(const PiState& state, double reliability, const PiConfig& cfg = {});

}  // namespace floodlab
