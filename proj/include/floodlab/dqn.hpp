// The 31-30-3 Q-network. Float weights are trained offline with one-step
// Q-learning; for deployment the weights are turned into scale-100
// fixed-point integers (2 bytes each, 4-byte accumulators) so inference can
// run on an integer-only target. Both forward paths live here, plus the
// versioned model file format.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "floodlab/core.hpp"
#include "floodlab/rng.hpp"

namespace floodlab {

using FeatureVector = Eigen::Matrix<double, kInputSize, 1>;
using QValues = Eigen::Vector3d;

inline constexpr int kHiddenSize = 30;
inline constexpr int kActionCount = 3;
inline constexpr int kQuantScale = 100;

struct MlpModel {
    Eigen::MatrixXd w1;  // kInputSize x kHiddenSize
    Eigen::VectorXd b1;  // kHiddenSize
    Eigen::MatrixXd w2;  // kHiddenSize x kActionCount
    Eigen::VectorXd b2;  // kActionCount

    static MlpModel zeros();
    // Uniform Glorot initialization.
    static MlpModel random_init(Rng& rng);
};

// q = w2' * relu(w1' * x + b1) + b2
QValues infer_float(const MlpModel& model, const FeatureVector& input);

struct QuantizedModel {
    using WeightMatrix = Eigen::Matrix<std::int16_t, Eigen::Dynamic, Eigen::Dynamic>;
    using WeightVector = Eigen::Matrix<std::int16_t, Eigen::Dynamic, 1>;
    WeightMatrix w1;
    WeightVector b1;
    WeightMatrix w2;
    WeightVector b2;
    int scale = kQuantScale;

    // 2 bytes per stored weight
    static constexpr int payload_bytes() {
        return (kInputSize * kHiddenSize + kHiddenSize + kHiddenSize * kActionCount + kActionCount) * 2;
    }
};

struct QuantizeResult {
    QuantizedModel model;
    int clamped_weights = 0;  // values that exceeded the 2-byte range
};

// Round-half-away-from-zero at the given scale, then clamp to int16 range.
QuantizeResult quantize(const MlpModel& model, int scale = kQuantScale);
MlpModel dequantize(const QuantizedModel& qmodel);

using QuantizedInput = std::array<std::int16_t, kInputSize>;
QuantizedInput quantize_input(const FeatureVector& input, int scale = kQuantScale);

// Integer-only forward pass. Accumulation is checked against the 4-byte
// range (throws instead of wrapping); each layer is rescaled back to
// `scale` with round-to-nearest, ReLU applied on integers. Returns Q-values
// at the model scale.
std::array<std::int32_t, kActionCount> infer_fixed(const QuantizedModel& qmodel,
                                                   const QuantizedInput& input);
std::array<std::int32_t, kActionCount> infer_fixed(const QuantizedModel& qmodel,
                                                   const FeatureVector& input);

int argmax3(const std::array<std::int32_t, kActionCount>& q);
int argmax3(const QValues& q);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    long iterations = 200000;
    double epsilon_start = 1.0;
    double epsilon_end = 0.01;
    long epsilon_decay_steps = 100000;
    double discount = 0.7;
    double learning_rate = 0.001;
    int batch_size = 32;
    int replay_capacity = 10000;
    int target_sync_interval = 1000;
};

// Exploration probability after `step` iterations: linear anneal, then flat.
double epsilon_at(const TrainConfig& cfg, long step);

struct Transition {
    FeatureVector state;
    int action = 0;
    double reward = 0.0;
    FeatureVector next_state;
};

// Anything that yields (state, action, reward, next state) transitions.
// save_state/load_state must round-trip the cursor so a checkpointed
// training run resumes bit-exactly.
class Environment {
public:
    virtual ~Environment() = default;
    virtual FeatureVector reset(Rng& rng) = 0;
    struct StepResult {
        double reward = 0.0;
        FeatureVector next_state;
        bool episode_end = false;
    };
    virtual StepResult step(int action, Rng& rng) = 0;
    virtual void save_state(std::ostream& os) const = 0;
    virtual void load_state(std::istream& is) = 0;
};

struct GradientBatchEntry {
    const FeatureVector* state;
    int action;
    double target;
};

// TD loss over a batch: mean of 0.5 * (Q(s,a) - y)^2. Returns the loss and
// accumulates gradients; exposed separately so tests can check the analytic
// gradients against finite differences.
double td_loss_and_gradients(const MlpModel& model,
                             const std::vector<GradientBatchEntry>& batch,
                             MlpModel& grads);

// Epsilon-greedy Q-learning with uniform experience replay and a periodically
// synced target network. Deterministic for a given seed and environment.
class Trainer {
public:
    Trainer(Environment& env, const TrainConfig& cfg, std::uint64_t seed);

    // Runs up to `max_iterations` more iterations (all remaining if < 0).
    // Returns false once the configured iteration count is reached.
    bool run(long max_iterations = -1);

    long iteration() const { return iteration_; }
    double last_loss() const { return last_loss_; }
    double current_epsilon() const { return epsilon_at(cfg_, iteration_); }
    const MlpModel& model() const { return model_; }

    void save_checkpoint(std::ostream& os) const;
    void load_checkpoint(std::istream& is);

private:
    void ensure_episode();
    void train_step();

    Environment& env_;
    TrainConfig cfg_;
    Rng rng_;
    MlpModel model_;
    MlpModel target_;
    std::vector<Transition> replay_;
    long replay_next_ = 0;  // ring-buffer write cursor
    long iteration_ = 0;
    double last_loss_ = 0.0;
    FeatureVector state_;
    bool episode_open_ = false;
};

MlpModel train(Environment& env, const TrainConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Model files: little-endian binary, header {magic, version, kind, scale,
// shapes}, then row-major weight arrays (w1, b1, w2, b2). Float models store
// 8-byte doubles, quantized models 2-byte integers.

void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);
void save_quantized(const QuantizedModel& qmodel, const std::string& path);
QuantizedModel load_quantized(const std::string& path);

// Peeks at the header. Returns "float", "quantized".
std::string model_file_kind(const std::string& path);

}  // namespace floodlab
