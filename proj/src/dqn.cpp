#include "floodlab/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace floodlab {

MlpModel MlpModel::zeros() {
    MlpModel m;
    m.w1 = Eigen::MatrixXd::Zero(kInputSize, kHiddenSize);
    m.b1 = Eigen::VectorXd::Zero(kHiddenSize);
    m.w2 = Eigen::MatrixXd::Zero(kHiddenSize, kActionCount);
    m.b2 = Eigen::VectorXd::Zero(kActionCount);
    return m;
}

MlpModel MlpModel::random_init(Rng& rng) {
    MlpModel m = zeros();
    const double a1 = std::sqrt(6.0 / (kInputSize + kHiddenSize));
    const double a2 = std::sqrt(6.0 / (kHiddenSize + kActionCount));
    for (int i = 0; i < kInputSize; ++i)
        for (int j = 0; j < kHiddenSize; ++j) m.w1(i, j) = rng.uniform(-a1, a1);
    for (int i = 0; i < kHiddenSize; ++i)
        for (int j = 0; j < kActionCount; ++j) m.w2(i, j) = rng.uniform(-a2, a2);
    return m;
}

QValues infer_float(const MlpModel& model, const FeatureVector& input) {
    Eigen::VectorXd hidden = (model.w1.transpose() * input + model.b1).cwiseMax(0.0);
    return model.w2.transpose() * hidden + model.b2;
}

namespace {

std::int16_t quantize_weight(double w, int scale, int* clamped) {
    const double scaled = w * scale;
    double r = std::round(std::abs(scaled));  // round half away from zero
    if (scaled < 0.0) r = -r;
    if (r > 32767.0) {
        if (clamped) ++*clamped;
        return 32767;
    }
    if (r < -32767.0) {
        if (clamped) ++*clamped;
        return -32767;
    }
    return static_cast<std::int16_t>(r);
}

// Rescale an accumulator back to the weight scale, rounding to nearest
// (adds scale/2 toward the sign, then truncates toward zero).
std::int32_t rescale(std::int64_t acc, int scale) {
    const std::int64_t half = scale / 2;
    const std::int64_t shifted = acc >= 0 ? acc + half : acc - half;
    return static_cast<std::int32_t>(shifted / scale);
}

void check_acc(std::int64_t acc) {
    if (acc > std::numeric_limits<std::int32_t>::max() ||
        acc < std::numeric_limits<std::int32_t>::min())
        throw std::overflow_error("infer_fixed: 4-byte accumulator overflow");
}

}  // namespace

QuantizeResult quantize(const MlpModel& model, int scale) {
    QuantizeResult out;
    out.model.scale = scale;
    out.model.w1.resize(kInputSize, kHiddenSize);
    out.model.b1.resize(kHiddenSize);
    out.model.w2.resize(kHiddenSize, kActionCount);
    out.model.b2.resize(kActionCount);
    for (int i = 0; i < kInputSize; ++i)
        for (int j = 0; j < kHiddenSize; ++j)
            out.model.w1(i, j) = quantize_weight(model.w1(i, j), scale, &out.clamped_weights);
    for (int j = 0; j < kHiddenSize; ++j)
        out.model.b1(j) = quantize_weight(model.b1(j), scale, &out.clamped_weights);
    for (int i = 0; i < kHiddenSize; ++i)
        for (int j = 0; j < kActionCount; ++j)
            out.model.w2(i, j) = quantize_weight(model.w2(i, j), scale, &out.clamped_weights);
    for (int j = 0; j < kActionCount; ++j)
        out.model.b2(j) = quantize_weight(model.b2(j), scale, &out.clamped_weights);
    return out;
}

MlpModel dequantize(const QuantizedModel& q) {
    MlpModel m = MlpModel::zeros();
    const double inv = 1.0 / q.scale;
    m.w1 = q.w1.cast<double>() * inv;
    m.b1 = q.b1.cast<double>() * inv;
    m.w2 = q.w2.cast<double>() * inv;
    m.b2 = q.b2.cast<double>() * inv;
    return m;
}

QuantizedInput quantize_input(const FeatureVector& input, int scale) {
    QuantizedInput out;
    for (int i = 0; i < kInputSize; ++i) out[i] = quantize_weight(input(i), scale, nullptr);
    return out;
}

std::array<std::int32_t, kActionCount> infer_fixed(const QuantizedModel& q,
                                                   const QuantizedInput& input) {
    const int scale = q.scale;
    std::array<std::int32_t, kHiddenSize> hidden;
    for (int j = 0; j < kHiddenSize; ++j) {
        std::int64_t acc = static_cast<std::int64_t>(q.b1(j)) * scale;
        for (int i = 0; i < kInputSize; ++i) {
            acc += static_cast<std::int64_t>(q.w1(i, j)) * input[i];
            check_acc(acc);
        }
        const std::int32_t v = rescale(acc, scale);
        hidden[j] = v > 0 ? v : 0;
    }
    std::array<std::int32_t, kActionCount> out;
    for (int k = 0; k < kActionCount; ++k) {
        std::int64_t acc = static_cast<std::int64_t>(q.b2(k)) * scale;
        for (int j = 0; j < kHiddenSize; ++j) {
            acc += static_cast<std::int64_t>(q.w2(j, k)) * hidden[j];
            check_acc(acc);
        }
        out[k] = rescale(acc, scale);
    }
    return out;
}

std::array<std::int32_t, kActionCount> infer_fixed(const QuantizedModel& q,
                                                   const FeatureVector& input) {
    return infer_fixed(q, quantize_input(input, q.scale));
}

int argmax3(const std::array<std::int32_t, kActionCount>& q) {
    int best = 0;
    for (int i = 1; i < kActionCount; ++i)
        if (q[i] > q[best]) best = i;
    return best;
}

int argmax3(const QValues& q) {
    int best = 0;
    for (int i = 1; i < kActionCount; ++i)
        if (q(i) > q(best)) best = i;
    return best;
}

// ---------------------------------------------------------------------------
// Training

double epsilon_at(const TrainConfig& cfg, long step) {
    if (step >= cfg.epsilon_decay_steps) return cfg.epsilon_end;
    const double frac = static_cast<double>(step) / static_cast<double>(cfg.epsilon_decay_steps);
    return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
}

double td_loss_and_gradients(const MlpModel& model,
                             const std::vector<GradientBatchEntry>& batch,
                             MlpModel& grads) {
    grads = MlpModel::zeros();
    if (batch.empty()) return 0.0;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (const GradientBatchEntry& e : batch) {
        const FeatureVector& x = *e.state;
        Eigen::VectorXd z1 = model.w1.transpose() * x + model.b1;
        Eigen::VectorXd h = z1.cwiseMax(0.0);
        Eigen::VectorXd q = model.w2.transpose() * h + model.b2;
        const double delta = q(e.action) - e.target;
        loss += 0.5 * delta * delta * inv_b;

        const double dq = delta * inv_b;  // gradient only flows through the taken action
        grads.b2(e.action) += dq;
        grads.w2.col(e.action) += dq * h;
        Eigen::VectorXd dh = dq * model.w2.col(e.action);
        for (int j = 0; j < kHiddenSize; ++j)
            if (z1(j) <= 0.0) dh(j) = 0.0;
        grads.b1 += dh;
        grads.w1 += x * dh.transpose();
    }
    return loss;
}

Trainer::Trainer(Environment& env, const TrainConfig& cfg, std::uint64_t seed)
    : env_(env), cfg_(cfg), rng_(seed), model_(MlpModel::zeros()), target_(MlpModel::zeros()) {
    if (cfg_.iterations <= 0) throw ValidationError("train: iterations must be positive");
    if (cfg_.batch_size <= 0 || cfg_.replay_capacity < cfg_.batch_size)
        throw ValidationError("train: replay capacity must hold at least one batch");
    model_ = MlpModel::random_init(rng_);
    target_ = model_;
    replay_.reserve(cfg_.replay_capacity);
    state_.setZero();
}

void Trainer::ensure_episode() {
    if (!episode_open_) {
        state_ = env_.reset(rng_);
        episode_open_ = true;
    }
}

void Trainer::train_step() {
    ensure_episode();

    // behavior policy
    int action;
    if (rng_.uniform() < epsilon_at(cfg_, iteration_)) {
        action = rng_.uniform_int(kActionCount);
    } else {
        action = argmax3(infer_float(model_, state_));
    }
    Environment::StepResult res = env_.step(action, rng_);

    Transition tr{state_, action, res.reward, res.next_state};
    if (static_cast<int>(replay_.size()) < cfg_.replay_capacity) {
        replay_.push_back(std::move(tr));
    } else {
        replay_[replay_next_ % cfg_.replay_capacity] = std::move(tr);
    }
    ++replay_next_;

    if (res.episode_end)
        episode_open_ = false;
    else
        state_ = res.next_state;

    if (static_cast<int>(replay_.size()) >= cfg_.batch_size) {
        std::vector<GradientBatchEntry> batch;
        std::vector<double> targets(cfg_.batch_size);
        batch.reserve(cfg_.batch_size);
        std::vector<const Transition*> picked(cfg_.batch_size);
        for (int b = 0; b < cfg_.batch_size; ++b)
            picked[b] = &replay_[rng_.uniform_int(static_cast<int>(replay_.size()))];
        for (int b = 0; b < cfg_.batch_size; ++b) {
            const Transition& t = *picked[b];
            const QValues qn = infer_float(target_, t.next_state);
            targets[b] = t.reward + cfg_.discount * qn.maxCoeff();
            batch.push_back({&t.state, t.action, targets[b]});
        }
        MlpModel grads;
        last_loss_ = td_loss_and_gradients(model_, batch, grads);
        model_.w1 -= cfg_.learning_rate * grads.w1;
        model_.b1 -= cfg_.learning_rate * grads.b1;
        model_.w2 -= cfg_.learning_rate * grads.w2;
        model_.b2 -= cfg_.learning_rate * grads.b2;
    }

    ++iteration_;
    if (iteration_ % cfg_.target_sync_interval == 0) target_ = model_;
}

bool Trainer::run(long max_iterations) {
    long budget = max_iterations < 0 ? cfg_.iterations - iteration_ : max_iterations;
    while (budget > 0 && iteration_ < cfg_.iterations) {
        train_step();
        --budget;
    }
    return iteration_ < cfg_.iterations;
}

MlpModel train(Environment& env, const TrainConfig& cfg, std::uint64_t seed) {
    Trainer trainer(env, cfg, seed);
    trainer.run();
    return trainer.model();
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[4] = {'N', 'M', 'D', 'L'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kKindFloat = 0;
constexpr std::uint8_t kKindQuantized = 1;

struct CorruptModel : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw CorruptModel("model file: truncated");
}

void write_header(std::ostream& os, std::uint8_t kind, std::uint32_t scale) {
    os.write(kMagic, 4);
    write_pod(os, kVersion);
    write_pod(os, kind);
    write_pod(os, scale);
    write_pod(os, static_cast<std::uint32_t>(kInputSize));
    write_pod(os, static_cast<std::uint32_t>(kHiddenSize));
    write_pod(os, static_cast<std::uint32_t>(kActionCount));
}

std::uint8_t read_header(std::istream& is, std::uint32_t& scale) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw CorruptModel("model file: bad magic");
    std::uint32_t version;
    read_pod(is, version);
    if (version != kVersion) throw CorruptModel("model file: unsupported version");
    std::uint8_t kind;
    read_pod(is, kind);
    read_pod(is, scale);
    std::uint32_t in, hid, out;
    read_pod(is, in);
    read_pod(is, hid);
    read_pod(is, out);
    if (in != kInputSize || hid != kHiddenSize || out != kActionCount)
        throw CorruptModel("model file: unexpected shapes");
    return kind;
}

template <typename Scalar, typename Mat>
void write_matrix(std::ostream& os, const Mat& m) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) write_pod(os, static_cast<Scalar>(m(i, j)));
}

template <typename Scalar, typename Mat>
void read_matrix(std::istream& is, Mat& m) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) {
            Scalar v;
            read_pod(is, v);
            m(i, j) = v;
        }
}

void expect_eof(std::istream& is) {
    is.peek();
    if (!is.eof()) throw CorruptModel("model file: trailing bytes");
}

}  // namespace

void save_model(const MlpModel& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    write_header(os, kKindFloat, 1);
    write_matrix<double>(os, model.w1);
    write_matrix<double>(os, model.b1);
    write_matrix<double>(os, model.w2);
    write_matrix<double>(os, model.b2);
}

MlpModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::uint32_t scale;
    if (read_header(is, scale) != kKindFloat)
        throw CorruptModel("model file: expected a float model");
    MlpModel m = MlpModel::zeros();
    read_matrix<double>(is, m.w1);
    read_matrix<double>(is, m.b1);
    read_matrix<double>(is, m.w2);
    read_matrix<double>(is, m.b2);
    expect_eof(is);
    return m;
}

void save_quantized(const QuantizedModel& q, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    write_header(os, kKindQuantized, static_cast<std::uint32_t>(q.scale));
    write_matrix<std::int16_t>(os, q.w1);
    write_matrix<std::int16_t>(os, q.b1);
    write_matrix<std::int16_t>(os, q.w2);
    write_matrix<std::int16_t>(os, q.b2);
}

QuantizedModel load_quantized(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::uint32_t scale;
    if (read_header(is, scale) != kKindQuantized)
        throw CorruptModel("model file: expected a quantized model");
    QuantizedModel q;
    q.scale = static_cast<int>(scale);
    q.w1.resize(kInputSize, kHiddenSize);
    q.b1.resize(kHiddenSize);
    q.w2.resize(kHiddenSize, kActionCount);
    q.b2.resize(kActionCount);
    read_matrix<std::int16_t>(is, q.w1);
    read_matrix<std::int16_t>(is, q.b1);
    read_matrix<std::int16_t>(is, q.w2);
    read_matrix<std::int16_t>(is, q.b2);
    expect_eof(is);
    return q;
}

std::string model_file_kind(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::uint32_t scale;
    return read_header(is, scale) == kKindFloat ? "float" : "quantized";
}

// ---------------------------------------------------------------------------
// Checkpoints: everything needed to resume a run bit-exactly.

namespace {
constexpr char kCkptMagic[4] = {'N', 'C', 'K', '1'};

void write_model_blob(std::ostream& os, const MlpModel& m) {
    write_matrix<double>(os, m.w1);
    write_matrix<double>(os, m.b1);
    write_matrix<double>(os, m.w2);
    write_matrix<double>(os, m.b2);
}

void read_model_blob(std::istream& is, MlpModel& m) {
    read_matrix<double>(is, m.w1);
    read_matrix<double>(is, m.b1);
    read_matrix<double>(is, m.w2);
    read_matrix<double>(is, m.b2);
}
}  // namespace

void Trainer::save_checkpoint(std::ostream& os) const {
    os.write(kCkptMagic, 4);
    write_pod(os, iteration_);
    write_pod(os, replay_next_);
    write_pod(os, last_loss_);
    write_pod(os, episode_open_);
    write_model_blob(os, model_);
    write_model_blob(os, target_);
    write_matrix<double>(os, state_);
    write_pod(os, static_cast<std::uint64_t>(replay_.size()));
    for (const Transition& t : replay_) {
        write_matrix<double>(os, t.state);
        write_pod(os, t.action);
        write_pod(os, t.reward);
        write_matrix<double>(os, t.next_state);
    }
    std::ostringstream rng_state;
    rng_.save(rng_state);
    const std::string s = rng_state.str();
    write_pod(os, static_cast<std::uint64_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
    env_.save_state(os);
}

void Trainer::load_checkpoint(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kCkptMagic, 4) != 0)
        throw CorruptModel("checkpoint: bad magic");
    read_pod(is, iteration_);
    read_pod(is, replay_next_);
    read_pod(is, last_loss_);
    read_pod(is, episode_open_);
    read_model_blob(is, model_);
    read_model_blob(is, target_);
    read_matrix<double>(is, state_);
    std::uint64_t count;
    read_pod(is, count);
    replay_.clear();
    replay_.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Transition t;
        read_matrix<double>(is, t.state);
        read_pod(is, t.action);
        read_pod(is, t.reward);
        read_matrix<double>(is, t.next_state);
        replay_.push_back(std::move(t));
    }
    std::uint64_t rng_len;
    read_pod(is, rng_len);
    std::string s(rng_len, '\0');
    is.read(s.data(), static_cast<std::streamsize>(rng_len));
    if (!is) throw CorruptModel("checkpoint: truncated");
    std::istringstream rng_state(s);
    rng_.load(rng_state);
    env_.load_state(is);
}

}  // namespace floodlab
