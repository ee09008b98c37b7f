#pragma once

#include <cstdint>
#include <vector>

#include "propspan/corpus.hpp"
#include "propspan/rng.hpp"

namespace propspan {

inline constexpr double kProbabilityEps = 1e-7;

// Positive-class loss multipliers p[k] = (|K| - f[k]) / f[k] from train-set
// frequencies. Zero-frequency labels fall back to weight 1.0 with a warning;
// they can never fire a positive loss term anyway.
struct ClassWeights {
    std::vector<int64_t> frequencies;
    int64_t train_size = 0;
    std::vector<double> weights;

    static ClassWeights uniform(int num_labels);
};

ClassWeights compute_class_weights(const std::vector<int64_t>& frequencies, int64_t train_size);

// Row-major dense batch: num_rows x num_labels.
struct Batch {
    int num_rows = 0;
    int num_labels = 0;
    std::vector<double> probabilities;  // x, clamped to [eps, 1-eps] inside the loss
    std::vector<double> targets;        // y, multi-hot
    std::vector<uint8_t> row_mask;      // optional; 1 = use row, empty = all rows

    double& x(int n, int k) { return probabilities[idx(n, k)]; }
    double& y(int n, int k) { return targets[idx(n, k)]; }
    double x(int n, int k) const { return probabilities[idx(n, k)]; }
    double y(int n, int k) const { return targets[idx(n, k)]; }
    std::size_t idx(int n, int k) const {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(num_labels) +
               static_cast<std::size_t>(k);
    }
};

// Mean weighted binary cross entropy. Masked rows contribute nothing and are
// excluded from the N*d normalizer, so loss scale is independent of padding.
double weighted_bce_loss(const Batch& batch, const ClassWeights& weights);

// d loss / d logit for every (row, label); zero on masked rows. The gradient
// treats x as sigmoid(z), i.e. it ignores the epsilon clamp, which only
// matters beyond |z| ~ 16.
std::vector<double> loss_gradient(const Batch& batch, const ClassWeights& weights);

enum class OptimizerKind { Sgd, Adam, AdamW };

const char* optimizer_name(OptimizerKind k);
OptimizerKind optimizer_from_name(const std::string& name);

struct TrainConfig {
    double learning_rate = 1e-5;
    int batch_size = 8;
    int max_sequence_length = 128;
    int patience = 50;
    double weight_decay = 0.0;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double dropout = 0.0;
    uint64_t seed = 0;
    int max_epochs = 200;
    double warmup = 0.0;     // fraction of total steps ramped linearly
    int hidden_dim = 0;      // 0 -> feature dimension
    double threshold = 0.5;  // decision threshold, inclusive
    bool use_class_weights = true;
    int tokenizer_chunk_size = 4;

    void validate() const;
};

// Per-task defaults; everything else is overridden by config file then flags.
TrainConfig default_train_config(Task task, bool ensemble = false);

// Two linear layers with Tanh in between and sigmoid outputs:
//   sigmoid(W2 * tanh(dropout(W1 * feat + b1)) + b2)
// Dropout is inverted (active in train mode only).
struct MlpHead {
    int input_dim = 0;
    int hidden_dim = 0;
    int output_dim = 0;
    double dropout_rate = 0.0;
    std::vector<double> w1;  // hidden_dim x input_dim, row-major
    std::vector<double> b1;  // hidden_dim
    std::vector<double> w2;  // output_dim x hidden_dim
    std::vector<double> b2;  // output_dim

    static MlpHead init(int input_dim, int hidden_dim, int output_dim, double dropout_rate,
                        RngStream& rng);

    std::vector<double> forward(const std::vector<double>& features, bool train_mode,
                                RngStream* rng) const;

    bool finite() const;
    std::size_t parameter_count() const;

    friend bool operator==(const MlpHead&, const MlpHead&) = default;
};

// Forward pass that keeps the intermediates needed for backprop.
struct ForwardTrace {
    std::vector<double> pre_activation;  // after dropout
    std::vector<double> hidden;          // tanh output
    std::vector<double> probabilities;
    std::vector<double> dropout_scale;   // per hidden unit: 0 dropped, 1/(1-p) kept
};

ForwardTrace forward_trace(const MlpHead& head, const std::vector<double>& features,
                           bool train_mode, RngStream* rng);

struct Gradients {
    std::vector<double> w1, b1, w2, b2;

    explicit Gradients(const MlpHead& head)
        : w1(head.w1.size(), 0.0), b1(head.b1.size(), 0.0),
          w2(head.w2.size(), 0.0), b2(head.b2.size(), 0.0) {}
};

// Accumulates parameter gradients for one example given d loss / d logit.
void backward_into(const MlpHead& head, const std::vector<double>& features,
                   const ForwardTrace& trace, const double* dlogits, Gradients& grads);

class Optimizer {
public:
    Optimizer(OptimizerKind kind, const MlpHead& head, double weight_decay);

    // lr is the effective (possibly warmup-scaled) learning rate.
    void step(MlpHead& head, const Gradients& grads, double lr);

private:
    void step_params(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                     std::vector<double>& v, double lr, bool decay);

    OptimizerKind kind_;
    double weight_decay_;
    int64_t t_ = 0;
    std::vector<double> m_w1_, v_w1_, m_b1_, v_b1_, m_w2_, v_w2_, m_b2_, v_b2_;
};

}  // namespace propspan
