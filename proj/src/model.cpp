#include "propspan/model.hpp"

#include <algorithm>
#include <cmath>

#include "propspan/log.hpp"

namespace propspan {

ClassWeights ClassWeights::uniform(int num_labels) {
    ClassWeights w;
    w.frequencies.assign(static_cast<std::size_t>(num_labels), 0);
    w.train_size = 0;
    w.weights.assign(static_cast<std::size_t>(num_labels), 1.0);
    return w;
}

ClassWeights compute_class_weights(const std::vector<int64_t>& frequencies, int64_t train_size) {
    if (train_size < 1) throw std::invalid_argument("train_size must be >= 1");
    ClassWeights out;
    out.frequencies = frequencies;
    out.train_size = train_size;
    out.weights.resize(frequencies.size());
    for (std::size_t k = 0; k < frequencies.size(); ++k) {
        int64_t f = frequencies[k];
        if (f < 0) throw std::invalid_argument("negative class frequency at index " + std::to_string(k));
        if (f == 0) {
            log_warn("label index " + std::to_string(k) +
                     " is absent from the train split; positive weight falls back to 1.0");
            out.weights[k] = 1.0;
        } else {
            out.weights[k] = static_cast<double>(train_size - f) / static_cast<double>(f);
        }
    }
    return out;
}

namespace {

void check_batch(const Batch& batch, const ClassWeights& weights) {
    std::size_t cells = static_cast<std::size_t>(batch.num_rows) *
                        static_cast<std::size_t>(batch.num_labels);
    if (batch.probabilities.size() != cells || batch.targets.size() != cells)
        throw std::invalid_argument("batch matrices do not match num_rows x num_labels");
    if (!batch.row_mask.empty() && batch.row_mask.size() != static_cast<std::size_t>(batch.num_rows))
        throw std::invalid_argument("row mask length does not match num_rows");
    if (weights.weights.size() != static_cast<std::size_t>(batch.num_labels))
        throw std::invalid_argument("class weight vector does not match label count");
}

inline bool row_active(const Batch& batch, int n) {
    return batch.row_mask.empty() || batch.row_mask[static_cast<std::size_t>(n)] != 0;
}

inline double clamp_prob(double x) {
    return std::min(1.0 - kProbabilityEps, std::max(kProbabilityEps, x));
}

}  // namespace

double weighted_bce_loss(const Batch& batch, const ClassWeights& weights) {
    check_batch(batch, weights);
    double sum = 0.0;
    int64_t active_rows = 0;
    for (int n = 0; n < batch.num_rows; ++n) {
        if (!row_active(batch, n)) continue;
        ++active_rows;
        for (int k = 0; k < batch.num_labels; ++k) {
            double x = clamp_prob(batch.x(n, k));
            double y = batch.y(n, k);
            sum += weights.weights[static_cast<std::size_t>(k)] * y * std::log(x) +
                   (1.0 - y) * std::log1p(-x);
        }
    }
    if (active_rows == 0 || batch.num_labels == 0) return 0.0;
    return -sum / (static_cast<double>(active_rows) * static_cast<double>(batch.num_labels));
}

std::vector<double> loss_gradient(const Batch& batch, const ClassWeights& weights) {
    check_batch(batch, weights);
    int64_t active_rows = 0;
    for (int n = 0; n < batch.num_rows; ++n) {
        if (row_active(batch, n)) ++active_rows;
    }
    std::vector<double> grad(batch.probabilities.size(), 0.0);
    if (active_rows == 0 || batch.num_labels == 0) return grad;
    double inv = 1.0 / (static_cast<double>(active_rows) * static_cast<double>(batch.num_labels));
    for (int n = 0; n < batch.num_rows; ++n) {
        if (!row_active(batch, n)) continue;
        for (int k = 0; k < batch.num_labels; ++k) {
            double x = batch.x(n, k);
            double y = batch.y(n, k);
            double p = weights.weights[static_cast<std::size_t>(k)];
            grad[batch.idx(n, k)] = inv * (p * y * (x - 1.0) + (1.0 - y) * x);
        }
    }
    return grad;
}

const char* optimizer_name(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::Sgd: return "sgd";
        case OptimizerKind::Adam: return "adam";
        case OptimizerKind::AdamW: return "adamw";
    }
    return "?";
}

OptimizerKind optimizer_from_name(const std::string& name) {
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "adamw") return OptimizerKind::AdamW;
    throw std::invalid_argument("unknown optimizer: " + name);
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (max_sequence_length < 2) throw std::invalid_argument("max_sequence_length must be >= 2");
    if (patience < 0) throw std::invalid_argument("patience must be >= 0");
    if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    if (warmup < 0.0 || warmup > 1.0) throw std::invalid_argument("warmup must be in [0, 1]");
    if (hidden_dim < 0) throw std::invalid_argument("hidden_dim must be >= 0");
    if (tokenizer_chunk_size < 1) throw std::invalid_argument("tokenizer_chunk_size must be >= 1");
}

TrainConfig default_train_config(Task task, bool ensemble) {
    TrainConfig cfg;
    cfg.learning_rate = 1e-5;
    cfg.patience = 50;
    switch (task) {
        case Task::A:
            cfg.dropout = 0.1;
            cfg.max_sequence_length = 128;
            cfg.batch_size = 8;
            cfg.warmup = 0.0;
            cfg.weight_decay = 0.0;
            cfg.optimizer = OptimizerKind::Adam;
            break;
        case Task::B:
            cfg.dropout = 0.0;
            cfg.max_sequence_length = 512;
            cfg.batch_size = 8;
            cfg.warmup = 0.0;
            cfg.weight_decay = 0.01;
            cfg.optimizer = OptimizerKind::AdamW;
            break;
        case Task::C:
            cfg.dropout = 0.0;
            cfg.max_sequence_length = 128;
            cfg.batch_size = ensemble ? 32 : 16;
            cfg.warmup = 0.1;
            cfg.weight_decay = 0.01;
            cfg.optimizer = OptimizerKind::AdamW;
            break;
    }
    return cfg;
}

MlpHead MlpHead::init(int input_dim, int hidden_dim, int output_dim, double dropout_rate,
                      RngStream& rng) {
    if (input_dim < 1 || hidden_dim < 1 || output_dim < 1)
        throw std::invalid_argument("head dimensions must be >= 1");
    MlpHead h;
    h.input_dim = input_dim;
    h.hidden_dim = hidden_dim;
    h.output_dim = output_dim;
    h.dropout_rate = dropout_rate;
    auto xavier = [&rng](std::vector<double>& w, int fan_in, int fan_out, std::size_t count) {
        double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        w.resize(count);
        for (double& x : w) x = rng.uniform(-a, a);
    };
    xavier(h.w1, input_dim, hidden_dim,
           static_cast<std::size_t>(hidden_dim) * static_cast<std::size_t>(input_dim));
    h.b1.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    xavier(h.w2, hidden_dim, output_dim,
           static_cast<std::size_t>(output_dim) * static_cast<std::size_t>(hidden_dim));
    h.b2.assign(static_cast<std::size_t>(output_dim), 0.0);
    return h;
}

ForwardTrace forward_trace(const MlpHead& head, const std::vector<double>& features,
                           bool train_mode, RngStream* rng) {
    if (static_cast<int>(features.size()) != head.input_dim)
        throw std::invalid_argument("feature dim " + std::to_string(features.size()) +
                                    " does not match head input dim " +
                                    std::to_string(head.input_dim));
    ForwardTrace tr;
    tr.pre_activation.resize(static_cast<std::size_t>(head.hidden_dim));
    tr.hidden.resize(static_cast<std::size_t>(head.hidden_dim));
    tr.dropout_scale.assign(static_cast<std::size_t>(head.hidden_dim), 1.0);

    bool use_dropout = train_mode && head.dropout_rate > 0.0;
    if (use_dropout && !rng) throw std::invalid_argument("dropout in train mode needs an rng");
    double keep_scale = use_dropout ? 1.0 / (1.0 - head.dropout_rate) : 1.0;

    for (int hidx = 0; hidx < head.hidden_dim; ++hidx) {
        const double* row = head.w1.data() + static_cast<std::size_t>(hidx) *
                                                 static_cast<std::size_t>(head.input_dim);
        double acc = head.b1[static_cast<std::size_t>(hidx)];
        for (int i = 0; i < head.input_dim; ++i) acc += row[i] * features[static_cast<std::size_t>(i)];
        double scale = 1.0;
        if (use_dropout) scale = rng->bernoulli(head.dropout_rate) ? 0.0 : keep_scale;
        tr.dropout_scale[static_cast<std::size_t>(hidx)] = scale;
        double pre = acc * scale;
        tr.pre_activation[static_cast<std::size_t>(hidx)] = pre;
        tr.hidden[static_cast<std::size_t>(hidx)] = std::tanh(pre);
    }

    tr.probabilities.resize(static_cast<std::size_t>(head.output_dim));
    for (int k = 0; k < head.output_dim; ++k) {
        const double* row = head.w2.data() + static_cast<std::size_t>(k) *
                                                 static_cast<std::size_t>(head.hidden_dim);
        double acc = head.b2[static_cast<std::size_t>(k)];
        for (int hidx = 0; hidx < head.hidden_dim; ++hidx)
            acc += row[hidx] * tr.hidden[static_cast<std::size_t>(hidx)];
        tr.probabilities[static_cast<std::size_t>(k)] = 1.0 / (1.0 + std::exp(-acc));
    }
    return tr;
}

std::vector<double> MlpHead::forward(const std::vector<double>& features, bool train_mode,
                                     RngStream* rng) const {
    return forward_trace(*this, features, train_mode, rng).probabilities;
}

bool MlpHead::finite() const {
    double sum = 0.0;
    for (double x : w1) sum += x;
    for (double x : b1) sum += x;
    for (double x : w2) sum += x;
    for (double x : b2) sum += x;
    return std::isfinite(sum);
}

std::size_t MlpHead::parameter_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
}

void backward_into(const MlpHead& head, const std::vector<double>& features,
                   const ForwardTrace& trace, const double* dlogits, Gradients& grads) {
    std::vector<double> dhidden(static_cast<std::size_t>(head.hidden_dim), 0.0);
    for (int k = 0; k < head.output_dim; ++k) {
        double dz = dlogits[k];
        if (dz == 0.0) continue;
        std::size_t row = static_cast<std::size_t>(k) * static_cast<std::size_t>(head.hidden_dim);
        for (int hidx = 0; hidx < head.hidden_dim; ++hidx) {
            grads.w2[row + static_cast<std::size_t>(hidx)] +=
                dz * trace.hidden[static_cast<std::size_t>(hidx)];
            dhidden[static_cast<std::size_t>(hidx)] += dz * head.w2[row + static_cast<std::size_t>(hidx)];
        }
        grads.b2[static_cast<std::size_t>(k)] += dz;
    }
    for (int hidx = 0; hidx < head.hidden_dim; ++hidx) {
        double h = trace.hidden[static_cast<std::size_t>(hidx)];
        double da = dhidden[static_cast<std::size_t>(hidx)] * (1.0 - h * h) *
                    trace.dropout_scale[static_cast<std::size_t>(hidx)];
        if (da == 0.0) continue;
        std::size_t row = static_cast<std::size_t>(hidx) * static_cast<std::size_t>(head.input_dim);
        for (int i = 0; i < head.input_dim; ++i)
            grads.w1[row + static_cast<std::size_t>(i)] += da * features[static_cast<std::size_t>(i)];
        grads.b1[static_cast<std::size_t>(hidx)] += da;
    }
}

Optimizer::Optimizer(OptimizerKind kind, const MlpHead& head, double weight_decay)
    : kind_(kind), weight_decay_(weight_decay) {
    if (kind_ == OptimizerKind::Adam && weight_decay_ > 0.0) {
        log_warn("optimizer 'adam' ignores weight_decay; use 'adamw' for decoupled decay");
        weight_decay_ = 0.0;
    }
    if (kind_ != OptimizerKind::Sgd) {
        m_w1_.assign(head.w1.size(), 0.0);
        v_w1_.assign(head.w1.size(), 0.0);
        m_b1_.assign(head.b1.size(), 0.0);
        v_b1_.assign(head.b1.size(), 0.0);
        m_w2_.assign(head.w2.size(), 0.0);
        v_w2_.assign(head.w2.size(), 0.0);
        m_b2_.assign(head.b2.size(), 0.0);
        v_b2_.assign(head.b2.size(), 0.0);
    }
}

void Optimizer::step_params(std::vector<double>& p, const std::vector<double>& g,
                            std::vector<double>& m, std::vector<double>& v, double lr, bool decay) {
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    if (kind_ == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (decay && weight_decay_ > 0.0) p[i] -= lr * weight_decay_ * p[i];
            p[i] -= lr * g[i];
        }
        return;
    }
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        if (decay && weight_decay_ > 0.0) p[i] -= lr * weight_decay_ * p[i];
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

void Optimizer::step(MlpHead& head, const Gradients& grads, double lr) {
    ++t_;
    // biases are exempt from weight decay, as is standard
    step_params(head.w1, grads.w1, m_w1_, v_w1_, lr, true);
    step_params(head.b1, grads.b1, m_b1_, v_b1_, lr, false);
    step_params(head.w2, grads.w2, m_w2_, v_w2_, lr, true);
    step_params(head.b2, grads.b2, m_b2_, v_b2_, lr, false);
}

}  // namespace propspan
