#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "propspan/model.hpp"
#include "propspan/rng.hpp"
#include "testutil.hpp"

using namespace propspan;

namespace {

Batch batch_1x1(double x, double y) {
    Batch b;
    b.num_rows = 1;
    b.num_labels = 1;
    b.probabilities = {x};
    b.targets = {y};
    return b;
}

ClassWeights weights_of(std::vector<double> w) {
    ClassWeights cw;
    cw.weights = std::move(w);
    return cw;
}

// Loss of a head on one example, for finite-difference checks of the full
// backward pass (no dropout so the trace is deterministic).
double head_loss(const MlpHead& head, const std::vector<double>& x, const std::vector<double>& y,
                 const ClassWeights& weights) {
    ForwardTrace tr = forward_trace(head, x, /*train_mode=*/false, nullptr);
    Batch b;
    b.num_rows = 1;
    b.num_labels = head.output_dim;
    b.probabilities = tr.probabilities;
    b.targets = y;
    return weighted_bce_loss(b, weights);
}

}  // namespace

TEST_CASE("class weights match the hand-computed 5-label fixture") {
    // |K| = 100 records; frequencies chosen to cover skew, balance, and ubiquity.
    ClassWeights cw = compute_class_weights({10, 50, 25, 100, 1}, 100);
    REQUIRE(cw.weights.size() == 5);
    CHECK(cw.weights[0] == doctest::Approx(9.0).epsilon(1e-15));   // (100-10)/10
    CHECK(cw.weights[1] == doctest::Approx(1.0).epsilon(1e-15));   // balanced: exactly 1
    CHECK(cw.weights[2] == doctest::Approx(3.0).epsilon(1e-15));   // (100-25)/25
    CHECK(cw.weights[3] == doctest::Approx(0.0).epsilon(1e-15));   // label on every record
    CHECK(cw.weights[4] == doctest::Approx(99.0).epsilon(1e-15));  // rarest
    CHECK(cw.weights[1] == 1.0);  // balanced class is exact, not approximate
}

TEST_CASE("class weight edge cases") {
    SUBCASE("absent label falls back to weight 1") {
        ClassWeights cw = compute_class_weights({0, 5}, 10);
        CHECK(cw.weights[0] == 1.0);
        CHECK(cw.weights[1] == 1.0);
    }
    SUBCASE("negative frequency is rejected") {
        CHECK_THROWS_AS(compute_class_weights({-1}, 10), std::invalid_argument);
    }
    SUBCASE("train size must be positive") {
        CHECK_THROWS_AS(compute_class_weights({1}, 0), std::invalid_argument);
    }
    SUBCASE("uniform weights are all ones") {
        ClassWeights cw = ClassWeights::uniform(3);
        CHECK(cw.weights == std::vector<double>{1.0, 1.0, 1.0});
    }
}

TEST_CASE("weighted bce matches hand computations") {
    SUBCASE("positive example with weight 2") {
        double loss = weighted_bce_loss(batch_1x1(0.8, 1.0), weights_of({2.0}));
        CHECK(loss == doctest::Approx(-2.0 * std::log(0.8)).epsilon(1e-12));
    }
    SUBCASE("negative example ignores the positive weight") {
        double loss = weighted_bce_loss(batch_1x1(0.8, 0.0), weights_of({2.0}));
        CHECK(loss == doctest::Approx(-std::log(0.2)).epsilon(1e-12));
    }
    SUBCASE("probabilities are clamped before the log") {
        double at_zero = weighted_bce_loss(batch_1x1(0.0, 1.0), weights_of({1.0}));
        double at_one = weighted_bce_loss(batch_1x1(1.0, 0.0), weights_of({1.0}));
        CHECK(at_zero == doctest::Approx(-std::log(kProbabilityEps)).epsilon(1e-9));
        CHECK(at_one == doctest::Approx(-std::log(kProbabilityEps)).epsilon(1e-9));
        CHECK(std::isfinite(at_zero));
        CHECK(std::isfinite(at_one));
    }
    SUBCASE("normalizer is rows x labels") {
        Batch b;
        b.num_rows = 2;
        b.num_labels = 2;
        b.probabilities = {0.8, 0.3, 0.6, 0.9};
        b.targets = {1.0, 0.0, 0.0, 1.0};
        double expect = -(std::log(0.8) + std::log(0.7) + std::log(0.4) + std::log(0.9)) / 4.0;
        CHECK(weighted_bce_loss(b, weights_of({1.0, 1.0})) ==
              doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("masked rows leave both the numerator and the normalizer") {
    Batch b;
    b.num_rows = 2;
    b.num_labels = 1;
    b.probabilities = {0.8, 0.1};
    b.targets = {1.0, 1.0};
    b.row_mask = {1, 0};
    // Equals the loss of the unmasked single-row batch.
    CHECK(weighted_bce_loss(b, weights_of({1.0})) ==
          doctest::Approx(-std::log(0.8)).epsilon(1e-12));

    b.row_mask = {0, 0};
    CHECK(weighted_bce_loss(b, weights_of({1.0})) == 0.0);
}

TEST_CASE("weighted bce equals the scalar oracle on random batches") {
    RngStream rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        Batch b = testutil::random_batch(rng, 16, 10, trial % 2 == 1);
        ClassWeights w = testutil::random_weights(rng, b.num_labels);
        CHECK(weighted_bce_loss(b, w) ==
              doctest::Approx(testutil::oracle_weighted_bce(b, w)).epsilon(1e-12));
    }
}

TEST_CASE("unit weights reduce the loss to plain bce") {
    RngStream rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        Batch b = testutil::random_batch(rng, 8, 6, false);
        ClassWeights ones = ClassWeights::uniform(b.num_labels);
        // Plain BCE computed inline.
        double total = 0.0;
        for (int n = 0; n < b.num_rows; ++n) {
            for (int k = 0; k < b.num_labels; ++k) {
                total += b.y(n, k) * std::log(b.x(n, k)) +
                         (1.0 - b.y(n, k)) * std::log(1.0 - b.x(n, k));
            }
        }
        double plain = -total / (static_cast<double>(b.num_rows) * b.num_labels);
        CHECK(weighted_bce_loss(b, ones) == doctest::Approx(plain).epsilon(1e-12));
    }
}

TEST_CASE("logit gradient matches finite differences on a small batch") {
    RngStream rng(77);
    Batch b = testutil::random_batch(rng, 6, 4, true);
    ClassWeights w = testutil::random_weights(rng, b.num_labels);
    std::vector<double> grad = loss_gradient(b, w);
    REQUIRE(grad.size() == b.probabilities.size());

    const double h = 1e-6;
    for (std::size_t i = 0; i < b.probabilities.size(); ++i) {
        double x = b.probabilities[i];
        // dz via dx: x = sigmoid(z) so dx/dz = x(1-x); FD in x-space then chain.
        Batch plus = b, minus = b;
        plus.probabilities[i] = x + h;
        minus.probabilities[i] = x - h;
        double dldx = (weighted_bce_loss(plus, w) - weighted_bce_loss(minus, w)) / (2.0 * h);
        double expect = dldx * x * (1.0 - x);
        int row = static_cast<int>(i) / b.num_labels;
        bool masked = !b.row_mask.empty() && b.row_mask[static_cast<std::size_t>(row)] == 0;
        if (masked) {
            CHECK(grad[i] == 0.0);
        } else {
            CHECK(grad[i] == doctest::Approx(expect).epsilon(1e-5));
        }
    }
}

TEST_CASE("head init is xavier-bounded, zero-biased, and seeded") {
    RngStream rng(3);
    MlpHead h = MlpHead::init(8, 6, 4, 0.1, rng);
    CHECK(h.input_dim == 8);
    CHECK(h.hidden_dim == 6);
    CHECK(h.output_dim == 4);
    double bound1 = std::sqrt(6.0 / (8 + 6));
    double bound2 = std::sqrt(6.0 / (6 + 4));
    for (double v : h.w1) {
        CHECK(v >= -bound1);
        CHECK(v <= bound1);
    }
    for (double v : h.w2) {
        CHECK(v >= -bound2);
        CHECK(v <= bound2);
    }
    for (double v : h.b1) CHECK(v == 0.0);
    for (double v : h.b2) CHECK(v == 0.0);

    RngStream rng2(3);
    MlpHead h2 = MlpHead::init(8, 6, 4, 0.1, rng2);
    CHECK(h == h2);
    RngStream rng3(4);
    MlpHead h3 = MlpHead::init(8, 6, 4, 0.1, rng3);
    CHECK(h.w1 != h3.w1);
}

TEST_CASE("forward computes sigmoid(w2 tanh(w1 x + b1) + b2)") {
    MlpHead h;
    h.input_dim = 2;
    h.hidden_dim = 2;
    h.output_dim = 1;
    h.w1 = {1.0, 0.0, 0.0, 1.0};
    h.b1 = {0.1, -0.1};
    h.w2 = {0.5, -0.25};
    h.b2 = {0.2};
    std::vector<double> x = {0.3, -0.2};
    std::vector<double> probs = h.forward(x, false, nullptr);
    double h1 = std::tanh(0.3 + 0.1);
    double h2 = std::tanh(-0.2 - 0.1);
    double z = 0.5 * h1 - 0.25 * h2 + 0.2;
    CHECK(probs[0] == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-15));
}

TEST_CASE("dropout scales surviving pre-activations in train mode only") {
    MlpHead h;
    h.input_dim = 1;
    h.hidden_dim = 16;
    h.output_dim = 1;
    h.dropout_rate = 0.5;
    h.w1.assign(16, 1.0);
    h.b1.assign(16, 0.0);
    h.w2.assign(16, 1.0);
    h.b2 = {0.0};

    RngStream rng(9);
    ForwardTrace tr = forward_trace(h, {0.4}, true, &rng);
    int dropped = 0;
    for (int i = 0; i < 16; ++i) {
        double scale = tr.dropout_scale[static_cast<std::size_t>(i)];
        bool is_dropped = scale == 0.0;
        bool is_kept = scale == doctest::Approx(2.0).epsilon(1e-15);
        CHECK((is_dropped || is_kept));
        if (is_dropped) ++dropped;
        // Dropout hits the pre-activation, then tanh.
        CHECK(tr.hidden[static_cast<std::size_t>(i)] ==
              doctest::Approx(std::tanh(scale * 0.4)).epsilon(1e-12));
    }
    CHECK(dropped > 0);   // with p=.5 over 16 units, both outcomes occur
    CHECK(dropped < 16);

    ForwardTrace eval = forward_trace(h, {0.4}, false, nullptr);
    for (double s : eval.dropout_scale) CHECK(s == 1.0);
}

TEST_CASE("backward gradients match finite differences for every parameter") {
    RngStream rng(13);
    MlpHead head = MlpHead::init(5, 4, 3, 0.0, rng);
    std::vector<double> x = {0.3, -0.8, 0.1, 0.9, -0.2};
    std::vector<double> y = {1.0, 0.0, 1.0};
    ClassWeights w = weights_of({2.0, 1.0, 0.5});

    ForwardTrace tr = forward_trace(head, x, false, nullptr);
    Batch b;
    b.num_rows = 1;
    b.num_labels = 3;
    b.probabilities = tr.probabilities;
    b.targets = y;
    std::vector<double> dz = loss_gradient(b, w);

    Gradients grads(head);
    backward_into(head, x, tr, dz.data(), grads);

    const double h = 1e-6;
    auto fd_check = [&](std::vector<double> MlpHead::* member, const std::vector<double>& analytic) {
        for (std::size_t i = 0; i < (head.*member).size(); ++i) {
            MlpHead plus = head, minus = head;
            (plus.*member)[i] += h;
            (minus.*member)[i] -= h;
            double fd = (head_loss(plus, x, y, w) - head_loss(minus, x, y, w)) / (2.0 * h);
            CHECK(analytic[i] == doctest::Approx(fd).epsilon(1e-4));
        }
    };
    fd_check(&MlpHead::w1, grads.w1);
    fd_check(&MlpHead::b1, grads.b1);
    fd_check(&MlpHead::w2, grads.w2);
    fd_check(&MlpHead::b2, grads.b2);
}

TEST_CASE("sgd steps are exact") {
    MlpHead head;
    head.input_dim = 1;
    head.hidden_dim = 1;
    head.output_dim = 1;
    head.w1 = {0.5};
    head.b1 = {0.1};
    head.w2 = {-0.3};
    head.b2 = {0.2};

    Gradients g(head);
    g.w1 = {0.2};
    g.b1 = {-0.4};
    g.w2 = {0.1};
    g.b2 = {0.3};

    SUBCASE("plain sgd") {
        Optimizer opt(OptimizerKind::Sgd, head, 0.0);
        opt.step(head, g, 0.1);
        CHECK(head.w1[0] == doctest::Approx(0.5 - 0.1 * 0.2).epsilon(1e-15));
        CHECK(head.b1[0] == doctest::Approx(0.1 + 0.1 * 0.4).epsilon(1e-15));
        CHECK(head.w2[0] == doctest::Approx(-0.3 - 0.1 * 0.1).epsilon(1e-15));
        CHECK(head.b2[0] == doctest::Approx(0.2 - 0.1 * 0.3).epsilon(1e-15));
    }
    SUBCASE("decoupled decay applies to weights, not biases") {
        Optimizer opt(OptimizerKind::Sgd, head, 0.5);
        opt.step(head, g, 0.1);
        CHECK(head.w1[0] ==
              doctest::Approx(0.5 - 0.1 * 0.5 * 0.5 - 0.1 * 0.2).epsilon(1e-15));
        CHECK(head.b1[0] == doctest::Approx(0.1 + 0.1 * 0.4).epsilon(1e-15));  // no decay
    }
}

TEST_CASE("adam first step follows the bias-corrected update") {
    MlpHead head;
    head.input_dim = 1;
    head.hidden_dim = 1;
    head.output_dim = 1;
    head.w1 = {1.0};
    head.b1 = {1.0};
    head.w2 = {1.0};
    head.b2 = {1.0};
    Gradients g(head);
    g.w1 = {0.5};
    g.b1 = {0.5};
    g.w2 = {-0.5};
    g.b2 = {0.0};

    Optimizer opt(OptimizerKind::Adam, head, 0.0);
    opt.step(head, g, 0.01);
    // Step 1: mhat = g, vhat = g^2, update = lr * g / (|g| + 1e-8).
    double expect = 0.01 * 0.5 / (0.5 + 1e-8);
    CHECK(head.w1[0] == doctest::Approx(1.0 - expect).epsilon(1e-12));
    CHECK(head.w2[0] == doctest::Approx(1.0 + expect).epsilon(1e-12));
    CHECK(head.b2[0] == 1.0);  // zero gradient, zero update
}

TEST_CASE("adamw decays weights but not biases; adam ignores decay") {
    MlpHead base;
    base.input_dim = 1;
    base.hidden_dim = 1;
    base.output_dim = 1;
    base.w1 = {1.0};
    base.b1 = {1.0};
    base.w2 = {1.0};
    base.b2 = {1.0};
    Gradients g(base);
    g.w1 = {0.5};
    g.b1 = {0.5};
    g.w2 = {0.5};
    g.b2 = {0.5};

    MlpHead adamw = base;
    Optimizer opt_w(OptimizerKind::AdamW, adamw, 0.1);
    opt_w.step(adamw, g, 0.01);
    double adam_update = 0.01 * 0.5 / (0.5 + 1e-8);
    CHECK(adamw.w1[0] == doctest::Approx(1.0 - 0.01 * 0.1 - adam_update).epsilon(1e-12));
    CHECK(adamw.b1[0] == doctest::Approx(1.0 - adam_update).epsilon(1e-12));  // bias exempt

    MlpHead adam = base;
    Optimizer opt_a(OptimizerKind::Adam, adam, 0.1);  // warns and drops the decay
    opt_a.step(adam, g, 0.01);
    CHECK(adam.w1[0] == doctest::Approx(1.0 - adam_update).epsilon(1e-12));
}

TEST_CASE("train config defaults per task") {
    TrainConfig a = default_train_config(Task::A);
    CHECK(a.dropout == 0.1);
    CHECK(a.max_sequence_length == 128);
    CHECK(a.batch_size == 8);
    CHECK(a.warmup == 0.0);
    CHECK(a.weight_decay == 0.0);
    CHECK(a.optimizer == OptimizerKind::Adam);
    CHECK(a.patience == 50);
    CHECK(a.learning_rate == 1e-5);

    TrainConfig b = default_train_config(Task::B);
    CHECK(b.max_sequence_length == 512);
    CHECK(b.batch_size == 8);
    CHECK(b.weight_decay == 0.01);
    CHECK(b.optimizer == OptimizerKind::AdamW);

    TrainConfig c = default_train_config(Task::C);
    CHECK(c.batch_size == 16);
    CHECK(c.warmup == 0.1);
    CHECK(c.weight_decay == 0.01);
    CHECK(c.optimizer == OptimizerKind::AdamW);
    TrainConfig ce = default_train_config(Task::C, true);
    CHECK(ce.batch_size == 32);
}

TEST_CASE("train config validation rejects bad values") {
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.dropout = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.warmup = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.validate();  // defaults are valid
}

TEST_CASE("optimizer names round-trip") {
    CHECK(optimizer_from_name("sgd") == OptimizerKind::Sgd);
    CHECK(optimizer_from_name("adam") == OptimizerKind::Adam);
    CHECK(optimizer_from_name("adamw") == OptimizerKind::AdamW);
    CHECK_THROWS_AS(optimizer_from_name("rmsprop"), std::invalid_argument);
}
