#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "propspan/corpus.hpp"
#include "propspan/features.hpp"
#include "propspan/model.hpp"
#include "propspan/spans.hpp"
#include "propspan/synth.hpp"
#include "propspan/train.hpp"
#include "testutil.hpp"

using namespace propspan;

namespace {

// One-dimensional constant feature, for hand-built heads.
class ConstExtractor : public FeatureExtractor {
public:
    int dim() const override { return 1; }
    const std::string& id() const override { return id_; }
    FeatureVector featurize(const MemeRecord&) const override {
        return FeatureVector{{1.0}, id_};
    }
    uint64_t state_hash() const override { return 1; }

private:
    std::string id_ = "const";
};

TrainConfig fast_config(uint64_t seed) {
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 8;
    cfg.max_epochs = 40;
    cfg.patience = 10;
    cfg.optimizer = OptimizerKind::Adam;
    cfg.dropout = 0.0;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("sequence training learns the planted correlations") {
    CorpusBundle corpus = make_planted_label_corpus(120, 40, 3, 2);
    TextFeaturizer featurizer =
        fit_text_featurizer(corpus.train, testutil::word_unigram_config(256));
    TrainConfig cfg = fast_config(1);
    cfg.hidden_dim = 64;
    TrainResult result = train_label_model(corpus.train, corpus.dev, featurizer, cfg);
    CHECK(result.best_dev_metric >= 0.9);
    CHECK(result.best_epoch >= 0);
    REQUIRE(!result.log.empty());

    // The stored best metric is the max over the log, at the logged epoch.
    double max_metric = -1.0;
    int argmax = -1;
    for (const TrainLogRow& row : result.log) {
        if (row.dev_metric > max_metric) {
            max_metric = row.dev_metric;
            argmax = row.epoch;
        }
    }
    CHECK(result.best_dev_metric == max_metric);
    CHECK(result.best_epoch == argmax);
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
    CorpusBundle corpus = make_planted_label_corpus(60, 20, 3, 5);
    TextFeaturizerConfig fcfg;
    fcfg.dim = 64;
    TextFeaturizer featurizer = fit_text_featurizer(corpus.train, fcfg);
    TrainConfig cfg = fast_config(7);
    cfg.max_epochs = 12;
    cfg.dropout = 0.2;  // exercise the rng path too

    TrainResult a = train_label_model(corpus.train, corpus.dev, featurizer, cfg);
    TrainResult b = train_label_model(corpus.train, corpus.dev, featurizer, cfg);
    CHECK(a.head == b.head);
    CHECK(a.best_dev_metric == b.best_dev_metric);
    CHECK(a.best_epoch == b.best_epoch);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].train_loss == b.log[i].train_loss);
        CHECK(a.log[i].dev_metric == b.log[i].dev_metric);
    }

    TrainConfig other = cfg;
    other.seed = 8;
    TrainResult c = train_label_model(corpus.train, corpus.dev, featurizer, other);
    CHECK(a.head != c.head);
}

TEST_CASE("early stopping halts after patience non-improving epochs") {
    CorpusBundle corpus = make_planted_label_corpus(40, 12, 2, 3);
    TextFeaturizer featurizer = fit_text_featurizer(corpus.train);

    SUBCASE("patience 0 with a frozen model stops at epoch 1") {
        TrainConfig cfg = fast_config(1);
        cfg.learning_rate = 1e-12;  // updates too small to change any prediction
        cfg.patience = 0;
        cfg.max_epochs = 50;
        TrainResult r = train_label_model(corpus.train, corpus.dev, featurizer, cfg);
        CHECK(r.log.size() == 2);  // epoch 0 sets the best, epoch 1 fails to beat it
        CHECK(r.best_epoch == 0);
    }
    SUBCASE("early-stopped runs end with exactly patience+1 flat epochs") {
        TrainConfig cfg = fast_config(1);
        cfg.patience = 3;
        cfg.max_epochs = 200;
        TrainResult r = train_label_model(corpus.train, corpus.dev, featurizer, cfg);
        if (r.log.size() < static_cast<std::size_t>(cfg.max_epochs)) {
            CHECK(static_cast<int>(r.log.size()) - 1 - r.best_epoch == cfg.patience + 1);
        }
    }
}

TEST_CASE("returned head is the best-dev checkpoint, not the last epoch") {
    CorpusBundle corpus = make_planted_label_corpus(60, 20, 3, 9);
    TextFeaturizer featurizer = fit_text_featurizer(corpus.train);
    TrainConfig cfg = fast_config(3);
    cfg.patience = 6;
    cfg.max_epochs = 30;
    TrainResult r = train_label_model(corpus.train, corpus.dev, featurizer, cfg);

    // Score the returned head on dev by hand; it must reproduce best_dev_metric.
    std::vector<LabelPrediction> preds;
    for (const MemeRecord& rec : corpus.dev.records) {
        std::set<int> ids = predict_labels(r.head, featurizer, rec, cfg.threshold);
        LabelPrediction p;
        p.id = rec.id;
        for (int id : ids) p.predicted.insert(corpus.train.vocabulary.label(id).name);
        for (int id : rec.labels) p.gold.insert(corpus.dev.vocabulary.label(id).name);
        preds.push_back(std::move(p));
    }
    CHECK(testutil::oracle_micro_f1(preds) == doctest::Approx(r.best_dev_metric).epsilon(1e-12));
}

TEST_CASE("class weights come from train frequencies unless disabled") {
    CorpusBundle corpus = make_planted_label_corpus(50, 10, 3, 11);
    TextFeaturizer featurizer = fit_text_featurizer(corpus.train);
    TrainConfig cfg = fast_config(1);
    cfg.max_epochs = 2;
    cfg.patience = 1;

    TrainResult weighted = train_label_model(corpus.train, corpus.dev, featurizer, cfg);
    ClassWeights expect = compute_class_weights(class_frequencies(corpus.train),
                                                static_cast<int64_t>(corpus.train.records.size()));
    CHECK(weighted.class_weights.weights == expect.weights);

    cfg.use_class_weights = false;
    TrainResult unweighted = train_label_model(corpus.train, corpus.dev, featurizer, cfg);
    CHECK(unweighted.class_weights.weights ==
          std::vector<double>(static_cast<std::size_t>(corpus.train.vocabulary.size()), 1.0));
}

TEST_CASE("prediction threshold is inclusive") {
    MlpHead head;
    head.input_dim = 1;
    head.hidden_dim = 1;
    head.output_dim = 1;
    head.w1 = {0.0};
    head.b1 = {0.0};
    head.w2 = {1.0};
    head.b2 = {0.0};  // logit 0 -> probability exactly 0.5

    ConstExtractor extractor;
    MemeRecord rec;
    rec.id = "r";
    rec.text = "x";
    rec.text_length = 1;
    CHECK(predict_labels(head, extractor, rec, 0.5) == std::set<int>{0});
    CHECK(predict_labels(head, extractor, rec, 0.5000001).empty());
}

TEST_CASE("token training learns cue-word spans") {
    CorpusBundle corpus = make_span_corpus(150, 40, 4);
    TokenFeaturizerConfig fcfg;
    fcfg.dim = 96;
    TokenFeaturizer featurizer(fcfg);
    ChunkTokenizer tokenizer(4, 64);
    TrainConfig cfg = fast_config(6);
    cfg.batch_size = 4;
    cfg.max_epochs = 30;
    cfg.patience = 8;
    TrainResult r = train_span_model(corpus.train, corpus.dev, featurizer, tokenizer, cfg);
    CHECK(r.best_dev_metric >= 0.7);

    // Determinism of the full token pipeline.
    TrainResult r2 = train_span_model(corpus.train, corpus.dev, featurizer, tokenizer, cfg);
    CHECK(r.head == r2.head);
    CHECK(r.best_dev_metric == r2.best_dev_metric);
}

TEST_CASE("span predictions are well-formed and improve with the trained head") {
    CorpusBundle corpus = make_span_corpus(120, 30, 8);
    TokenFeaturizer featurizer;
    ChunkTokenizer tokenizer(4, 64);
    TrainConfig cfg = fast_config(2);
    cfg.batch_size = 4;
    cfg.max_epochs = 25;
    cfg.patience = 8;
    TrainResult r = train_span_model(corpus.train, corpus.dev, featurizer, tokenizer, cfg);

    for (const MemeRecord& rec : corpus.dev.records) {
        std::vector<LabeledSpan> spans = predict_spans(r.head, featurizer, tokenizer, rec,
                                                       corpus.train.vocabulary, cfg.threshold);
        int last_start = -1;
        for (const LabeledSpan& s : spans) {
            CHECK(s.start >= 0);
            CHECK(s.start < s.end);
            CHECK(s.end <= rec.text_length);
            CHECK(!s.technique.name.empty());
            (void)last_start;
        }
    }
}

TEST_CASE("unknown dev labels stay in gold for scoring but not in targets") {
    Dataset train = load_dataset_from_string(
        R"([{"id":"1","text":"plantzero here","labels":["A"]},
            {"id":"2","text":"nothing much","labels":[]}])",
        Task::A);
    Dataset dev = load_dataset_from_string(
        R"([{"id":"3","text":"plantzero again","labels":["A","Mystery"]}])", Task::A);
    TextFeaturizer featurizer = fit_text_featurizer(train);
    SequenceData dev_data = build_sequence_data(dev, featurizer, train.vocabulary);
    REQUIRE(dev_data.targets.size() == 1);
    CHECK(dev_data.targets[0].size() == 1);  // train vocabulary has only "A"
    CHECK(dev_data.targets[0][0] == 1.0);
    CHECK(dev_data.gold_names[0] == std::set<std::string>{"A", "Mystery"});
}

TEST_CASE("warmup ramp trains without incident") {
    CorpusBundle corpus = make_planted_label_corpus(40, 12, 2, 13);
    TextFeaturizer featurizer = fit_text_featurizer(corpus.train);
    TrainConfig cfg = fast_config(1);
    cfg.warmup = 0.3;
    cfg.max_epochs = 10;
    TrainResult r = train_label_model(corpus.train, corpus.dev, featurizer, cfg);
    CHECK(std::isfinite(r.best_dev_metric));
    for (const TrainLogRow& row : r.log) CHECK(std::isfinite(row.train_loss));
}

TEST_CASE("exploding updates raise a training error") {
    CorpusBundle corpus = make_planted_label_corpus(30, 10, 2, 17);
    TextFeaturizer featurizer = fit_text_featurizer(corpus.train);
    TrainConfig cfg = fast_config(1);
    cfg.optimizer = OptimizerKind::Sgd;
    cfg.learning_rate = 1e308;
    cfg.max_epochs = 8;
    CHECK_THROWS_AS(train_label_model(corpus.train, corpus.dev, featurizer, cfg), TrainingError);
}

TEST_CASE("train log serializes to csv") {
    std::vector<TrainLogRow> log = {{0, 0.5, 0.25}, {1, 0.25, 0.75}};
    std::string csv = train_log_csv(log);
    CHECK(csv.substr(0, 27) == "epoch,train_loss,dev_metric");
    CHECK(csv.find("\n0,0.5,0.25\n") != std::string::npos);
    CHECK(csv.find("\n1,0.25,0.75\n") != std::string::npos);
}
