#include "propspan/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "propspan/eval.hpp"
#include "propspan/log.hpp"

namespace propspan {

namespace {

// Rows of one training example (a record): sequence tasks contribute a single
// row, the token task contributes one row per token plus a special-token mask.
struct ExampleView {
    const std::vector<std::vector<double>>* features = nullptr;
    const std::vector<std::vector<double>>* targets = nullptr;
    const std::vector<uint8_t>* mask = nullptr;  // null = all rows active
};

using DevMetricFn = std::function<double(const MlpHead&)>;

TrainResult train_core(const std::vector<ExampleView>& examples, int input_dim, int num_labels,
                       const ClassWeights& weights, const TrainConfig& cfg,
                       const DevMetricFn& dev_metric) {
    cfg.validate();
    if (examples.empty()) throw TrainingError("empty train split");
    if (num_labels < 1) throw TrainingError("train split has no labels");

    RngStream rng(cfg.seed);
    int hidden = cfg.hidden_dim > 0 ? cfg.hidden_dim : input_dim;
    MlpHead head = MlpHead::init(input_dim, hidden, num_labels, cfg.dropout, rng);
    Optimizer opt(cfg.optimizer, head, cfg.weight_decay);

    int64_t batches_per_epoch =
        (static_cast<int64_t>(examples.size()) + cfg.batch_size - 1) / cfg.batch_size;
    int64_t total_steps = batches_per_epoch * cfg.max_epochs;
    int64_t warmup_steps = static_cast<int64_t>(cfg.warmup * static_cast<double>(total_steps));

    TrainResult result;
    result.class_weights = weights;
    double best_metric = -1.0;
    int epochs_without_improvement = 0;

    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    int64_t step = 0;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        int64_t loss_rows = 0;

        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));

            int rows = 0;
            for (std::size_t e = begin; e < end; ++e)
                rows += static_cast<int>(examples[order[e]].features->size());

            Batch batch;
            batch.num_rows = rows;
            batch.num_labels = num_labels;
            batch.probabilities.resize(static_cast<std::size_t>(rows) *
                                       static_cast<std::size_t>(num_labels));
            batch.targets.resize(batch.probabilities.size());
            batch.row_mask.assign(static_cast<std::size_t>(rows), 1);

            std::vector<ForwardTrace> traces(static_cast<std::size_t>(rows));
            std::vector<const std::vector<double>*> row_features(static_cast<std::size_t>(rows));

            int r = 0;
            for (std::size_t e = begin; e < end; ++e) {
                const ExampleView& ex = examples[order[e]];
                for (std::size_t i = 0; i < ex.features->size(); ++i, ++r) {
                    const std::vector<double>& feat = (*ex.features)[i];
                    row_features[static_cast<std::size_t>(r)] = &feat;
                    bool active = !ex.mask || (*ex.mask)[i] != 0;
                    batch.row_mask[static_cast<std::size_t>(r)] = active ? 1 : 0;
                    traces[static_cast<std::size_t>(r)] = forward_trace(head, feat, true, &rng);
                    for (int k = 0; k < num_labels; ++k) {
                        batch.x(r, k) = traces[static_cast<std::size_t>(r)]
                                            .probabilities[static_cast<std::size_t>(k)];
                        batch.y(r, k) = (*ex.targets)[i][static_cast<std::size_t>(k)];
                    }
                }
            }

            double loss = weighted_bce_loss(batch, weights);
            if (!std::isfinite(loss))
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch starting at example " + std::to_string(begin));
            int active_rows = 0;
            for (uint8_t m : batch.row_mask) active_rows += m;
            loss_sum += loss * active_rows;
            loss_rows += active_rows;

            std::vector<double> dlogits = loss_gradient(batch, weights);
            Gradients grads(head);
            for (int row = 0; row < rows; ++row) {
                if (!batch.row_mask[static_cast<std::size_t>(row)]) continue;
                backward_into(head, *row_features[static_cast<std::size_t>(row)],
                              traces[static_cast<std::size_t>(row)],
                              dlogits.data() + batch.idx(row, 0), grads);
            }

            double lr = cfg.learning_rate;
            if (warmup_steps > 0 && step < warmup_steps)
                lr *= static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
            opt.step(head, grads, lr);
            ++step;

            if (!head.finite())
                throw TrainingError("non-finite parameters after update at epoch " +
                                    std::to_string(epoch) + " (learning rate too high?)");
        }

        double metric = dev_metric(head);
        result.log.push_back(TrainLogRow{
            epoch, loss_rows > 0 ? loss_sum / static_cast<double>(loss_rows) : 0.0, metric});

        if (metric > best_metric) {
            best_metric = metric;
            result.head = head;
            result.best_epoch = epoch;
            epochs_without_improvement = 0;
        } else {
            ++epochs_without_improvement;
            if (epochs_without_improvement > cfg.patience) break;
        }
    }

    result.best_dev_metric = best_metric;
    log_info("training finished: best dev metric " + std::to_string(best_metric) + " at epoch " +
             std::to_string(result.best_epoch) + " (" + std::to_string(result.log.size()) +
             " epochs run)");
    return result;
}

std::set<std::string> threshold_names(const std::vector<double>& probs,
                                      const LabelVocabulary& vocab, double threshold) {
    std::set<std::string> names;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] >= threshold) names.insert(vocab.label(static_cast<int>(k)).name);
    }
    return names;
}

}  // namespace

TrainResult train_sequence(const SequenceData& train, const SequenceData& dev, int num_labels,
                           const LabelVocabulary& vocab, const ClassWeights& weights,
                           const TrainConfig& cfg) {
    if (train.features.empty()) throw TrainingError("empty train split");
    int input_dim = static_cast<int>(train.features.front().size());

    // each record is a single-row example; wrap rows without copying
    std::vector<std::vector<std::vector<double>>> feat_wrap;
    std::vector<std::vector<std::vector<double>>> tgt_wrap;
    feat_wrap.reserve(train.features.size());
    tgt_wrap.reserve(train.features.size());
    for (std::size_t i = 0; i < train.features.size(); ++i) {
        feat_wrap.push_back({train.features[i]});
        tgt_wrap.push_back({train.targets[i]});
    }
    std::vector<ExampleView> examples(train.features.size());
    for (std::size_t i = 0; i < examples.size(); ++i)
        examples[i] = ExampleView{&feat_wrap[i], &tgt_wrap[i], nullptr};

    DevMetricFn dev_metric = [&](const MlpHead& head) {
        std::vector<LabelPrediction> preds;
        preds.reserve(dev.features.size());
        for (std::size_t i = 0; i < dev.features.size(); ++i) {
            std::vector<double> probs = head.forward(dev.features[i], false, nullptr);
            preds.push_back(LabelPrediction{std::to_string(i),
                                            threshold_names(probs, vocab, cfg.threshold),
                                            dev.gold_names[i]});
        }
        return micro_f1(preds);
    };

    return train_core(examples, input_dim, num_labels, weights, cfg, dev_metric);
}

TrainResult train_tokens(const TokenData& train, const TokenData& dev,
                         const LabelVocabulary& vocab, const ClassWeights& weights,
                         const TrainConfig& cfg) {
    if (train.items.empty()) throw TrainingError("empty train split");
    int input_dim = 0;
    for (const auto& item : train.items) {
        if (!item.token_features.empty()) {
            input_dim = static_cast<int>(item.token_features.front().size());
            break;
        }
    }
    if (input_dim == 0) throw TrainingError("train split has no tokens");

    std::vector<ExampleView> examples;
    examples.reserve(train.items.size());
    for (const auto& item : train.items)
        examples.push_back(ExampleView{&item.token_features, &item.token_targets, &item.token_mask});

    DevMetricFn dev_metric = [&](const MlpHead& head) {
        std::vector<SpanPrediction> preds;
        preds.reserve(dev.items.size());
        for (std::size_t i = 0; i < dev.items.size(); ++i) {
            const auto& item = dev.items[i];
            TokenLabelMatrix m(static_cast<int>(item.token_features.size()), head.output_dim);
            for (std::size_t j = 0; j < item.token_features.size(); ++j) {
                if (!item.token_mask[j]) continue;  // specials excluded before merging
                std::vector<double> probs = head.forward(item.token_features[j], false, nullptr);
                for (int k = 0; k < head.output_dim; ++k) {
                    if (probs[static_cast<std::size_t>(k)] >= cfg.threshold)
                        m.set(static_cast<int>(j), k, true);
                }
            }
            WordLabelSets words = merge_tokens_to_words(m, item.tokenized);
            preds.push_back(SpanPrediction{
                std::to_string(i), words_to_char_spans(words, item.tokenized, vocab),
                item.gold_spans});
        }
        return span_partial_f1(preds);
    };

    return train_core(examples, input_dim, vocab.size(), weights, cfg, dev_metric);
}

SequenceData build_sequence_data(const Dataset& dataset, const FeatureExtractor& extractor,
                                 const LabelVocabulary& train_vocab) {
    SequenceData data;
    data.features.reserve(dataset.records.size());
    data.targets.reserve(dataset.records.size());
    data.gold_names.reserve(dataset.records.size());
    for (const auto& rec : dataset.records) {
        data.features.push_back(extractor.featurize(rec).values);
        std::vector<double> target(static_cast<std::size_t>(train_vocab.size()), 0.0);
        std::set<std::string> names;
        for (int id : rec.labels) {
            const std::string& name = dataset.vocabulary.label(id).name;
            names.insert(name);
            int tid = train_vocab.id_of(name);
            if (tid >= 0) target[static_cast<std::size_t>(tid)] = 1.0;
        }
        data.targets.push_back(std::move(target));
        data.gold_names.push_back(std::move(names));
    }
    return data;
}

TokenData build_token_data(const Dataset& dataset, const TokenFeaturizer& featurizer,
                           const Tokenizer& tokenizer, const LabelVocabulary& train_vocab) {
    TokenData data;
    data.items.reserve(dataset.records.size());
    for (const auto& rec : dataset.records) {
        TokenData::Item item;
        item.tokenized = tokenizer.tokenize(rec.text);
        item.gold_spans = rec.spans;

        std::vector<FeatureVector> feats = featurizer.featurize_tokens(item.tokenized);
        item.token_features.reserve(feats.size());
        for (auto& f : feats) item.token_features.push_back(std::move(f.values));

        // remap span labels into the train vocabulary; unknown labels stay in
        // gold_spans for scoring but cannot be training targets
        std::vector<LabeledSpan> known;
        for (const auto& s : rec.spans) {
            int tid = train_vocab.id_of(s.technique.name);
            if (tid >= 0) known.push_back(LabeledSpan{s.start, s.end, train_vocab.label(tid)});
        }
        TokenLabelMatrix m = project_spans_to_tokens(known, item.tokenized, train_vocab.size());

        item.token_targets.resize(item.tokenized.tokens.size());
        item.token_mask.resize(item.tokenized.tokens.size());
        for (std::size_t j = 0; j < item.tokenized.tokens.size(); ++j) {
            item.token_mask[j] = item.tokenized.tokens[j].is_special ? 0 : 1;
            std::vector<double> row(static_cast<std::size_t>(train_vocab.size()), 0.0);
            for (int k = 0; k < train_vocab.size(); ++k) {
                if (m.get(static_cast<int>(j), k)) row[static_cast<std::size_t>(k)] = 1.0;
            }
            item.token_targets[j] = std::move(row);
        }
        data.items.push_back(std::move(item));
    }
    return data;
}

TrainResult train_label_model(const Dataset& train, const Dataset& dev,
                              const FeatureExtractor& extractor, const TrainConfig& cfg) {
    if (train.records.empty()) throw TrainingError("empty train split");
    if (train.vocabulary.size() == 0) throw TrainingError("train split has no labels");
    ClassWeights weights =
        cfg.use_class_weights
            ? compute_class_weights(class_frequencies(train),
                                    static_cast<int64_t>(train.records.size()))
            : ClassWeights::uniform(train.vocabulary.size());
    SequenceData train_data = build_sequence_data(train, extractor, train.vocabulary);
    SequenceData dev_data = build_sequence_data(dev, extractor, train.vocabulary);
    return train_sequence(train_data, dev_data, train.vocabulary.size(), train.vocabulary, weights,
                          cfg);
}

TrainResult train_span_model(const Dataset& train, const Dataset& dev,
                             const TokenFeaturizer& featurizer, const Tokenizer& tokenizer,
                             const TrainConfig& cfg) {
    if (train.records.empty()) throw TrainingError("empty train split");
    if (train.vocabulary.size() == 0) throw TrainingError("train split has no labels");
    ClassWeights weights =
        cfg.use_class_weights
            ? compute_class_weights(class_frequencies(train),
                                    static_cast<int64_t>(train.records.size()))
            : ClassWeights::uniform(train.vocabulary.size());
    TokenData train_data = build_token_data(train, featurizer, tokenizer, train.vocabulary);
    TokenData dev_data = build_token_data(dev, featurizer, tokenizer, train.vocabulary);
    return train_tokens(train_data, dev_data, train.vocabulary, weights, cfg);
}

std::set<int> predict_labels(const MlpHead& head, const FeatureExtractor& extractor,
                             const MemeRecord& record, double threshold) {
    std::vector<double> probs = head.forward(extractor.featurize(record).values, false, nullptr);
    std::set<int> out;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] >= threshold) out.insert(static_cast<int>(k));
    }
    return out;
}

std::vector<LabeledSpan> predict_spans(const MlpHead& head, const TokenFeaturizer& featurizer,
                                       const Tokenizer& tokenizer, const MemeRecord& record,
                                       const LabelVocabulary& vocab, double threshold) {
    TokenizedText t = tokenizer.tokenize(record.text);
    std::vector<FeatureVector> feats = featurizer.featurize_tokens(t);
    TokenLabelMatrix m(static_cast<int>(t.tokens.size()), vocab.size());
    for (std::size_t j = 0; j < t.tokens.size(); ++j) {
        if (t.tokens[j].is_special) continue;
        std::vector<double> probs = head.forward(feats[j].values, false, nullptr);
        for (int k = 0; k < vocab.size(); ++k) {
            if (probs[static_cast<std::size_t>(k)] >= threshold) m.set(static_cast<int>(j), k, true);
        }
    }
    WordLabelSets words = merge_tokens_to_words(m, t);
    return words_to_char_spans(words, t, vocab);
}

std::string train_log_csv(const std::vector<TrainLogRow>& log) {
    std::string out = "epoch,train_loss,dev_metric\n";
    char buf[128];
    for (const auto& row : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", row.epoch, row.train_loss,
                      row.dev_metric);
        out += buf;
    }
    return out;
}

}  // namespace propspan
