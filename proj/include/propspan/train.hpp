#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "propspan/corpus.hpp"
#include "propspan/features.hpp"
#include "propspan/model.hpp"
#include "propspan/spans.hpp"

namespace propspan {

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainLogRow {
    int epoch = 0;
    double train_loss = 0.0;
    double dev_metric = 0.0;
};

struct TrainResult {
    MlpHead head;  // best-dev checkpoint, never the last epoch
    std::vector<TrainLogRow> log;
    double best_dev_metric = 0.0;
    int best_epoch = -1;
    ClassWeights class_weights;
};

// One feature/target row per record (tasks A and C).
struct SequenceData {
    std::vector<std::vector<double>> features;
    std::vector<std::vector<double>> targets;      // multi-hot over the train vocabulary
    std::vector<std::set<std::string>> gold_names;  // for dev scoring
};

// One entry per record, rows are tokens (task B).
struct TokenData {
    struct Item {
        std::vector<std::vector<double>> token_features;
        std::vector<std::vector<double>> token_targets;
        std::vector<uint8_t> token_mask;  // 0 = special token, excluded from the loss
        TokenizedText tokenized;
        std::vector<LabeledSpan> gold_spans;
    };
    std::vector<Item> items;
};

// Mini-batch training with early stopping: after each epoch the dev metric is
// computed (micro-F1 for sequence labels, partial-match span F1 for tokens)
// and training halts once `patience` consecutive epochs bring no improvement.
TrainResult train_sequence(const SequenceData& train, const SequenceData& dev, int num_labels,
                           const LabelVocabulary& vocab, const ClassWeights& weights,
                           const TrainConfig& cfg);

TrainResult train_tokens(const TokenData& train, const TokenData& dev,
                         const LabelVocabulary& vocab, const ClassWeights& weights,
                         const TrainConfig& cfg);

// Featurize-then-train wrappers over whole datasets.
SequenceData build_sequence_data(const Dataset& dataset, const FeatureExtractor& extractor,
                                 const LabelVocabulary& train_vocab);
TokenData build_token_data(const Dataset& dataset, const TokenFeaturizer& featurizer,
                           const Tokenizer& tokenizer, const LabelVocabulary& train_vocab);

TrainResult train_label_model(const Dataset& train, const Dataset& dev,
                              const FeatureExtractor& extractor, const TrainConfig& cfg);
TrainResult train_span_model(const Dataset& train, const Dataset& dev,
                             const TokenFeaturizer& featurizer, const Tokenizer& tokenizer,
                             const TrainConfig& cfg);

// Label k is predicted iff probability >= threshold (inclusive).
std::set<int> predict_labels(const MlpHead& head, const FeatureExtractor& extractor,
                             const MemeRecord& record, double threshold = 0.5);

std::vector<LabeledSpan> predict_spans(const MlpHead& head, const TokenFeaturizer& featurizer,
                                       const Tokenizer& tokenizer, const MemeRecord& record,
                                       const LabelVocabulary& vocab, double threshold = 0.5);

std::string train_log_csv(const std::vector<TrainLogRow>& log);

}  // namespace propspan
