#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "propspan/corpus.hpp"

namespace propspan {

// Predictions are joined to gold by record id before scoring; labels are
// compared by name so predictions and gold may come from files with
// different vocabulary orders.
struct LabelPrediction {
    std::string id;
    std::set<std::string> predicted;
    std::set<std::string> gold;
};

struct SpanPrediction {
    std::string id;
    std::vector<LabeledSpan> predicted;
    std::vector<LabeledSpan> gold;
};

// Micro-averaged F1 over pooled (record, label) decisions; 1.0 when there are
// no decisions at all (TP = FP = FN = 0).
double micro_f1(const std::vector<LabelPrediction>& preds);

enum class MacroEmpty { Exclude, Zero };

// Unweighted mean of per-label F1. Labels absent from both gold and
// predictions across the whole split contribute 0 and are excluded from the
// mean under Exclude (the default); under Zero they stay in, which requires
// the label universe.
double macro_f1(const std::vector<LabelPrediction>& preds, MacroEmpty mode = MacroEmpty::Exclude,
                const std::vector<std::string>* universe = nullptr);

// Partial-match span F1: a predicted span earns |s∩t|/|s| precision credit
// against each same-label gold span, a gold span earns |s∩t|/|t| recall
// credit; credits are summed (not capped), pooled over records, and averaged
// over span counts. Both sides empty -> 1.0, exactly one empty -> 0.0.
double span_partial_f1(const std::vector<SpanPrediction>& preds);

struct ClasswiseRow {
    std::string label;
    int64_t train_count = 0;
    double f1 = 0.0;
};

// Per-label F1 for the top_n most train-frequent labels.
std::vector<ClasswiseRow> classwise_report(const std::vector<LabelPrediction>& preds,
                                           const std::vector<DistributionRow>& train_distribution,
                                           int top_n);

using LabelSetsById = std::map<std::string, std::set<std::string>>;

struct ModalitySplitScores {
    double textual_f1 = 0.0;
    double visual_f1 = 0.0;
};

// Visual-only instances for a record are gold_C \ gold_A. The textual score
// is micro-F1 with those instances removed from the pool; the visual score is
// micro-F1 restricted to them (vacuously 1.0 when the pool is empty).
ModalitySplitScores modality_split_f1(const LabelSetsById& gold_a, const LabelSetsById& gold_c,
                                      const LabelSetsById& preds);

struct RunResult {
    double dev_metric = 0.0;
    double test_metric = 0.0;
};

// Per-seed metric values; mean and population std are recomputed from the
// stored values on every call so there is no incremental drift.
struct RunSummary {
    std::vector<uint64_t> seeds;
    std::vector<double> dev_values;
    std::vector<double> test_values;

    double dev_mean() const;
    double dev_std() const;
    double test_mean() const;
    double test_std() const;
};

double mean_of(const std::vector<double>& values);
double population_std_of(const std::vector<double>& values);

// Runs training once per seed (best-dev checkpoint evaluated on dev and test)
// and aggregates.
RunSummary multi_seed_summary(const std::function<RunResult(uint64_t)>& run_fn,
                              const std::vector<uint64_t>& seeds);

// gold/pred joins with id checking; missing or extra ids raise ValidationError
// listing them.
std::vector<LabelPrediction> join_label_predictions(const Dataset& gold, const Dataset& preds);
std::vector<SpanPrediction> join_span_predictions(const Dataset& gold, const Dataset& preds);
LabelSetsById label_sets_by_id(const Dataset& dataset);

}  // namespace propspan
