#include "propspan/eval.hpp"

#include <algorithm>
#include <cmath>

namespace propspan {

namespace {

struct Counts {
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t fn = 0;

    double f1() const {
        int64_t denom = 2 * tp + fp + fn;
        if (denom == 0) return 1.0;
        return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    }
};

std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ", ";
        out += ids[i];
        if (i == 9 && ids.size() > 10) {
            out += ", ... (" + std::to_string(ids.size()) + " total)";
            break;
        }
    }
    return out;
}

template <typename Map>
void check_same_ids(const Map& a, const Map& b, const std::string& a_name,
                    const std::string& b_name) {
    std::vector<std::string> missing;
    for (const auto& [id, _] : a) {
        if (!b.count(id)) missing.push_back(id);
    }
    if (!missing.empty())
        throw ValidationError("", "ids present in " + a_name + " but missing from " + b_name +
                                      ": " + join_ids(missing));
    for (const auto& [id, _] : b) {
        if (!a.count(id)) missing.push_back(id);
    }
    if (!missing.empty())
        throw ValidationError("", "ids present in " + b_name + " but missing from " + a_name +
                                      ": " + join_ids(missing));
}

}  // namespace

double micro_f1(const std::vector<LabelPrediction>& preds) {
    Counts c;
    for (const auto& p : preds) {
        for (const auto& l : p.predicted) {
            if (p.gold.count(l)) {
                ++c.tp;
            } else {
                ++c.fp;
            }
        }
        for (const auto& l : p.gold) {
            if (!p.predicted.count(l)) ++c.fn;
        }
    }
    return c.f1();
}

double macro_f1(const std::vector<LabelPrediction>& preds, MacroEmpty mode,
                const std::vector<std::string>* universe) {
    std::map<std::string, Counts> per_label;
    if (mode == MacroEmpty::Zero && universe) {
        for (const auto& name : *universe) per_label[name];
    }
    for (const auto& p : preds) {
        for (const auto& l : p.predicted) {
            if (p.gold.count(l)) {
                ++per_label[l].tp;
            } else {
                ++per_label[l].fp;
            }
        }
        for (const auto& l : p.gold) {
            if (!p.predicted.count(l)) ++per_label[l].fn;
        }
    }
    double sum = 0.0;
    int64_t n = 0;
    for (const auto& [name, c] : per_label) {
        if (mode == MacroEmpty::Exclude && c.tp == 0 && c.fp == 0 && c.fn == 0) continue;
        double f1 = (c.tp == 0 && c.fp == 0 && c.fn == 0) ? 0.0 : c.f1();
        sum += f1;
        ++n;
    }
    if (n == 0) return 1.0;
    return sum / static_cast<double>(n);
}

double span_partial_f1(const std::vector<SpanPrediction>& preds) {
    double precision_credit = 0.0;
    double recall_credit = 0.0;
    int64_t num_pred = 0;
    int64_t num_gold = 0;
    for (const auto& p : preds) {
        num_pred += static_cast<int64_t>(p.predicted.size());
        num_gold += static_cast<int64_t>(p.gold.size());
        for (const auto& s : p.predicted) {
            for (const auto& t : p.gold) {
                if (s.technique.name != t.technique.name) continue;
                int overlap = std::min(s.end, t.end) - std::max(s.start, t.start);
                if (overlap <= 0) continue;
                precision_credit += static_cast<double>(overlap) / static_cast<double>(s.end - s.start);
                recall_credit += static_cast<double>(overlap) / static_cast<double>(t.end - t.start);
            }
        }
    }
    if (num_pred == 0 && num_gold == 0) return 1.0;
    if (num_pred == 0 || num_gold == 0) return 0.0;
    double precision = precision_credit / static_cast<double>(num_pred);
    double recall = recall_credit / static_cast<double>(num_gold);
    if (precision + recall <= 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

std::vector<ClasswiseRow> classwise_report(const std::vector<LabelPrediction>& preds,
                                           const std::vector<DistributionRow>& train_distribution,
                                           int top_n) {
    std::map<std::string, Counts> per_label;
    for (const auto& p : preds) {
        for (const auto& l : p.predicted) {
            if (p.gold.count(l)) {
                ++per_label[l].tp;
            } else {
                ++per_label[l].fp;
            }
        }
        for (const auto& l : p.gold) {
            if (!p.predicted.count(l)) ++per_label[l].fn;
        }
    }
    std::vector<ClasswiseRow> rows;
    for (const auto& dist : train_distribution) {
        if (static_cast<int>(rows.size()) >= top_n) break;
        Counts c;
        auto it = per_label.find(dist.label);
        if (it != per_label.end()) c = it->second;
        double f1 = (c.tp == 0 && c.fp == 0 && c.fn == 0) ? 0.0 : c.f1();
        rows.push_back(ClasswiseRow{dist.label, dist.count, f1});
    }
    return rows;
}

ModalitySplitScores modality_split_f1(const LabelSetsById& gold_a, const LabelSetsById& gold_c,
                                      const LabelSetsById& preds) {
    check_same_ids(gold_a, gold_c, "task A gold", "task C gold");
    check_same_ids(gold_c, preds, "gold", "predictions");

    Counts textual;
    Counts visual;
    for (const auto& [id, gc] : gold_c) {
        const auto& ga = gold_a.at(id);
        const auto& pred = preds.at(id);
        std::set<std::string> visual_only;
        for (const auto& l : gc) {
            if (!ga.count(l)) visual_only.insert(l);
        }
        for (const auto& l : pred) {
            if (visual_only.count(l)) {
                ++visual.tp;  // visual-only implies membership in gold_C
            } else if (gc.count(l)) {
                ++textual.tp;
            } else {
                ++textual.fp;
            }
        }
        for (const auto& l : gc) {
            if (pred.count(l)) continue;
            if (visual_only.count(l)) {
                ++visual.fn;
            } else {
                ++textual.fn;
            }
        }
    }
    return ModalitySplitScores{textual.f1(), visual.f1()};
}

double mean_of(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double population_std_of(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double mu = mean_of(values);
    double sq = 0.0;
    for (double v : values) sq += (v - mu) * (v - mu);
    return std::sqrt(sq / static_cast<double>(values.size()));
}

double RunSummary::dev_mean() const { return mean_of(dev_values); }
double RunSummary::dev_std() const { return population_std_of(dev_values); }
double RunSummary::test_mean() const { return mean_of(test_values); }
double RunSummary::test_std() const { return population_std_of(test_values); }

RunSummary multi_seed_summary(const std::function<RunResult(uint64_t)>& run_fn,
                              const std::vector<uint64_t>& seeds) {
    if (seeds.empty()) throw std::invalid_argument("multi_seed_summary needs at least one seed");
    RunSummary out;
    out.seeds = seeds;
    for (uint64_t seed : seeds) {
        RunResult r = run_fn(seed);
        out.dev_values.push_back(r.dev_metric);
        out.test_values.push_back(r.test_metric);
    }
    return out;
}

namespace {

std::set<std::string> label_names(const MemeRecord& rec, const LabelVocabulary& vocab) {
    std::set<std::string> names;
    for (int id : rec.labels) names.insert(vocab.label(id).name);
    return names;
}

template <typename T, typename F>
std::vector<T> join_by_id(const Dataset& gold, const Dataset& preds, F make) {
    std::map<std::string, const MemeRecord*> pred_by_id;
    for (const auto& r : preds.records) pred_by_id[r.id] = &r;

    std::vector<std::string> missing;
    for (const auto& g : gold.records) {
        if (!pred_by_id.count(g.id)) missing.push_back(g.id);
    }
    if (!missing.empty())
        throw ValidationError("", "gold ids missing from predictions: " + join_ids(missing));
    if (preds.records.size() != gold.records.size()) {
        std::set<std::string> gold_ids;
        for (const auto& g : gold.records) gold_ids.insert(g.id);
        for (const auto& p : preds.records) {
            if (!gold_ids.count(p.id)) missing.push_back(p.id);
        }
        throw ValidationError("", "prediction ids missing from gold: " + join_ids(missing));
    }

    std::vector<T> out;
    out.reserve(gold.records.size());
    for (const auto& g : gold.records) out.push_back(make(g, *pred_by_id.at(g.id)));
    return out;
}

}  // namespace

std::vector<LabelPrediction> join_label_predictions(const Dataset& gold, const Dataset& preds) {
    return join_by_id<LabelPrediction>(gold, preds, [&](const MemeRecord& g, const MemeRecord& p) {
        return LabelPrediction{g.id, label_names(p, preds.vocabulary), label_names(g, gold.vocabulary)};
    });
}

std::vector<SpanPrediction> join_span_predictions(const Dataset& gold, const Dataset& preds) {
    return join_by_id<SpanPrediction>(gold, preds, [&](const MemeRecord& g, const MemeRecord& p) {
        return SpanPrediction{g.id, p.spans, g.spans};
    });
}

LabelSetsById label_sets_by_id(const Dataset& dataset) {
    LabelSetsById out;
    for (const auto& rec : dataset.records) out[rec.id] = label_names(rec, dataset.vocabulary);
    return out;
}

}  // namespace propspan
