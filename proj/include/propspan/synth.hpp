#pragma once

#include <memory>
#include <string>
#include <vector>

#include "propspan/corpus.hpp"
#include "propspan/features.hpp"

namespace propspan {

// Deterministic synthetic corpora. Every record is keyed by (seed, index) so
// regenerating a bundle, or the matching bundle for another task, yields
// identical records: task A and task C bundles built from the same options
// share ids, texts and textual labels, with task C adding visual-only label
// instances.

struct CorpusBundle {
    Dataset train;
    Dataset dev;
    Dataset test;
};

struct TechniqueCorpusOptions {
    int train_records = 687;  // 951 total in roughly 10:1:3
    int dev_records = 63;
    int test_records = 201;
    uint64_t seed = 1;
    int num_textual_labels = 20;
    int num_visual_labels = 2;     // extra labels only task C can see
    double cue_probability = 0.8;  // chance an active label leaves its cue word in the text
};

CorpusBundle make_technique_corpus(Task task, const TechniqueCorpusOptions& opts = {});

// Region features for a task C technique corpus: keyed noise plus planted
// directions for each record's visual-only label instances.
VisualFeatureStore make_technique_visual_store(const TechniqueCorpusOptions& opts, int dv = 64,
                                               int regions = 36);

const std::vector<std::string>& technique_label_names();

// Linearly separable multi-label set: every active label plants its cue word.
CorpusBundle make_planted_label_corpus(int train_n, int dev_n, int num_labels, uint64_t seed);

// Single-label set with the positive class at `positive_rate` and a noisy cue
// word, so an unweighted classifier tends to under-predict the minority.
CorpusBundle make_imbalanced_corpus(int train_n, int dev_n, double positive_rate, uint64_t seed);

// Task C set where the target label fires only when a text flag and a visual
// flag are both present; neither modality alone separates it.
struct MultimodalCorpus {
    Dataset train;
    Dataset dev;
    Dataset test;
    std::shared_ptr<VisualFeatureStore> store;
};

MultimodalCorpus make_multimodal_corpus(int train_n, int dev_n, int test_n, int dv, int regions,
                                        uint64_t seed);

// Task B set with word-aligned gold spans over distinctive cue words.
CorpusBundle make_span_corpus(int train_n, int dev_n, uint64_t seed);

}  // namespace propspan
