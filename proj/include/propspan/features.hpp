#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "propspan/corpus.hpp"
#include "propspan/spans.hpp"

namespace propspan {

struct FeatureVector {
    std::vector<double> values;
    std::string source;

    int dim() const { return static_cast<int>(values.size()); }
};

// Frozen record-level feature producer. featurize must be pure; training a
// downstream head never mutates extractor state (state_hash checks this).
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual int dim() const = 0;
    virtual const std::string& id() const = 0;
    virtual FeatureVector featurize(const MemeRecord& record) const = 0;
    virtual uint64_t state_hash() const = 0;
};

struct TextFeaturizerConfig {
    int dim = 256;
    uint64_t hash_seed = 0x5EED5EED5EED5EEDull;
    int word_ngram_min = 1;
    int word_ngram_max = 2;
    int char_ngram_min = 3;
    int char_ngram_max = 5;
    bool lowercase = true;
};

// Hashed word/char n-gram counts weighted by idf = ln(Ndocs / df), learned on
// the train split and frozen. Output is L2-normalized (zero vectors pass
// through unnormalized).
class TextFeaturizer : public FeatureExtractor {
public:
    TextFeaturizer() = default;
    explicit TextFeaturizer(TextFeaturizerConfig cfg);

    int dim() const override { return cfg_.dim; }
    const std::string& id() const override { return id_; }
    FeatureVector featurize(const MemeRecord& record) const override;
    uint64_t state_hash() const override;

    FeatureVector featurize_text(const std::string& text) const;
    bool fitted() const { return fitted_; }
    const TextFeaturizerConfig& config() const { return cfg_; }
    const std::vector<double>& idf() const { return idf_; }

    // Raw hashed term counts for one text, before idf and normalization.
    std::vector<double> hashed_counts(const std::string& text) const;
    // Bucket for one explicit n-gram key (exposed so tests can enumerate).
    int bucket_of(const std::string& kind, const std::string& gram) const;

    static TextFeaturizer restore(TextFeaturizerConfig cfg, std::vector<double> idf);

private:
    friend TextFeaturizer fit_text_featurizer(const Dataset&, const TextFeaturizerConfig&);

    TextFeaturizerConfig cfg_;
    std::vector<double> idf_;
    bool fitted_ = false;
    std::string id_ = "text-hash";
};

// idf statistics come from the train split only; the featurizer is immutable
// afterwards.
TextFeaturizer fit_text_featurizer(const Dataset& train, const TextFeaturizerConfig& cfg = {});

struct TokenFeaturizerConfig {
    int dim = 128;
    int window = 1;  // neighbor tokens on each side
    uint64_t hash_seed = 0x70CE770CE770CE77ull;
    int char_ngram_min = 3;
    int char_ngram_max = 5;
    bool lowercase = true;
};

// Per-token hashed features: the token's own text and char n-grams plus
// neighbor token texts tagged by relative offset. Stateless, frozen by
// construction. Special tokens map to the reserved zero vector.
class TokenFeaturizer {
public:
    TokenFeaturizer() = default;
    explicit TokenFeaturizer(TokenFeaturizerConfig cfg);

    int dim() const { return cfg_.dim; }
    const std::string& id() const { return id_; }
    const TokenFeaturizerConfig& config() const { return cfg_; }
    uint64_t state_hash() const;

    std::vector<FeatureVector> featurize_tokens(const TokenizedText& t) const;

private:
    TokenFeaturizerConfig cfg_;
    std::string id_ = "token-hash";
};

// key -> (R regions x dv dims) matrices; R and dv constant across the store.
class VisualFeatureStore {
public:
    VisualFeatureStore() = default;
    VisualFeatureStore(int regions, int dim) : regions_(regions), dim_(dim) {}

    int regions() const { return regions_; }
    int dim() const { return dim_; }
    bool contains(const std::string& key) const { return features_.count(key) > 0; }
    std::size_t size() const { return features_.size(); }

    void insert(const std::string& key, std::vector<std::vector<double>> matrix);
    const std::vector<std::vector<double>>& matrix(const std::string& key) const;

    uint64_t content_hash() const;

    static VisualFeatureStore load(const std::string& path);
    void save(const std::string& path) const;

private:
    int regions_ = 0;
    int dim_ = 0;
    std::map<std::string, std::vector<std::vector<double>>> features_;
};

// Mean over the R region vectors, then L2-normalized; missing key names the
// record in the error.
FeatureVector pool_visual_features(const VisualFeatureStore& store, const std::string& key);

// Deterministic pseudo-random region matrix keyed by hash(image_key, seed).
// Desk-scale substitute for a region-proposal network.
std::vector<std::vector<double>> synth_visual_features(const std::string& image_key, int dv,
                                                       int regions, uint64_t seed);

VisualFeatureStore make_synth_store(const std::vector<std::string>& keys, int dv, int regions,
                                    uint64_t seed);

// Record-level extractor over a visual store: pooled region features for the
// record's image key.
class VisualPooledExtractor : public FeatureExtractor {
public:
    explicit VisualPooledExtractor(std::shared_ptr<const VisualFeatureStore> store);

    int dim() const override;
    const std::string& id() const override { return id_; }
    FeatureVector featurize(const MemeRecord& record) const override;
    uint64_t state_hash() const override;

    const VisualFeatureStore& store() const { return *store_; }

private:
    std::shared_ptr<const VisualFeatureStore> store_;
    std::string id_ = "visual-pooled";
};

// Ordered concatenation of frozen member extractors; member order is part of
// the persisted spec since concatenation is order-sensitive.
class EnsembleFeaturizer : public FeatureExtractor {
public:
    explicit EnsembleFeaturizer(std::vector<std::shared_ptr<const FeatureExtractor>> members);

    int dim() const override { return dim_; }
    const std::string& id() const override { return id_; }
    FeatureVector featurize(const MemeRecord& record) const override;
    uint64_t state_hash() const override;

    const std::vector<std::shared_ptr<const FeatureExtractor>>& members() const { return members_; }

private:
    std::vector<std::shared_ptr<const FeatureExtractor>> members_;
    int dim_ = 0;
    std::string id_ = "ensemble";
};

}  // namespace propspan
