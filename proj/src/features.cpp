#include "propspan/features.hpp"

#include <cmath>
#include <cstring>
#include <nlohmann/json.hpp>

#include "propspan/util.hpp"

using nlohmann::json;

namespace propspan {

namespace {

void l2_normalize(std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq <= 0.0) return;
    double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
}

uint64_t hash_doubles(const std::vector<double>& v, uint64_t h) {
    for (double x : v) {
        uint64_t bits;
        static_assert(sizeof(bits) == sizeof(x));
        std::memcpy(&bits, &x, sizeof(bits));
        h = fnv1a64(bits, h);
    }
    return h;
}

std::vector<std::string> whitespace_words(const std::u32string& cps, bool lowercase) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < cps.size()) {
        while (i < cps.size() && is_ascii_space(cps[i])) ++i;
        if (i >= cps.size()) break;
        std::size_t start = i;
        while (i < cps.size() && !is_ascii_space(cps[i])) ++i;
        std::string w = utf8_encode(std::u32string_view(cps).substr(start, i - start));
        words.push_back(lowercase ? lowercase_ascii(w) : w);
    }
    return words;
}

}  // namespace

TextFeaturizer::TextFeaturizer(TextFeaturizerConfig cfg) : cfg_(cfg) {
    if (cfg_.dim < 1) throw std::invalid_argument("featurizer dim must be >= 1");
    id_ = "text-hash-" + std::to_string(cfg_.dim);
}

int TextFeaturizer::bucket_of(const std::string& kind, const std::string& gram) const {
    uint64_t h = fnv1a64(cfg_.hash_seed);
    h = fnv1a64(kind, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
    h = fnv1a64(gram, h);
    return static_cast<int>(h % static_cast<uint64_t>(cfg_.dim));
}

std::vector<double> TextFeaturizer::hashed_counts(const std::string& text) const {
    std::vector<double> counts(static_cast<std::size_t>(cfg_.dim), 0.0);
    std::u32string cps = utf8_decode(text);

    std::vector<std::string> words = whitespace_words(cps, cfg_.lowercase);
    for (int order = cfg_.word_ngram_min; order <= cfg_.word_ngram_max; ++order) {
        if (order < 1 || static_cast<std::size_t>(order) > words.size()) continue;
        for (std::size_t i = 0; i + static_cast<std::size_t>(order) <= words.size(); ++i) {
            std::string gram = words[i];
            for (int k = 1; k < order; ++k) {
                gram += '\x1f';
                gram += words[i + static_cast<std::size_t>(k)];
            }
            counts[static_cast<std::size_t>(bucket_of("w" + std::to_string(order), gram))] += 1.0;
        }
    }

    std::u32string chars = cps;
    if (cfg_.lowercase) {
        for (char32_t& c : chars) {
            if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
        }
    }
    for (int order = cfg_.char_ngram_min; order <= cfg_.char_ngram_max; ++order) {
        if (order < 1 || static_cast<std::size_t>(order) > chars.size()) continue;
        for (std::size_t i = 0; i + static_cast<std::size_t>(order) <= chars.size(); ++i) {
            std::string gram =
                utf8_encode(std::u32string_view(chars).substr(i, static_cast<std::size_t>(order)));
            counts[static_cast<std::size_t>(bucket_of("c" + std::to_string(order), gram))] += 1.0;
        }
    }
    return counts;
}

TextFeaturizer fit_text_featurizer(const Dataset& train, const TextFeaturizerConfig& cfg) {
    if (train.records.empty()) throw std::invalid_argument("cannot fit featurizer on an empty corpus");
    TextFeaturizer f(cfg);
    std::vector<int64_t> df(static_cast<std::size_t>(cfg.dim), 0);
    for (const auto& rec : train.records) {
        std::vector<double> counts = f.hashed_counts(rec.text);
        for (std::size_t b = 0; b < counts.size(); ++b) {
            if (counts[b] > 0.0) ++df[b];
        }
    }
    double n = static_cast<double>(train.records.size());
    f.idf_.resize(static_cast<std::size_t>(cfg.dim));
    for (std::size_t b = 0; b < f.idf_.size(); ++b) {
        // unseen buckets behave like df = 1
        double d = df[b] > 0 ? static_cast<double>(df[b]) : 1.0;
        f.idf_[b] = std::log(n / d);
    }
    f.fitted_ = true;
    return f;
}

TextFeaturizer TextFeaturizer::restore(TextFeaturizerConfig cfg, std::vector<double> idf) {
    if (static_cast<int>(idf.size()) != cfg.dim)
        throw std::invalid_argument("idf table size does not match featurizer dim");
    TextFeaturizer f(cfg);
    f.idf_ = std::move(idf);
    f.fitted_ = true;
    return f;
}

FeatureVector TextFeaturizer::featurize_text(const std::string& text) const {
    if (!fitted_) throw std::logic_error("featurizer used before fitting");
    std::vector<double> v = hashed_counts(text);
    for (std::size_t b = 0; b < v.size(); ++b) v[b] *= idf_[b];
    l2_normalize(v);
    return FeatureVector{std::move(v), id_};
}

FeatureVector TextFeaturizer::featurize(const MemeRecord& record) const {
    return featurize_text(record.text);
}

uint64_t TextFeaturizer::state_hash() const {
    uint64_t h = fnv1a64(id_);
    h = fnv1a64(static_cast<uint64_t>(cfg_.dim), h);
    h = fnv1a64(cfg_.hash_seed, h);
    h = fnv1a64(static_cast<uint64_t>(cfg_.word_ngram_min), h);
    h = fnv1a64(static_cast<uint64_t>(cfg_.word_ngram_max), h);
    h = fnv1a64(static_cast<uint64_t>(cfg_.char_ngram_min), h);
    h = fnv1a64(static_cast<uint64_t>(cfg_.char_ngram_max), h);
    h = fnv1a64(static_cast<uint64_t>(cfg_.lowercase ? 1 : 0), h);
    return hash_doubles(idf_, h);
}

TokenFeaturizer::TokenFeaturizer(TokenFeaturizerConfig cfg) : cfg_(cfg) {
    if (cfg_.dim < 1) throw std::invalid_argument("featurizer dim must be >= 1");
    if (cfg_.window < 0) throw std::invalid_argument("window must be >= 0");
    id_ = "token-hash-" + std::to_string(cfg_.dim);
}

uint64_t TokenFeaturizer::state_hash() const {
    uint64_t h = fnv1a64(id_);
    h = fnv1a64(static_cast<uint64_t>(cfg_.dim), h);
    h = fnv1a64(static_cast<uint64_t>(cfg_.window), h);
    h = fnv1a64(cfg_.hash_seed, h);
    h = fnv1a64(static_cast<uint64_t>(cfg_.char_ngram_min), h);
    h = fnv1a64(static_cast<uint64_t>(cfg_.char_ngram_max), h);
    h = fnv1a64(static_cast<uint64_t>(cfg_.lowercase ? 1 : 0), h);
    return h;
}

std::vector<FeatureVector> TokenFeaturizer::featurize_tokens(const TokenizedText& t) const {
    auto bucket = [&](const std::string& kind, const std::string& gram) {
        uint64_t h = fnv1a64(cfg_.hash_seed);
        h = fnv1a64(kind, h);
        h = fnv1a64(std::string_view("\x1f", 1), h);
        h = fnv1a64(gram, h);
        return static_cast<std::size_t>(h % static_cast<uint64_t>(cfg_.dim));
    };
    auto norm_text = [&](const std::string& s) { return cfg_.lowercase ? lowercase_ascii(s) : s; };

    std::vector<FeatureVector> out;
    out.reserve(t.tokens.size());
    for (std::size_t j = 0; j < t.tokens.size(); ++j) {
        const Token& tok = t.tokens[j];
        if (tok.is_special) {
            out.push_back(FeatureVector{std::vector<double>(static_cast<std::size_t>(cfg_.dim), 0.0), id_});
            continue;
        }
        std::vector<double> v(static_cast<std::size_t>(cfg_.dim), 0.0);
        std::string center = norm_text(tok.text);
        v[bucket("t0", center)] += 1.0;
        std::u32string cps = utf8_decode(center);
        for (int order = cfg_.char_ngram_min; order <= cfg_.char_ngram_max; ++order) {
            if (order < 1 || static_cast<std::size_t>(order) > cps.size()) continue;
            for (std::size_t i = 0; i + static_cast<std::size_t>(order) <= cps.size(); ++i) {
                v[bucket("tc", utf8_encode(std::u32string_view(cps).substr(
                                   i, static_cast<std::size_t>(order))))] += 1.0;
            }
        }
        for (int o = -cfg_.window; o <= cfg_.window; ++o) {
            if (o == 0) continue;
            std::ptrdiff_t nj = static_cast<std::ptrdiff_t>(j) + o;
            if (nj < 0 || nj >= static_cast<std::ptrdiff_t>(t.tokens.size())) continue;
            v[bucket("t" + std::to_string(o), norm_text(t.tokens[static_cast<std::size_t>(nj)].text))] += 1.0;
        }
        l2_normalize(v);
        out.push_back(FeatureVector{std::move(v), id_});
    }
    return out;
}

void VisualFeatureStore::insert(const std::string& key, std::vector<std::vector<double>> matrix) {
    if (static_cast<int>(matrix.size()) != regions_)
        throw std::invalid_argument("feature matrix for '" + key + "' has " +
                                    std::to_string(matrix.size()) + " regions, store expects " +
                                    std::to_string(regions_));
    for (const auto& row : matrix) {
        if (static_cast<int>(row.size()) != dim_)
            throw std::invalid_argument("feature row for '" + key + "' has dim " +
                                        std::to_string(row.size()) + ", store expects " +
                                        std::to_string(dim_));
    }
    features_[key] = std::move(matrix);
}

const std::vector<std::vector<double>>& VisualFeatureStore::matrix(const std::string& key) const {
    auto it = features_.find(key);
    if (it == features_.end())
        throw std::out_of_range("visual feature store has no key '" + key + "'");
    return it->second;
}

uint64_t VisualFeatureStore::content_hash() const {
    uint64_t h = fnv1a64(static_cast<uint64_t>(regions_), fnv1a64(static_cast<uint64_t>(dim_)));
    for (const auto& [key, matrix] : features_) {
        h = fnv1a64(key, h);
        for (const auto& row : matrix) h = hash_doubles(row, h);
    }
    return h;
}

VisualFeatureStore VisualFeatureStore::load(const std::string& path) {
    json root;
    try {
        root = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (!root.is_object() || !root.contains("regions") || !root.contains("dim") ||
        !root.contains("features"))
        throw ParseError(path + ": feature store must have 'regions', 'dim' and 'features'");
    VisualFeatureStore store(root["regions"].get<int>(), root["dim"].get<int>());
    for (const auto& [key, matrix] : root["features"].items()) {
        std::vector<std::vector<double>> m;
        for (const auto& row : matrix) m.push_back(row.get<std::vector<double>>());
        store.insert(key, std::move(m));
    }
    return store;
}

void VisualFeatureStore::save(const std::string& path) const {
    json root;
    root["regions"] = regions_;
    root["dim"] = dim_;
    json feats = json::object();
    for (const auto& [key, matrix] : features_) feats[key] = matrix;
    root["features"] = std::move(feats);
    write_file(path, root.dump() + "\n");
}

FeatureVector pool_visual_features(const VisualFeatureStore& store, const std::string& key) {
    const auto& matrix = store.matrix(key);
    std::vector<double> mean(static_cast<std::size_t>(store.dim()), 0.0);
    for (const auto& row : matrix) {
        for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += row[c];
    }
    double inv = matrix.empty() ? 0.0 : 1.0 / static_cast<double>(matrix.size());
    for (double& x : mean) x *= inv;
    l2_normalize(mean);
    return FeatureVector{std::move(mean), "visual-pooled"};
}

std::vector<std::vector<double>> synth_visual_features(const std::string& image_key, int dv,
                                                       int regions, uint64_t seed) {
    uint64_t state = fnv1a64(seed, fnv1a64(image_key));
    std::vector<std::vector<double>> m(static_cast<std::size_t>(regions),
                                       std::vector<double>(static_cast<std::size_t>(dv)));
    for (auto& row : m) {
        for (double& x : row) {
            x = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-52 - 1.0;  // [-1, 1)
        }
    }
    return m;
}

VisualFeatureStore make_synth_store(const std::vector<std::string>& keys, int dv, int regions,
                                    uint64_t seed) {
    VisualFeatureStore store(regions, dv);
    for (const auto& key : keys) store.insert(key, synth_visual_features(key, dv, regions, seed));
    return store;
}

VisualPooledExtractor::VisualPooledExtractor(std::shared_ptr<const VisualFeatureStore> store)
    : store_(std::move(store)) {
    if (!store_) throw std::invalid_argument("visual extractor requires a store");
    id_ = "visual-pooled-" + std::to_string(store_->dim());
}

int VisualPooledExtractor::dim() const { return store_->dim(); }

FeatureVector VisualPooledExtractor::featurize(const MemeRecord& record) const {
    if (!record.image_key)
        throw ValidationError(record.id, "record has no image key but a visual extractor was requested");
    if (!store_->contains(*record.image_key))
        throw ValidationError(record.id,
                              "visual feature store has no key '" + *record.image_key + "'");
    FeatureVector v = pool_visual_features(*store_, *record.image_key);
    v.source = id_;
    return v;
}

uint64_t VisualPooledExtractor::state_hash() const { return store_->content_hash(); }

EnsembleFeaturizer::EnsembleFeaturizer(std::vector<std::shared_ptr<const FeatureExtractor>> members)
    : members_(std::move(members)) {
    if (members_.empty()) throw std::invalid_argument("ensemble needs at least one member");
    id_ = "ensemble(";
    for (std::size_t i = 0; i < members_.size(); ++i) {
        if (!members_[i]) throw std::invalid_argument("ensemble member is null");
        dim_ += members_[i]->dim();
        if (i) id_ += "+";
        id_ += members_[i]->id();
    }
    id_ += ")";
}

FeatureVector EnsembleFeaturizer::featurize(const MemeRecord& record) const {
    FeatureVector out;
    out.source = id_;
    out.values.reserve(static_cast<std::size_t>(dim_));
    for (const auto& m : members_) {
        FeatureVector part = m->featurize(record);
        out.values.insert(out.values.end(), part.values.begin(), part.values.end());
    }
    return out;
}

uint64_t EnsembleFeaturizer::state_hash() const {
    uint64_t h = fnv1a64(id_);
    for (const auto& m : members_) h = fnv1a64(m->state_hash(), h);
    return h;
}

}  // namespace propspan
