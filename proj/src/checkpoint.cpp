#include "propspan/checkpoint.hpp"

#include "propspan/util.hpp"

using nlohmann::json;

namespace propspan {

json train_config_to_json(const TrainConfig& cfg) {
    return json{{"learning_rate", cfg.learning_rate},
                {"batch_size", cfg.batch_size},
                {"max_sequence_length", cfg.max_sequence_length},
                {"patience", cfg.patience},
                {"weight_decay", cfg.weight_decay},
                {"optimizer", optimizer_name(cfg.optimizer)},
                {"dropout", cfg.dropout},
                {"seed", cfg.seed},
                {"max_epochs", cfg.max_epochs},
                {"warmup", cfg.warmup},
                {"hidden_dim", cfg.hidden_dim},
                {"threshold", cfg.threshold},
                {"use_class_weights", cfg.use_class_weights},
                {"tokenizer_chunk_size", cfg.tokenizer_chunk_size}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig base) {
    if (!j.is_object()) throw ParseError("train config must be a JSON object");
    TrainConfig cfg = base;
    for (const auto& [key, value] : j.items()) {
        if (key == "learning_rate") cfg.learning_rate = value.get<double>();
        else if (key == "batch_size") cfg.batch_size = value.get<int>();
        else if (key == "max_sequence_length") cfg.max_sequence_length = value.get<int>();
        else if (key == "patience") cfg.patience = value.get<int>();
        else if (key == "weight_decay") cfg.weight_decay = value.get<double>();
        else if (key == "optimizer") cfg.optimizer = optimizer_from_name(value.get<std::string>());
        else if (key == "dropout") cfg.dropout = value.get<double>();
        else if (key == "seed") cfg.seed = value.get<uint64_t>();
        else if (key == "max_epochs") cfg.max_epochs = value.get<int>();
        else if (key == "warmup") cfg.warmup = value.get<double>();
        else if (key == "hidden_dim") cfg.hidden_dim = value.get<int>();
        else if (key == "threshold") cfg.threshold = value.get<double>();
        else if (key == "use_class_weights") cfg.use_class_weights = value.get<bool>();
        else if (key == "tokenizer_chunk_size") cfg.tokenizer_chunk_size = value.get<int>();
        else throw ParseError("unknown train config key: " + key);
    }
    cfg.validate();
    return cfg;
}

uint64_t config_hash(const json& config_json) { return fnv1a64(config_json.dump()); }

json featurizer_to_json(const TextFeaturizer& f) {
    const TextFeaturizerConfig& c = f.config();
    return json{{"kind", "text-hash"},
                {"dim", c.dim},
                {"hash_seed", c.hash_seed},
                {"word_ngram_min", c.word_ngram_min},
                {"word_ngram_max", c.word_ngram_max},
                {"char_ngram_min", c.char_ngram_min},
                {"char_ngram_max", c.char_ngram_max},
                {"lowercase", c.lowercase},
                {"idf", f.idf()}};
}

json featurizer_to_json(const TokenFeaturizer& f) {
    const TokenFeaturizerConfig& c = f.config();
    return json{{"kind", "token-hash"},
                {"dim", c.dim},
                {"window", c.window},
                {"hash_seed", c.hash_seed},
                {"char_ngram_min", c.char_ngram_min},
                {"char_ngram_max", c.char_ngram_max},
                {"lowercase", c.lowercase}};
}

json visual_member_json(const VisualSourceSpec& spec) {
    return json{{"kind", "visual-pooled"},
                {"source", spec.synthetic ? "synth" : "store"},
                {"synth_seed", spec.synth_seed},
                {"regions", spec.regions},
                {"dim", spec.dim}};
}

namespace {

TextFeaturizer text_featurizer_from_json(const json& j) {
    TextFeaturizerConfig c;
    c.dim = j.at("dim").get<int>();
    c.hash_seed = j.at("hash_seed").get<uint64_t>();
    c.word_ngram_min = j.at("word_ngram_min").get<int>();
    c.word_ngram_max = j.at("word_ngram_max").get<int>();
    c.char_ngram_min = j.at("char_ngram_min").get<int>();
    c.char_ngram_max = j.at("char_ngram_max").get<int>();
    c.lowercase = j.at("lowercase").get<bool>();
    return TextFeaturizer::restore(c, j.at("idf").get<std::vector<double>>());
}

}  // namespace

TokenFeaturizer token_featurizer_from_json(const json& j) {
    if (j.at("kind").get<std::string>() != "token-hash")
        throw ParseError("expected a token-hash featurizer config");
    TokenFeaturizerConfig c;
    c.dim = j.at("dim").get<int>();
    c.window = j.at("window").get<int>();
    c.hash_seed = j.at("hash_seed").get<uint64_t>();
    c.char_ngram_min = j.at("char_ngram_min").get<int>();
    c.char_ngram_max = j.at("char_ngram_max").get<int>();
    c.lowercase = j.at("lowercase").get<bool>();
    return TokenFeaturizer(c);
}

std::shared_ptr<const FeatureExtractor> build_extractor(
    const json& featurizer, std::shared_ptr<const VisualFeatureStore> store,
    const std::vector<std::string>& synth_keys) {
    std::string kind = featurizer.at("kind").get<std::string>();
    if (kind == "text-hash") {
        return std::make_shared<TextFeaturizer>(text_featurizer_from_json(featurizer));
    }
    if (kind == "visual-pooled") {
        std::string source = featurizer.at("source").get<std::string>();
        int regions = featurizer.at("regions").get<int>();
        int dim = featurizer.at("dim").get<int>();
        if (source == "synth") {
            auto synth = std::make_shared<VisualFeatureStore>(make_synth_store(
                synth_keys, dim, regions, featurizer.at("synth_seed").get<uint64_t>()));
            return std::make_shared<VisualPooledExtractor>(synth);
        }
        if (!store)
            throw ValidationError(
                "", "checkpoint uses a visual feature store; pass one with --visual-store");
        if (store->regions() != regions || store->dim() != dim)
            throw ValidationError(
                "", "visual store shape (" + std::to_string(store->regions()) + "x" +
                        std::to_string(store->dim()) + ") does not match checkpoint (" +
                        std::to_string(regions) + "x" + std::to_string(dim) + ")");
        return std::make_shared<VisualPooledExtractor>(store);
    }
    if (kind == "ensemble") {
        std::vector<std::shared_ptr<const FeatureExtractor>> members;
        for (const auto& m : featurizer.at("members"))
            members.push_back(build_extractor(m, store, synth_keys));
        return std::make_shared<EnsembleFeaturizer>(std::move(members));
    }
    throw ParseError("unknown featurizer kind: " + kind);
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    json j;
    j["format"] = kCheckpointFormat;
    j["version"] = kCheckpointVersion;
    j["tool_version"] = kToolVersion;
    j["task"] = task_name(ckpt.task);
    j["level"] = ckpt.token_level ? "token" : "sequence";
    j["vocabulary"] = ckpt.vocabulary.names();
    j["vocabulary_hash"] = hex_string(ckpt.vocabulary.content_hash());
    j["featurizer"] = ckpt.featurizer;
    j["config"] = train_config_to_json(ckpt.config);
    j["best_epoch"] = ckpt.best_epoch;
    j["best_dev_metric"] = ckpt.best_dev_metric;
    j["head"] = json{{"input_dim", ckpt.head.input_dim},
                     {"hidden_dim", ckpt.head.hidden_dim},
                     {"output_dim", ckpt.head.output_dim},
                     {"dropout_rate", ckpt.head.dropout_rate},
                     {"w1", ckpt.head.w1},
                     {"b1", ckpt.head.b1},
                     {"w2", ckpt.head.w2},
                     {"b2", ckpt.head.b2}};
    return j.dump(2) + "\n";
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != kCheckpointFormat)
        throw ParseError(path + ": not a propspan checkpoint");
    if (j.value("version", 0) != kCheckpointVersion)
        throw ParseError(path + ": unsupported checkpoint version " +
                         std::to_string(j.value("version", 0)));

    Checkpoint ckpt;
    ckpt.task = task_from_name(j.at("task").get<std::string>());
    ckpt.token_level = j.at("level").get<std::string>() == "token";
    ckpt.vocabulary =
        LabelVocabulary::from_names(j.at("vocabulary").get<std::vector<std::string>>(), ckpt.task);
    uint64_t stored_hash = parse_hex(j.at("vocabulary_hash").get<std::string>());
    if (stored_hash != ckpt.vocabulary.content_hash())
        throw ValidationError("", path + ": vocabulary hash mismatch (stored " +
                                      j.at("vocabulary_hash").get<std::string>() + ", recomputed " +
                                      hex_string(ckpt.vocabulary.content_hash()) + ")");
    ckpt.featurizer = j.at("featurizer");
    ckpt.config = train_config_from_json(j.at("config"));
    ckpt.best_epoch = j.at("best_epoch").get<int>();
    ckpt.best_dev_metric = j.at("best_dev_metric").get<double>();

    const json& h = j.at("head");
    ckpt.head.input_dim = h.at("input_dim").get<int>();
    ckpt.head.hidden_dim = h.at("hidden_dim").get<int>();
    ckpt.head.output_dim = h.at("output_dim").get<int>();
    ckpt.head.dropout_rate = h.at("dropout_rate").get<double>();
    ckpt.head.w1 = h.at("w1").get<std::vector<double>>();
    ckpt.head.b1 = h.at("b1").get<std::vector<double>>();
    ckpt.head.w2 = h.at("w2").get<std::vector<double>>();
    ckpt.head.b2 = h.at("b2").get<std::vector<double>>();
    if (!ckpt.head.finite()) throw ValidationError("", path + ": checkpoint has non-finite parameters");
    std::size_t expect_w1 = static_cast<std::size_t>(ckpt.head.hidden_dim) *
                            static_cast<std::size_t>(ckpt.head.input_dim);
    std::size_t expect_w2 = static_cast<std::size_t>(ckpt.head.output_dim) *
                            static_cast<std::size_t>(ckpt.head.hidden_dim);
    if (ckpt.head.w1.size() != expect_w1 || ckpt.head.w2.size() != expect_w2 ||
        ckpt.head.b1.size() != static_cast<std::size_t>(ckpt.head.hidden_dim) ||
        ckpt.head.b2.size() != static_cast<std::size_t>(ckpt.head.output_dim))
        throw ValidationError("", path + ": head parameter shapes are inconsistent");
    if (ckpt.head.output_dim != ckpt.vocabulary.size())
        throw ValidationError("", path + ": head output dim does not match vocabulary size");
    return ckpt;
}

json RunManifest::to_json() const {
    json j;
    j["format"] = "propspan-manifest";
    j["version"] = 1;
    j["tool_version"] = kToolVersion;
    j["command"] = command;
    j["task"] = task_name(task);
    j["seeds"] = seeds;
    j["config_hash"] = hex_string(config_hash);
    j["vocabulary_hash"] = hex_string(vocabulary_hash);
    json data = json::object();
    for (const auto& [role, path] : data_paths) data[role] = path;
    j["data"] = std::move(data);
    json outputs = json::object();
    for (const auto& [role, path] : output_paths) outputs[role] = path;
    j["outputs"] = std::move(outputs);
    j["manifest_hash"] = hex_string(hash());
    return j;
}

uint64_t RunManifest::hash() const {
    json j;
    j["command"] = command;
    j["task"] = task_name(task);
    j["seeds"] = seeds;
    j["config_hash"] = hex_string(config_hash);
    j["vocabulary_hash"] = hex_string(vocabulary_hash);
    json data = json::object();
    for (const auto& [role, path] : data_paths) data[role] = path;
    j["data"] = std::move(data);
    json outputs = json::object();
    for (const auto& [role, path] : output_paths) outputs[role] = path;
    j["outputs"] = std::move(outputs);
    return fnv1a64(j.dump());
}

void save_manifest(const RunManifest& manifest, const std::string& path) {
    write_file(path, manifest.to_json().dump(2) + "\n");
}

}  // namespace propspan
