// propspan: validate, inspect, train, predict, and score multi-label
// persuasion-technique models over meme corpora. Every command is
// deterministic given its inputs, flags, and seed; commands that write files
// also write a manifest recording how the outputs were produced.

#include <CLI11.hpp>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "propspan/checkpoint.hpp"
#include "propspan/corpus.hpp"
#include "propspan/eval.hpp"
#include "propspan/features.hpp"
#include "propspan/log.hpp"
#include "propspan/model.hpp"
#include "propspan/spans.hpp"
#include "propspan/train.hpp"
#include "propspan/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace propspan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitUsageError = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

std::string manifest_comment(const RunManifest& manifest) {
    return "# manifest: " + hex_string(manifest.hash()) + "\n";
}

void ensure_parent_dir(const std::string& path) {
    fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

json load_json_file(const std::string& path) {
    return json::parse(read_file(path), nullptr, /*allow_exceptions=*/true);
}

std::vector<std::string> image_keys_of(const Dataset& data) {
    std::vector<std::string> keys;
    for (const MemeRecord& rec : data.records) {
        if (rec.image_key) keys.push_back(*rec.image_key);
    }
    return keys;
}

// ---------------------------------------------------------------------------
// validate

struct ValidateArgs {
    std::string data_path;
    std::string task = "a";
};

int run_validate(const ValidateArgs& args) {
    Task task = task_from_name(args.task);
    Dataset data;
    try {
        data = load_dataset(args.data_path, task);
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return kExitDataError;
    }
    int empty_labels = 0;
    for (const MemeRecord& rec : data.records) {
        if (rec.labels.empty()) ++empty_labels;
    }
    std::printf("ok: %zu records, %d labels (%s split, task %s)\n", data.records.size(),
                data.vocabulary.size(), split_name(data.split), task_name(task));
    if (empty_labels > 0) {
        std::printf("warning: %d record(s) carry no labels\n", empty_labels);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// stats

struct StatsArgs {
    std::string data_path;
    std::string task = "a";
    std::string out_path;  // empty -> stdout
};

int run_stats(const StatsArgs& args) {
    Task task = task_from_name(args.task);
    Dataset data = load_dataset(args.data_path, task);
    std::vector<DistributionRow> rows = label_distribution_report(data);

    std::string csv = "label,count,fraction\n";
    for (const DistributionRow& row : rows) {
        csv += csv_escape(row.label) + "," + std::to_string(row.count) + "," +
               format_double(row.fraction) + "\n";
    }
    if (args.out_path.empty()) {
        std::fputs(csv.c_str(), stdout);
        return kExitOk;
    }
    RunManifest manifest;
    manifest.command = "stats";
    manifest.task = task;
    manifest.vocabulary_hash = data.vocabulary.content_hash();
    manifest.data_paths = {{"data", args.data_path}};
    manifest.output_paths = {{"stats", args.out_path}};
    ensure_parent_dir(args.out_path);
    write_file(args.out_path, manifest_comment(manifest) + csv);
    save_manifest(manifest, args.out_path + ".manifest.json");
    std::printf("wrote %zu rows to %s\n", rows.size(), args.out_path.c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string task = "a";
    std::string train_path;
    std::string dev_path;
    std::string config_path;
    std::string out_dir = ".";
    uint64_t seed = 0;

    std::string features = "text";  // text | visual | ensemble
    bool ensemble_flag = false;
    std::string visual_store_path;
    bool visual_synth = false;
    uint64_t visual_seed = 42;
    int visual_dim = 64;
    int visual_regions = 36;
    int text_dim = 256;
    int token_dim = 128;

    // Config overrides; applied only when the flag was passed.
    double learning_rate = 0.0;
    int batch_size = 0;
    int max_seq_len = 0;
    int patience = 0;
    double weight_decay = 0.0;
    std::string optimizer;
    double dropout = 0.0;
    int max_epochs = 0;
    double warmup = 0.0;
    int hidden_dim = 0;
    double threshold = 0.0;
    bool no_class_weights = false;
    int chunk_size = 0;

    CLI::App* cmd = nullptr;
};

TrainConfig resolve_train_config(const TrainArgs& args, Task task, bool ensemble) {
    TrainConfig cfg = default_train_config(task, ensemble);
    if (!args.config_path.empty()) {
        cfg = train_config_from_json(load_json_file(args.config_path), cfg);
    }
    const CLI::App& cmd = *args.cmd;
    if (cmd.count("--lr")) cfg.learning_rate = args.learning_rate;
    if (cmd.count("--batch-size")) cfg.batch_size = args.batch_size;
    if (cmd.count("--max-seq-len")) cfg.max_sequence_length = args.max_seq_len;
    if (cmd.count("--patience")) cfg.patience = args.patience;
    if (cmd.count("--weight-decay")) cfg.weight_decay = args.weight_decay;
    if (cmd.count("--optimizer")) cfg.optimizer = optimizer_from_name(args.optimizer);
    if (cmd.count("--dropout")) cfg.dropout = args.dropout;
    if (cmd.count("--epochs")) cfg.max_epochs = args.max_epochs;
    if (cmd.count("--warmup")) cfg.warmup = args.warmup;
    if (cmd.count("--hidden-dim")) cfg.hidden_dim = args.hidden_dim;
    if (cmd.count("--threshold")) cfg.threshold = args.threshold;
    if (cmd.count("--chunk-size")) cfg.tokenizer_chunk_size = args.chunk_size;
    if (args.no_class_weights) cfg.use_class_weights = false;
    cfg.seed = args.seed;
    cfg.validate();
    return cfg;
}

int run_train(TrainArgs& args) {
    Task task = task_from_name(args.task);
    std::string features = args.ensemble_flag ? "ensemble" : args.features;
    if (task == Task::B && features != "text") {
        throw UsageError("task b trains on token features; --features/--ensemble do not apply");
    }
    if (features != "text" && task != Task::C) {
        throw UsageError("visual and ensemble features require --task c");
    }
    bool needs_visual = features == "visual" || features == "ensemble";
    if (needs_visual && args.visual_store_path.empty() && !args.visual_synth) {
        throw UsageError("--features " + features +
                         " needs a visual source: pass --visual-store or --visual-synth");
    }

    Dataset train = load_dataset(args.train_path, task);
    Dataset dev = load_dataset(args.dev_path, task);
    TrainConfig cfg = resolve_train_config(args, task, features == "ensemble");

    Checkpoint ckpt;
    ckpt.task = task;
    ckpt.config = cfg;
    ckpt.vocabulary = train.vocabulary;

    TrainResult result;
    if (task == Task::B) {
        TokenFeaturizerConfig tok_cfg;
        tok_cfg.dim = args.token_dim;
        TokenFeaturizer featurizer(tok_cfg);
        ChunkTokenizer tokenizer(cfg.tokenizer_chunk_size, cfg.max_sequence_length);
        result = train_span_model(train, dev, featurizer, tokenizer, cfg);
        ckpt.token_level = true;
        ckpt.featurizer = featurizer_to_json(featurizer);
    } else {
        std::shared_ptr<const FeatureExtractor> extractor;
        json feat_json;

        std::shared_ptr<const TextFeaturizer> text;
        json text_json;
        if (features == "text" || features == "ensemble") {
            TextFeaturizerConfig text_cfg;
            text_cfg.dim = args.text_dim;
            text = std::make_shared<TextFeaturizer>(fit_text_featurizer(train, text_cfg));
            text_json = featurizer_to_json(*text);
        }

        std::shared_ptr<const VisualPooledExtractor> visual;
        json visual_json;
        if (needs_visual) {
            std::shared_ptr<const VisualFeatureStore> store;
            VisualSourceSpec spec;
            if (!args.visual_store_path.empty()) {
                store = std::make_shared<VisualFeatureStore>(
                    VisualFeatureStore::load(args.visual_store_path));
                spec.synthetic = false;
                spec.regions = store->regions();
                spec.dim = store->dim();
            } else {
                std::vector<std::string> keys = image_keys_of(train);
                for (std::string& k : image_keys_of(dev)) keys.push_back(std::move(k));
                store = std::make_shared<VisualFeatureStore>(
                    make_synth_store(keys, args.visual_dim, args.visual_regions, args.visual_seed));
                spec.synthetic = true;
                spec.synth_seed = args.visual_seed;
                spec.regions = args.visual_regions;
                spec.dim = args.visual_dim;
            }
            visual = std::make_shared<VisualPooledExtractor>(store);
            visual_json = visual_member_json(spec);
        }

        if (features == "text") {
            extractor = text;
            feat_json = text_json;
        } else if (features == "visual") {
            extractor = visual;
            feat_json = visual_json;
        } else {
            extractor = std::make_shared<EnsembleFeaturizer>(
                std::vector<std::shared_ptr<const FeatureExtractor>>{text, visual});
            feat_json = json{{"kind", "ensemble"}, {"members", json::array({text_json, visual_json})}};
        }
        result = train_label_model(train, dev, *extractor, cfg);
        ckpt.featurizer = feat_json;
        log_info("feature dimension: " + std::to_string(extractor->dim()));
    }

    ckpt.head = result.head;
    ckpt.best_epoch = result.best_epoch;
    ckpt.best_dev_metric = result.best_dev_metric;

    fs::create_directories(args.out_dir);
    std::string ckpt_path = (fs::path(args.out_dir) / "checkpoint.json").string();
    std::string log_path = (fs::path(args.out_dir) / "train_log.csv").string();
    std::string manifest_path = (fs::path(args.out_dir) / "manifest.json").string();

    RunManifest manifest;
    manifest.command = "train";
    manifest.task = task;
    manifest.seeds = {args.seed};
    manifest.config_hash = config_hash(train_config_to_json(cfg));
    manifest.vocabulary_hash = train.vocabulary.content_hash();
    manifest.data_paths = {{"train", args.train_path}, {"dev", args.dev_path}};
    if (!args.visual_store_path.empty()) {
        manifest.data_paths.emplace_back("visual_store", args.visual_store_path);
    }
    if (!args.config_path.empty()) {
        manifest.data_paths.emplace_back("config", args.config_path);
    }
    manifest.output_paths = {{"checkpoint", ckpt_path}, {"train_log", log_path}};

    save_checkpoint(ckpt, ckpt_path);
    write_file(log_path, manifest_comment(manifest) + train_log_csv(result.log));
    save_manifest(manifest, manifest_path);

    const char* metric_name = task == Task::B ? "dev span_f1" : "dev micro_f1";
    std::printf("trained task %s model: best epoch %d, %s %s\n", task_name(task),
                result.best_epoch, metric_name, format_double(result.best_dev_metric).c_str());
    std::printf("checkpoint: %s\ntrain log: %s\nmanifest: %s\n", ckpt_path.c_str(),
                log_path.c_str(), manifest_path.c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
    std::string checkpoint_path;
    std::string data_path;
    std::string out_path;
    std::string vocab_path;
    std::string visual_store_path;
};

int run_predict(const PredictArgs& args) {
    Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
    Dataset data = load_dataset(args.data_path, ckpt.task);

    if (!args.vocab_path.empty()) {
        LabelVocabulary vocab = load_vocabulary(args.vocab_path, ckpt.task);
        if (vocab.content_hash() != ckpt.vocabulary.content_hash()) {
            throw ValidationError("", "vocabulary hash mismatch: " + args.vocab_path + " has " +
                                          hex_string(vocab.content_hash()) + ", checkpoint has " +
                                          hex_string(ckpt.vocabulary.content_hash()));
        }
    } else if (!data.vocabulary.is_subset_of(ckpt.vocabulary)) {
        std::string unknown;
        for (const TechniqueLabel& label : data.vocabulary.labels()) {
            if (ckpt.vocabulary.id_of(label.name) < 0) {
                if (!unknown.empty()) unknown += ", ";
                unknown += "'" + label.name + "'";
            }
        }
        throw ValidationError("", "data labels unknown to the checkpoint vocabulary: " + unknown);
    }

    Dataset out = data;
    out.vocabulary = ckpt.vocabulary;
    if (ckpt.token_level) {
        TokenFeaturizer featurizer = token_featurizer_from_json(ckpt.featurizer);
        ChunkTokenizer tokenizer(ckpt.config.tokenizer_chunk_size,
                                 ckpt.config.max_sequence_length);
        for (MemeRecord& rec : out.records) {
            rec.spans = predict_spans(ckpt.head, featurizer, tokenizer, rec, ckpt.vocabulary,
                                      ckpt.config.threshold);
            rec.labels.clear();
            for (const LabeledSpan& span : rec.spans) rec.labels.insert(span.technique.id);
        }
    } else {
        std::shared_ptr<const VisualFeatureStore> store;
        if (!args.visual_store_path.empty()) {
            store = std::make_shared<VisualFeatureStore>(
                VisualFeatureStore::load(args.visual_store_path));
        }
        auto extractor = build_extractor(ckpt.featurizer, store, image_keys_of(data));
        for (MemeRecord& rec : out.records) {
            rec.labels = predict_labels(ckpt.head, *extractor, rec, ckpt.config.threshold);
        }
    }

    RunManifest manifest;
    manifest.command = "predict";
    manifest.task = ckpt.task;
    manifest.seeds = {ckpt.config.seed};
    manifest.config_hash = config_hash(train_config_to_json(ckpt.config));
    manifest.vocabulary_hash = ckpt.vocabulary.content_hash();
    manifest.data_paths = {{"checkpoint", args.checkpoint_path}, {"data", args.data_path}};
    if (!args.visual_store_path.empty()) {
        manifest.data_paths.emplace_back("visual_store", args.visual_store_path);
    }
    manifest.output_paths = {{"predictions", args.out_path}};

    ensure_parent_dir(args.out_path);
    save_dataset(out, args.out_path);
    save_manifest(manifest, args.out_path + ".manifest.json");
    std::printf("wrote %zu predictions to %s\n", out.records.size(), args.out_path.c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
    std::string task = "a";
    std::vector<std::string> preds_paths;
    std::string gold_path;
    std::string gold_a_path;
    std::string gold_c_path;
    std::string train_path;
    std::string out_path;
    std::string macro_empty = "exclude";
    int classwise = 0;
    bool modality_split = false;
};

json score_one(const ScoreArgs& args, Task task, const Dataset* gold, const std::string& preds_path) {
    json metrics = json::object();
    if (args.modality_split) {
        Dataset gold_a = load_dataset(args.gold_a_path, Task::A);
        Dataset gold_c = load_dataset(args.gold_c_path, Task::C);
        Dataset preds = load_dataset(preds_path, Task::C);
        ModalitySplitScores scores = modality_split_f1(
            label_sets_by_id(gold_a), label_sets_by_id(gold_c), label_sets_by_id(preds));
        metrics["textual_f1"] = scores.textual_f1;
        metrics["visual_f1"] = scores.visual_f1;
        return metrics;
    }
    Dataset preds = load_dataset(preds_path, task);
    if (task == Task::B) {
        metrics["span_f1"] = span_partial_f1(join_span_predictions(*gold, preds));
        return metrics;
    }
    std::vector<LabelPrediction> joined = join_label_predictions(*gold, preds);
    metrics["micro_f1"] = micro_f1(joined);
    MacroEmpty mode = args.macro_empty == "zero" ? MacroEmpty::Zero : MacroEmpty::Exclude;
    if (mode == MacroEmpty::Zero) {
        std::set<std::string> universe_set;
        for (const TechniqueLabel& l : gold->vocabulary.labels()) universe_set.insert(l.name);
        for (const TechniqueLabel& l : preds.vocabulary.labels()) universe_set.insert(l.name);
        std::vector<std::string> universe(universe_set.begin(), universe_set.end());
        metrics["macro_f1"] = macro_f1(joined, mode, &universe);
    } else {
        metrics["macro_f1"] = macro_f1(joined, mode);
    }
    return metrics;
}

int run_score(const ScoreArgs& args) {
    Task task = task_from_name(args.task);
    if (args.modality_split) {
        if (args.gold_a_path.empty() || args.gold_c_path.empty()) {
            throw UsageError("--modality-split needs both --gold-a and --gold-c");
        }
    } else if (args.gold_path.empty()) {
        throw UsageError("score needs --gold (or --modality-split with --gold-a/--gold-c)");
    }
    if (args.classwise > 0 && args.preds_paths.size() > 1) {
        throw UsageError("--classwise scores one predictions file; use `report` for seed sweeps");
    }
    if (args.classwise > 0 && args.train_path.empty()) {
        throw UsageError("--classwise needs --train to rank labels by train frequency");
    }

    std::optional<Dataset> gold;
    if (!args.gold_path.empty()) gold = load_dataset(args.gold_path, task);

    std::vector<json> per_file;
    for (const std::string& path : args.preds_paths) {
        per_file.push_back(score_one(args, task, gold ? &*gold : nullptr, path));
    }

    json metrics = json::object();
    if (per_file.size() == 1) {
        metrics = per_file[0];
    } else {
        for (auto& [key, first_value] : per_file[0].items()) {
            (void)first_value;
            std::vector<double> values;
            for (const json& m : per_file) values.push_back(m.at(key).get<double>());
            metrics[key] = json{{"values", values},
                                {"mean", mean_of(values)},
                                {"std", population_std_of(values)}};
        }
    }

    std::string classwise_csv;
    if (args.classwise > 0) {
        Dataset train = load_dataset(args.train_path, task);
        Dataset preds = load_dataset(args.preds_paths[0], task);
        std::vector<ClasswiseRow> rows = classwise_report(
            join_label_predictions(*gold, preds), label_distribution_report(train), args.classwise);
        classwise_csv = "label,train_count,f1\n";
        for (const ClasswiseRow& row : rows) {
            classwise_csv += csv_escape(row.label) + "," + std::to_string(row.train_count) + "," +
                             format_double(row.f1) + "\n";
        }
    }

    std::printf("%s\n", metrics.dump(2).c_str());
    if (!classwise_csv.empty() && args.out_path.empty()) {
        std::fputs(classwise_csv.c_str(), stdout);
    }

    if (!args.out_path.empty()) {
        RunManifest manifest;
        manifest.command = "score";
        manifest.task = task;
        if (gold) manifest.vocabulary_hash = gold->vocabulary.content_hash();
        for (size_t i = 0; i < args.preds_paths.size(); ++i) {
            manifest.data_paths.emplace_back("predictions", args.preds_paths[i]);
        }
        if (!args.gold_path.empty()) manifest.data_paths.emplace_back("gold", args.gold_path);
        if (!args.gold_a_path.empty()) manifest.data_paths.emplace_back("gold_a", args.gold_a_path);
        if (!args.gold_c_path.empty()) manifest.data_paths.emplace_back("gold_c", args.gold_c_path);
        if (!args.train_path.empty()) manifest.data_paths.emplace_back("train", args.train_path);
        manifest.output_paths = {{"metrics", args.out_path}};
        std::string classwise_path;
        if (!classwise_csv.empty()) {
            classwise_path = args.out_path + ".classwise.csv";
            manifest.output_paths.emplace_back("classwise", classwise_path);
        }
        metrics["_manifest"] = hex_string(manifest.hash());
        ensure_parent_dir(args.out_path);
        write_file(args.out_path, metrics.dump(2) + "\n");
        if (!classwise_path.empty()) {
            write_file(classwise_path, manifest_comment(manifest) + classwise_csv);
        }
        save_manifest(manifest, args.out_path + ".manifest.json");
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
    std::string kind = "classwise";  // classwise | modality
    std::string task = "a";
    std::vector<std::string> preds_paths;
    std::vector<uint64_t> seeds;
    std::string gold_path;
    std::string gold_a_path;
    std::string gold_c_path;
    std::string train_path;
    std::string model_tag = "model";
    int top_n = 3;
    std::string out_path;
};

int run_report(const ReportArgs& args) {
    if (args.preds_paths.empty()) throw UsageError("report needs at least one --preds file");
    std::vector<uint64_t> seeds = args.seeds;
    if (seeds.empty()) {
        for (size_t i = 0; i < args.preds_paths.size(); ++i) seeds.push_back(i);
    }
    if (seeds.size() != args.preds_paths.size()) {
        throw UsageError("--seed count must match --preds count");
    }

    std::string csv;
    RunManifest manifest;
    manifest.command = "report";
    manifest.seeds = seeds;

    if (args.kind == "classwise") {
        if (args.gold_path.empty() || args.train_path.empty()) {
            throw UsageError("report classwise needs --gold and --train");
        }
        Task task = task_from_name(args.task);
        if (task == Task::B) throw UsageError("classwise reports cover label tasks (a or c)");
        Dataset gold = load_dataset(args.gold_path, task);
        Dataset train = load_dataset(args.train_path, task);
        std::vector<DistributionRow> dist = label_distribution_report(train);
        manifest.task = task;
        manifest.vocabulary_hash = gold.vocabulary.content_hash();
        manifest.data_paths = {{"gold", args.gold_path}, {"train", args.train_path}};

        csv = "model,class,seed,f1\n";
        for (size_t i = 0; i < args.preds_paths.size(); ++i) {
            Dataset preds = load_dataset(args.preds_paths[i], task);
            std::vector<ClasswiseRow> rows =
                classwise_report(join_label_predictions(gold, preds), dist, args.top_n);
            for (const ClasswiseRow& row : rows) {
                csv += csv_escape(args.model_tag) + "," + csv_escape(row.label) + "," +
                       std::to_string(seeds[i]) + "," + format_double(row.f1) + "\n";
            }
            manifest.data_paths.emplace_back("predictions", args.preds_paths[i]);
        }
    } else if (args.kind == "modality") {
        if (args.gold_a_path.empty() || args.gold_c_path.empty()) {
            throw UsageError("report modality needs --gold-a and --gold-c");
        }
        Dataset gold_a = load_dataset(args.gold_a_path, Task::A);
        Dataset gold_c = load_dataset(args.gold_c_path, Task::C);
        manifest.task = Task::C;
        manifest.vocabulary_hash = gold_c.vocabulary.content_hash();
        manifest.data_paths = {{"gold_a", args.gold_a_path}, {"gold_c", args.gold_c_path}};

        csv = "model,mode,seed,f1\n";
        for (size_t i = 0; i < args.preds_paths.size(); ++i) {
            Dataset preds = load_dataset(args.preds_paths[i], Task::C);
            ModalitySplitScores scores = modality_split_f1(
                label_sets_by_id(gold_a), label_sets_by_id(gold_c), label_sets_by_id(preds));
            csv += csv_escape(args.model_tag) + ",textual," + std::to_string(seeds[i]) + "," +
                   format_double(scores.textual_f1) + "\n";
            csv += csv_escape(args.model_tag) + ",visual," + std::to_string(seeds[i]) + "," +
                   format_double(scores.visual_f1) + "\n";
            manifest.data_paths.emplace_back("predictions", args.preds_paths[i]);
        }
    } else {
        throw UsageError("unknown report kind: " + args.kind + " (expected classwise or modality)");
    }

    if (args.out_path.empty()) {
        std::fputs(csv.c_str(), stdout);
        return kExitOk;
    }
    manifest.output_paths = {{"report", args.out_path}};
    ensure_parent_dir(args.out_path);
    write_file(args.out_path, manifest_comment(manifest) + csv);
    save_manifest(manifest, args.out_path + ".manifest.json");
    std::printf("wrote %s report to %s\n", args.kind.c_str(), args.out_path.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"propspan: multi-label persuasion-technique detection over meme corpora"};
    app.require_subcommand(1);

    ValidateArgs validate_args;
    CLI::App* validate_cmd = app.add_subcommand("validate", "Validate a corpus file");
    validate_cmd->add_option("data", validate_args.data_path, "Corpus JSON file")->required();
    validate_cmd->add_option("--task", validate_args.task, "Task: a, b, or c")
        ->check(CLI::IsMember({"a", "b", "c"}));

    StatsArgs stats_args;
    CLI::App* stats_cmd = app.add_subcommand("stats", "Label distribution of a corpus file");
    stats_cmd->add_option("data", stats_args.data_path, "Corpus JSON file")->required();
    stats_cmd->add_option("--task", stats_args.task, "Task: a, b, or c")
        ->check(CLI::IsMember({"a", "b", "c"}));
    stats_cmd->add_option("--out", stats_args.out_path, "Write CSV here instead of stdout");

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a classifier head");
    train_args.cmd = train_cmd;
    train_cmd->add_option("--task", train_args.task, "Task: a, b, or c")
        ->check(CLI::IsMember({"a", "b", "c"}));
    train_cmd->add_option("--train", train_args.train_path, "Training split JSON")->required();
    train_cmd->add_option("--dev", train_args.dev_path, "Dev split JSON")->required();
    train_cmd->add_option("--config", train_args.config_path, "Training config JSON");
    train_cmd->add_option("--out-dir", train_args.out_dir, "Output directory");
    train_cmd->add_option("--seed", train_args.seed, "Random seed");
    train_cmd->add_option("--features", train_args.features, "Feature source (task c)")
        ->check(CLI::IsMember({"text", "visual", "ensemble"}));
    train_cmd->add_flag("--ensemble", train_args.ensemble_flag,
                        "Concatenate text and visual features (task c)");
    train_cmd->add_option("--visual-store", train_args.visual_store_path,
                          "Visual feature store JSON");
    train_cmd->add_flag("--visual-synth", train_args.visual_synth,
                        "Generate deterministic synthetic visual features");
    train_cmd->add_option("--visual-synth-seed", train_args.visual_seed,
                          "Seed for synthetic visual features");
    train_cmd->add_option("--visual-dim", train_args.visual_dim, "Synthetic region feature dim");
    train_cmd->add_option("--visual-regions", train_args.visual_regions,
                          "Synthetic regions per image");
    train_cmd->add_option("--text-dim", train_args.text_dim, "Hashed text feature dim");
    train_cmd->add_option("--token-dim", train_args.token_dim, "Hashed token feature dim");
    train_cmd->add_option("--lr", train_args.learning_rate, "Learning rate");
    train_cmd->add_option("--batch-size", train_args.batch_size, "Batch size");
    train_cmd->add_option("--max-seq-len", train_args.max_seq_len, "Max sequence length");
    train_cmd->add_option("--patience", train_args.patience, "Early-stopping patience");
    train_cmd->add_option("--weight-decay", train_args.weight_decay, "Decoupled weight decay");
    train_cmd->add_option("--optimizer", train_args.optimizer, "sgd, adam, or adamw")
        ->check(CLI::IsMember({"sgd", "adam", "adamw"}));
    train_cmd->add_option("--dropout", train_args.dropout, "Dropout rate");
    train_cmd->add_option("--epochs", train_args.max_epochs, "Max epochs");
    train_cmd->add_option("--warmup", train_args.warmup, "Warmup fraction of total steps");
    train_cmd->add_option("--hidden-dim", train_args.hidden_dim, "Hidden layer width");
    train_cmd->add_option("--threshold", train_args.threshold, "Decision threshold");
    train_cmd->add_flag("--no-class-weights", train_args.no_class_weights,
                        "Disable class-weighted loss");
    train_cmd->add_option("--chunk-size", train_args.chunk_size, "Tokenizer chunk size");

    PredictArgs predict_args;
    CLI::App* predict_cmd = app.add_subcommand("predict", "Predict labels or spans");
    predict_cmd->add_option("--checkpoint", predict_args.checkpoint_path, "Checkpoint JSON")
        ->required();
    predict_cmd->add_option("--data", predict_args.data_path, "Corpus JSON file")->required();
    predict_cmd->add_option("--out", predict_args.out_path, "Predictions output path")->required();
    predict_cmd->add_option("--vocab", predict_args.vocab_path,
                            "Vocabulary JSON; must hash-match the checkpoint");
    predict_cmd->add_option("--visual-store", predict_args.visual_store_path,
                            "Visual feature store JSON");

    ScoreArgs score_args;
    CLI::App* score_cmd = app.add_subcommand("score", "Score predictions against gold");
    score_cmd->add_option("--task", score_args.task, "Task: a, b, or c")
        ->check(CLI::IsMember({"a", "b", "c"}));
    score_cmd->add_option("--preds", score_args.preds_paths, "Predictions JSON (repeatable)")
        ->required();
    score_cmd->add_option("--gold", score_args.gold_path, "Gold corpus JSON");
    score_cmd->add_option("--gold-a", score_args.gold_a_path, "Task A gold (modality split)");
    score_cmd->add_option("--gold-c", score_args.gold_c_path, "Task C gold (modality split)");
    score_cmd->add_option("--train", score_args.train_path, "Train split (classwise ranking)");
    score_cmd->add_option("--out", score_args.out_path, "Write metrics JSON here");
    score_cmd->add_option("--macro-empty", score_args.macro_empty,
                          "Macro-F1 handling of labels absent everywhere")
        ->check(CLI::IsMember({"exclude", "zero"}));
    score_cmd->add_option("--classwise", score_args.classwise, "Emit per-label F1 for top N labels");
    score_cmd->add_flag("--modality-split", score_args.modality_split,
                        "Textual/visual split scores from task A vs C gold");

    ReportArgs report_args;
    CLI::App* report_cmd = app.add_subcommand("report", "Long-format CSV reports for plotting");
    report_cmd->add_option("kind", report_args.kind, "classwise or modality")
        ->check(CLI::IsMember({"classwise", "modality"}));
    report_cmd->add_option("--task", report_args.task, "Task: a or c (classwise)")
        ->check(CLI::IsMember({"a", "b", "c"}));
    report_cmd->add_option("--preds", report_args.preds_paths, "Predictions JSON (repeatable)")
        ->required();
    report_cmd->add_option("--seed", report_args.seeds, "Seed labels matching --preds order");
    report_cmd->add_option("--gold", report_args.gold_path, "Gold corpus JSON");
    report_cmd->add_option("--gold-a", report_args.gold_a_path, "Task A gold (modality)");
    report_cmd->add_option("--gold-c", report_args.gold_c_path, "Task C gold (modality)");
    report_cmd->add_option("--train", report_args.train_path, "Train split (classwise ranking)");
    report_cmd->add_option("--model-tag", report_args.model_tag, "Model column value");
    report_cmd->add_option("--top-n", report_args.top_n, "Number of most frequent labels");
    report_cmd->add_option("--out", report_args.out_path, "Write CSV here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate_cmd) return run_validate(validate_args);
        if (*stats_cmd) return run_stats(stats_args);
        if (*train_cmd) return run_train(train_args);
        if (*predict_cmd) return run_predict(predict_args);
        if (*score_cmd) return run_score(score_args);
        if (*report_cmd) return run_report(report_args);
    } catch (const UsageError& err) {
        std::fprintf(stderr, "usage error: %s\n", err.what());
        return kExitUsageError;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return kExitDataError;
    }
    return kExitUsageError;
}
