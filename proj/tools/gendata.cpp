// gendata: writes the deterministic synthetic corpora used for demos and
// tests — a technique-style corpus for all three tasks (with a matching
// visual feature store), plus the planted, imbalanced, multimodal, and span
// fixture families.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <string>

#include "propspan/corpus.hpp"
#include "propspan/synth.hpp"

namespace fs = std::filesystem;
using namespace propspan;

namespace {

std::string out_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void write_bundle(const CorpusBundle& bundle, const std::string& dir, const std::string& prefix) {
    save_dataset(bundle.train, out_path(dir, prefix + "_train.json"));
    save_dataset(bundle.dev, out_path(dir, prefix + "_dev.json"));
    save_dataset(bundle.test, out_path(dir, prefix + "_test.json"));
    std::printf("wrote %s_{train,dev,test}.json to %s\n", prefix.c_str(), dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gendata: deterministic synthetic corpora for the propspan pipeline"};
    app.require_subcommand(1);

    std::string out_dir = ".";
    uint64_t seed = 1;
    app.add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
    app.add_option("--seed", seed, "Generator seed")->capture_default_str();

    auto* technique = app.add_subcommand(
        "technique", "Technique-style corpus for tasks a, b, c plus a visual store");
    int train_n = 687, dev_n = 63, test_n = 201;
    technique->add_option("--train-n", train_n, "Training records")->capture_default_str();
    technique->add_option("--dev-n", dev_n, "Dev records")->capture_default_str();
    technique->add_option("--test-n", test_n, "Test records")->capture_default_str();

    auto* planted = app.add_subcommand("planted", "Linearly separable multi-label set (task a)");
    int pl_train = 200, pl_dev = 50, pl_labels = 5;
    planted->add_option("--train-n", pl_train, "Training records")->capture_default_str();
    planted->add_option("--dev-n", pl_dev, "Dev records")->capture_default_str();
    planted->add_option("--labels", pl_labels, "Label count")->capture_default_str();

    auto* imbalanced = app.add_subcommand("imbalanced", "Skewed single-label set (task a)");
    int im_train = 400, im_dev = 200;
    double im_rate = 0.1;
    imbalanced->add_option("--train-n", im_train, "Training records")->capture_default_str();
    imbalanced->add_option("--dev-n", im_dev, "Dev records")->capture_default_str();
    imbalanced->add_option("--rate", im_rate, "Positive rate")->capture_default_str();

    auto* multimodal = app.add_subcommand(
        "multimodal", "Task c set whose label needs a text flag AND a visual flag");
    int mm_train = 300, mm_dev = 200, mm_test = 200, mm_dv = 32, mm_regions = 4;
    multimodal->add_option("--train-n", mm_train, "Training records")->capture_default_str();
    multimodal->add_option("--dev-n", mm_dev, "Dev records")->capture_default_str();
    multimodal->add_option("--test-n", mm_test, "Test records")->capture_default_str();
    multimodal->add_option("--dv", mm_dv, "Region feature dim")->capture_default_str();
    multimodal->add_option("--regions", mm_regions, "Regions per image")->capture_default_str();

    auto* spans = app.add_subcommand("spans", "Task b set with word-aligned cue spans");
    int sp_train = 300, sp_dev = 80;
    spans->add_option("--train-n", sp_train, "Training records")->capture_default_str();
    spans->add_option("--dev-n", sp_dev, "Dev records")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(out_dir);
        if (*technique) {
            TechniqueCorpusOptions opts;
            opts.train_records = train_n;
            opts.dev_records = dev_n;
            opts.test_records = test_n;
            opts.seed = seed;
            write_bundle(make_technique_corpus(Task::A, opts), out_dir, "task_a");
            write_bundle(make_technique_corpus(Task::B, opts), out_dir, "task_b");
            write_bundle(make_technique_corpus(Task::C, opts), out_dir, "task_c");
            VisualFeatureStore store = make_technique_visual_store(opts);
            store.save(out_path(out_dir, "visual_store.json"));
            std::printf("wrote visual_store.json (%zu images)\n", store.size());
        } else if (*planted) {
            write_bundle(make_planted_label_corpus(pl_train, pl_dev, pl_labels, seed), out_dir,
                         "planted");
        } else if (*imbalanced) {
            write_bundle(make_imbalanced_corpus(im_train, im_dev, im_rate, seed), out_dir,
                         "imbalanced");
        } else if (*multimodal) {
            MultimodalCorpus corpus =
                make_multimodal_corpus(mm_train, mm_dev, mm_test, mm_dv, mm_regions, seed);
            save_dataset(corpus.train, out_path(out_dir, "multimodal_train.json"));
            save_dataset(corpus.dev, out_path(out_dir, "multimodal_dev.json"));
            save_dataset(corpus.test, out_path(out_dir, "multimodal_test.json"));
            corpus.store->save(out_path(out_dir, "multimodal_store.json"));
            std::printf("wrote multimodal_{train,dev,test}.json and multimodal_store.json to %s\n",
                        out_dir.c_str());
        } else if (*spans) {
            write_bundle(make_span_corpus(sp_train, sp_dev, seed), out_dir, "span");
        }
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
    return 0;
}
