#pragma once

#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "propspan/corpus.hpp"
#include "propspan/features.hpp"
#include "propspan/model.hpp"
#include "propspan/train.hpp"

namespace propspan {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kCheckpointFormat = "propspan-checkpoint";
inline constexpr int kCheckpointVersion = 1;

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
uint64_t config_hash(const nlohmann::json& config_json);

// Featurizer configs are persisted as tagged JSON so a checkpoint can rebuild
// its frozen extractor stack at predict time. Visual members record whether
// their store came from a file or the synthetic generator.
nlohmann::json featurizer_to_json(const TextFeaturizer& f);
nlohmann::json featurizer_to_json(const TokenFeaturizer& f);

struct VisualSourceSpec {
    bool synthetic = false;
    uint64_t synth_seed = 0;
    int regions = 36;
    int dim = 64;
};

nlohmann::json visual_member_json(const VisualSourceSpec& spec);

struct Checkpoint {
    Task task = Task::A;
    bool token_level = false;
    LabelVocabulary vocabulary;
    nlohmann::json featurizer;  // tagged config (text / token / ensemble members)
    TrainConfig config;
    MlpHead head;
    int best_epoch = -1;
    double best_dev_metric = 0.0;

    uint64_t vocabulary_hash() const { return vocabulary.content_hash(); }
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds the record-level extractor described by a checkpoint's featurizer
// config. Visual members need either an external store or, for synthetic
// sources, the image keys to regenerate features for.
std::shared_ptr<const FeatureExtractor> build_extractor(
    const nlohmann::json& featurizer, std::shared_ptr<const VisualFeatureStore> store,
    const std::vector<std::string>& synth_keys);

TokenFeaturizer token_featurizer_from_json(const nlohmann::json& featurizer);

// Reproducibility record written next to every command's outputs; output
// files carry the manifest hash so they can be traced back.
struct RunManifest {
    std::string command;
    Task task = Task::A;
    std::vector<uint64_t> seeds;
    uint64_t config_hash = 0;
    uint64_t vocabulary_hash = 0;
    std::vector<std::pair<std::string, std::string>> data_paths;   // role -> path
    std::vector<std::pair<std::string, std::string>> output_paths;  // role -> path

    nlohmann::json to_json() const;  // includes tool_version and manifest_hash
    uint64_t hash() const;
};

void save_manifest(const RunManifest& manifest, const std::string& path);

}  // namespace propspan
