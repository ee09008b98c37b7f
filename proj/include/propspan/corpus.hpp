#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace propspan {

enum class Task { A, B, C };
enum class Split { Train, Dev, Test };

const char* task_name(Task t);
Task task_from_name(const std::string& name);
const char* split_name(Split s);

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string record_id, const std::string& what)
        : std::runtime_error(record_id.empty() ? what : "record '" + record_id + "': " + what),
          record_id_(std::move(record_id)) {}
    const std::string& record_id() const { return record_id_; }

private:
    std::string record_id_;
};

struct TechniqueLabel {
    int id = -1;
    std::string name;

    friend bool operator==(const TechniqueLabel&, const TechniqueLabel&) = default;
};

// Label names in first-appearance order; the index is frozen once persisted
// so weight-vector positions stay reproducible.
class LabelVocabulary {
public:
    LabelVocabulary() = default;
    explicit LabelVocabulary(Task task) : task_(task) {}

    int add(const std::string& name);         // returns existing id if present
    int id_of(const std::string& name) const;  // -1 if absent
    const TechniqueLabel& label(int id) const;
    const std::vector<TechniqueLabel>& labels() const { return labels_; }
    int size() const { return static_cast<int>(labels_.size()); }
    Task task() const { return task_; }

    bool is_subset_of(const LabelVocabulary& other) const;
    uint64_t content_hash() const;

    std::vector<std::string> names() const;
    static LabelVocabulary from_names(const std::vector<std::string>& names, Task task);

private:
    Task task_ = Task::A;
    std::vector<TechniqueLabel> labels_;
    std::vector<std::pair<std::string, int>> index_;  // sorted by name
};

struct LabeledSpan {
    int start = 0;  // character offsets in Unicode scalar values, end exclusive
    int end = 0;
    TechniqueLabel technique;
};

struct MemeRecord {
    std::string id;
    std::string text;                      // UTF-8
    std::set<int> labels;                  // label ids into the owning vocabulary
    std::vector<LabeledSpan> spans;        // task B only
    std::optional<std::string> image_key;  // task C feature-store reference

    int text_length = 0;  // cached length in scalar values
};

struct Dataset {
    Split split = Split::Train;
    Task task = Task::A;
    std::vector<MemeRecord> records;
    LabelVocabulary vocabulary;
};

// Loads and validates one split file (JSON array, schema per task). Throws
// ParseError with line context on malformed JSON and ValidationError naming
// the offending record otherwise.
Dataset load_dataset(const std::string& path, Task task);
Dataset load_dataset_from_string(const std::string& json_text, Task task,
                                 Split split = Split::Train,
                                 const std::string& origin = "<string>");
std::string serialize_dataset(const Dataset& dataset);
void save_dataset(const Dataset& dataset, const std::string& path);

Split split_from_path(const std::string& path);

// f[k] = number of records whose label set contains k, over the given split.
std::vector<int64_t> class_frequencies(const Dataset& dataset);

struct DistributionRow {
    std::string label;
    int64_t count = 0;
    double fraction = 0.0;  // count / record count (multi-label; need not sum to 1)
};

// Rows sorted by count descending, ties by vocabulary index.
std::vector<DistributionRow> label_distribution_report(const Dataset& dataset);

void save_vocabulary(const LabelVocabulary& vocab, const std::string& path);
LabelVocabulary load_vocabulary(const std::string& path, Task task);

}  // namespace propspan
