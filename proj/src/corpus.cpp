#include "propspan/corpus.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "propspan/log.hpp"
#include "propspan/util.hpp"

using nlohmann::json;

namespace propspan {

const char* task_name(Task t) {
    switch (t) {
        case Task::A: return "a";
        case Task::B: return "b";
        case Task::C: return "c";
    }
    return "?";
}

Task task_from_name(const std::string& name) {
    if (name == "a" || name == "A") return Task::A;
    if (name == "b" || name == "B") return Task::B;
    if (name == "c" || name == "C") return Task::C;
    throw std::invalid_argument("unknown task: " + name);
}

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    return "?";
}

int LabelVocabulary::add(const std::string& name) {
    if (name.empty()) throw std::invalid_argument("label name must be non-empty");
    int existing = id_of(name);
    if (existing >= 0) return existing;
    int id = static_cast<int>(labels_.size());
    labels_.push_back(TechniqueLabel{id, name});
    auto it = std::lower_bound(index_.begin(), index_.end(), name,
                               [](const auto& p, const std::string& n) { return p.first < n; });
    index_.insert(it, {name, id});
    return id;
}

int LabelVocabulary::id_of(const std::string& name) const {
    auto it = std::lower_bound(index_.begin(), index_.end(), name,
                               [](const auto& p, const std::string& n) { return p.first < n; });
    if (it != index_.end() && it->first == name) return it->second;
    return -1;
}

const TechniqueLabel& LabelVocabulary::label(int id) const {
    return labels_.at(static_cast<std::size_t>(id));
}

bool LabelVocabulary::is_subset_of(const LabelVocabulary& other) const {
    for (const auto& l : labels_) {
        if (other.id_of(l.name) < 0) return false;
    }
    return true;
}

uint64_t LabelVocabulary::content_hash() const {
    uint64_t h = kFnvOffset;
    for (const auto& l : labels_) {
        h = fnv1a64(l.name, h);
        h = fnv1a64(std::string_view("\x1f", 1), h);
    }
    return h;
}

std::vector<std::string> LabelVocabulary::names() const {
    std::vector<std::string> out;
    out.reserve(labels_.size());
    for (const auto& l : labels_) out.push_back(l.name);
    return out;
}

LabelVocabulary LabelVocabulary::from_names(const std::vector<std::string>& names, Task task) {
    LabelVocabulary v(task);
    for (const auto& n : names) v.add(n);
    if (v.size() != static_cast<int>(names.size()))
        throw std::invalid_argument("duplicate label names in vocabulary");
    return v;
}

namespace {

std::size_t line_of_offset(const std::string& text, std::size_t byte_offset) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte_offset && i < text.size(); ++i) {
        if (text[i] == '\n') ++line;
    }
    return line;
}

std::string require_string(const json& obj, const char* key, const std::string& record_id) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
        throw ValidationError(record_id, std::string("missing or non-string field '") + key + "'");
    return it->get<std::string>();
}

void validate_spans(MemeRecord& rec) {
    // same-technique spans must not overlap; cross-technique overlap is fine
    std::vector<LabeledSpan> sorted = rec.spans;
    std::sort(sorted.begin(), sorted.end(), [](const LabeledSpan& a, const LabeledSpan& b) {
        if (a.technique.id != b.technique.id) return a.technique.id < b.technique.id;
        return a.start < b.start;
    });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const LabeledSpan& prev = sorted[i - 1];
        const LabeledSpan& cur = sorted[i];
        if (cur.technique.id == prev.technique.id && cur.start < prev.end) {
            throw ValidationError(rec.id, "overlapping spans for technique '" + cur.technique.name +
                                              "' at [" + std::to_string(prev.start) + "," +
                                              std::to_string(prev.end) + ") and [" +
                                              std::to_string(cur.start) + "," +
                                              std::to_string(cur.end) + ")");
        }
    }
}

MemeRecord parse_record(const json& obj, Task task, LabelVocabulary& vocab) {
    if (!obj.is_object()) throw ValidationError("", "record is not a JSON object");
    MemeRecord rec;
    rec.id = require_string(obj, "id", "");
    rec.text = require_string(obj, "text", rec.id);
    try {
        rec.text_length = static_cast<int>(utf8_decode(rec.text).size());
    } catch (const Utf8Error& e) {
        throw ValidationError(rec.id, std::string("text is not valid UTF-8: ") + e.what());
    }

    auto labels_it = obj.find("labels");
    if (labels_it == obj.end() || !labels_it->is_array())
        throw ValidationError(rec.id, "missing or non-array field 'labels'");

    if (task == Task::B) {
        for (const auto& item : *labels_it) {
            if (!item.is_object())
                throw ValidationError(rec.id, "task B label entries must be span objects");
            std::string tech = require_string(item, "technique", rec.id);
            auto get_int = [&](const char* key) {
                auto it = item.find(key);
                if (it == item.end() || !it->is_number_integer())
                    throw ValidationError(rec.id, std::string("span field '") + key + "' missing or not an integer");
                return it->get<int64_t>();
            };
            int64_t start = get_int("start");
            int64_t end = get_int("end");
            if (start < 0) throw ValidationError(rec.id, "span start is negative");
            if (end < start) throw ValidationError(rec.id, "span end before start (start=" +
                                                               std::to_string(start) + ", end=" +
                                                               std::to_string(end) + ")");
            if (end == start) throw ValidationError(rec.id, "empty span at offset " + std::to_string(start));
            if (end > rec.text_length)
                throw ValidationError(rec.id, "span end " + std::to_string(end) +
                                                  " exceeds text length " + std::to_string(rec.text_length));
            int label_id = vocab.add(tech);
            rec.spans.push_back(LabeledSpan{static_cast<int>(start), static_cast<int>(end),
                                            vocab.label(label_id)});
            rec.labels.insert(label_id);
        }
        validate_spans(rec);
    } else {
        for (const auto& item : *labels_it) {
            if (!item.is_string())
                throw ValidationError(rec.id, "label entries must be strings for tasks A and C");
            rec.labels.insert(vocab.add(item.get<std::string>()));
        }
        if (task == Task::C) {
            auto img = obj.find("image");
            if (img != obj.end()) {
                if (!img->is_string()) throw ValidationError(rec.id, "field 'image' must be a string");
                rec.image_key = img->get<std::string>();
            }
        }
    }
    return rec;
}

}  // namespace

Dataset load_dataset_from_string(const std::string& json_text, Task task, Split split,
                                 const std::string& origin) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ":" + std::to_string(line_of_offset(json_text, e.byte)) +
                         ": " + e.what());
    }
    if (!root.is_array()) throw ParseError(origin + ": top-level JSON value must be an array");

    Dataset ds;
    ds.split = split;
    ds.task = task;
    ds.vocabulary = LabelVocabulary(task);
    std::set<std::string> seen_ids;
    for (const auto& obj : root) {
        MemeRecord rec = parse_record(obj, task, ds.vocabulary);
        if (!seen_ids.insert(rec.id).second)
            throw ValidationError(rec.id, "duplicate record id within split");
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

Dataset load_dataset(const std::string& path, Task task) {
    return load_dataset_from_string(read_file(path), task, split_from_path(path), path);
}

Split split_from_path(const std::string& path) {
    auto slash = path.find_last_of("/\\");
    std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
    if (stem.find("dev") != std::string::npos || stem.find("val") != std::string::npos)
        return Split::Dev;
    if (stem.find("test") != std::string::npos) return Split::Test;
    return Split::Train;
}

std::string serialize_dataset(const Dataset& dataset) {
    json arr = json::array();
    for (const auto& rec : dataset.records) {
        json obj;
        obj["id"] = rec.id;
        obj["text"] = rec.text;
        if (dataset.task == Task::B) {
            json spans = json::array();
            for (const auto& s : rec.spans) {
                spans.push_back({{"technique", s.technique.name}, {"start", s.start}, {"end", s.end}});
            }
            obj["labels"] = std::move(spans);
        } else {
            json labels = json::array();
            for (int id : rec.labels) labels.push_back(dataset.vocabulary.label(id).name);
            obj["labels"] = std::move(labels);
            if (dataset.task == Task::C && rec.image_key) obj["image"] = *rec.image_key;
        }
        arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    write_file(path, serialize_dataset(dataset));
}

std::vector<int64_t> class_frequencies(const Dataset& dataset) {
    std::vector<int64_t> f(static_cast<std::size_t>(dataset.vocabulary.size()), 0);
    for (const auto& rec : dataset.records) {
        for (int id : rec.labels) ++f[static_cast<std::size_t>(id)];
    }
    return f;
}

std::vector<DistributionRow> label_distribution_report(const Dataset& dataset) {
    std::vector<int64_t> f = class_frequencies(dataset);
    std::vector<DistributionRow> rows;
    rows.reserve(f.size());
    double n = static_cast<double>(dataset.records.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        rows.push_back(DistributionRow{dataset.vocabulary.label(static_cast<int>(k)).name, f[k],
                                       n > 0 ? static_cast<double>(f[k]) / n : 0.0});
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const DistributionRow& a, const DistributionRow& b) { return a.count > b.count; });
    return rows;
}

void save_vocabulary(const LabelVocabulary& vocab, const std::string& path) {
    json arr = json::array();
    for (const auto& name : vocab.names()) arr.push_back(name);
    write_file(path, arr.dump(2) + "\n");
}

LabelVocabulary load_vocabulary(const std::string& path, Task task) {
    json arr;
    try {
        arr = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (!arr.is_array()) throw ParseError(path + ": vocabulary file must be a JSON array");
    std::vector<std::string> names;
    for (const auto& v : arr) {
        if (!v.is_string()) throw ParseError(path + ": vocabulary entries must be strings");
        names.push_back(v.get<std::string>());
    }
    return LabelVocabulary::from_names(names, task);
}

}  // namespace propspan
