#include "propspan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

#include "propspan/rng.hpp"
#include "propspan/util.hpp"

namespace propspan {

namespace {

const std::vector<std::string> kTechniqueNames = {
    "Smears",
    "Loaded Language",
    "Name calling / Labelling",
    "Doubt",
    "Exaggeration/Minimisation",
    "Appeal to fear/prejudice",
    "Flag-waving",
    "Causal Oversimplification",
    "Thought-terminating cliché",
    "Whataboutism",
    "Slogans",
    "Appeal to authority",
    "Black-and-white Fallacy/Dictatorship",
    "Glittering generalities (Virtue)",
    "Repetition",
    "Obfuscation, Intentional vagueness, Confusion",
    "Misrepresentation of Someone's Position (Straw Man)",
    "Presenting Irrelevant Data (Red Herring)",
    "Bandwagon",
    "Reductio ad hitlerum",
    "Transfer",
    "Appeal to (Strong) Emotions",
};

const std::vector<std::string> kFillerWords = {
    "the",    "when",      "you",     "your",    "this",   "that",  "just",   "like",
    "meme",   "posts",     "everyone", "nobody", "literally", "actually", "vibes", "energy",
    "mood",   "fr",        "lol",     "bruh",    "café",   "naïve", "jalapeño", "smh",
    "ngl",    "imo",       "tbh",     "irl",     "btw",    "rn",    "lowkey", "highkey",
    "deadass", "fam",      "sus",     "based",   "mid",    "ratio", "cope",   "seethe",
};

const std::vector<std::string> kEmojiWords = {"💀", "🔥", "💯", "😤", "🤡"};

uint64_t record_key(uint64_t seed, uint64_t index, uint64_t salt) {
    return fnv1a64(index, fnv1a64(salt, fnv1a64(seed)));
}

std::string padded_id(const char* prefix, int index) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%06d", prefix, index);
    return std::string(buf);
}

// A word plus the label whose cue it carries (-1 for filler words).
struct DraftWord {
    std::string text;
    int label = -1;
};

struct DraftRecord {
    std::string id;
    std::vector<DraftWord> words;
    std::vector<int> textual_labels;      // canonical label-list indices
    std::vector<int> visual_only_labels;  // task C extras, disjoint from textual
};

std::string join_words(const std::vector<DraftWord>& words) {
    std::string text;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i > 0) text += ' ';
        text += words[i].text;
    }
    return text;
}

// Gold spans are the maximal runs of adjacent words carrying the same label,
// matching how character spans are reconstructed from word labels.
struct DraftSpan {
    int label;
    int start;
    int end;
};

std::vector<DraftSpan> derive_spans(const std::vector<DraftWord>& words) {
    std::vector<int> starts(words.size()), ends(words.size());
    int offset = 0;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i > 0) offset += 1;  // joining space
        starts[i] = offset;
        offset += static_cast<int>(utf8_length(words[i].text));
        ends[i] = offset;
    }
    std::vector<DraftSpan> spans;
    for (size_t i = 0; i < words.size(); ++i) {
        if (words[i].label < 0) continue;
        if (i > 0 && words[i - 1].label == words[i].label) continue;  // inside a run
        size_t j = i;
        while (j + 1 < words.size() && words[j + 1].label == words[i].label) ++j;
        spans.push_back({words[i].label, starts[i], ends[j]});
    }
    std::sort(spans.begin(), spans.end(), [](const DraftSpan& a, const DraftSpan& b) {
        return a.start != b.start ? a.start < b.start : a.label < b.label;
    });
    return spans;
}

void insert_cue(std::vector<DraftWord>& words, RngStream& rng, std::string cue, int label) {
    size_t pos = rng.uniform_index(words.size() + 1);
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), DraftWord{std::move(cue), label});
}

std::vector<DraftWord> sample_fillers(RngStream& rng, int min_count, int max_count,
                                      size_t lexicon_size, bool allow_emoji) {
    lexicon_size = std::min(lexicon_size, kFillerWords.size());
    int count = min_count + static_cast<int>(rng.uniform_index(
                                static_cast<uint64_t>(max_count - min_count + 1)));
    std::vector<DraftWord> words;
    words.reserve(static_cast<size_t>(count) + 1);
    for (int i = 0; i < count; ++i) {
        words.push_back(DraftWord{kFillerWords[rng.uniform_index(lexicon_size)], -1});
    }
    if (allow_emoji && rng.bernoulli(0.15)) {
        words.push_back(DraftWord{kEmojiWords[rng.uniform_index(kEmojiWords.size())], -1});
    }
    return words;
}

double textual_label_probability(int k) { return 0.52 * std::pow(0.78, k) + 0.02; }

DraftRecord draft_technique_record(Task task, const TechniqueCorpusOptions& opts, int global_index) {
    if (opts.num_textual_labels + opts.num_visual_labels >
        static_cast<int>(kTechniqueNames.size())) {
        throw std::invalid_argument("technique corpus: label count exceeds available names");
    }
    DraftRecord rec;
    rec.id = padded_id("meme_", global_index);

    RngStream label_rng(record_key(opts.seed, static_cast<uint64_t>(global_index), 0xA));
    for (int k = 0; k < opts.num_textual_labels; ++k) {
        if (label_rng.bernoulli(textual_label_probability(k))) rec.textual_labels.push_back(k);
    }

    if (task == Task::C) {
        RngStream vis_rng(record_key(opts.seed, static_cast<uint64_t>(global_index), 0xB));
        for (int k = 0; k < opts.num_textual_labels; ++k) {
            bool textual = std::find(rec.textual_labels.begin(), rec.textual_labels.end(), k) !=
                           rec.textual_labels.end();
            if (vis_rng.bernoulli(0.04) && !textual) rec.visual_only_labels.push_back(k);
        }
        for (int v = 0; v < opts.num_visual_labels; ++v) {
            double p = v == 0 ? 0.25 : 0.18;
            if (vis_rng.bernoulli(p)) rec.visual_only_labels.push_back(opts.num_textual_labels + v);
        }
    }

    RngStream text_rng(record_key(opts.seed, static_cast<uint64_t>(global_index), 0xC));
    rec.words = sample_fillers(text_rng, 4, 15, kFillerWords.size(), /*allow_emoji=*/true);
    bool spans_required = task == Task::B;
    for (int k : rec.textual_labels) {
        bool leave_cue = spans_required || text_rng.bernoulli(opts.cue_probability);
        if (!leave_cue) continue;
        int copies = text_rng.bernoulli(0.25) ? 2 : 1;
        for (int c = 0; c < copies; ++c) {
            insert_cue(rec.words, text_rng, "cue" + std::to_string(k), spans_required ? k : -1);
        }
    }
    return rec;
}

MemeRecord finish_record(const DraftRecord& draft, Task task, LabelVocabulary& vocab,
                         const std::vector<std::string>& names) {
    MemeRecord rec;
    rec.id = draft.id;
    rec.text = join_words(draft.words);
    rec.text_length = static_cast<int>(utf8_length(rec.text));
    if (task == Task::B) {
        for (const DraftSpan& s : derive_spans(draft.words)) {
            int id = vocab.add(names[static_cast<size_t>(s.label)]);
            rec.spans.push_back(LabeledSpan{s.start, s.end, vocab.label(id)});
            rec.labels.insert(id);
        }
    } else {
        for (int k : draft.textual_labels) {
            rec.labels.insert(vocab.add(names[static_cast<size_t>(k)]));
        }
        if (task == Task::C) {
            for (int k : draft.visual_only_labels) {
                rec.labels.insert(vocab.add(names[static_cast<size_t>(k)]));
            }
            rec.image_key = "img/" + draft.id + ".png";
        }
    }
    return rec;
}

// Offsets keep ids unique across splits while staying deterministic.
constexpr int kDevIndexOffset = 100000;
constexpr int kTestIndexOffset = 200000;

Dataset build_split(Task task, Split split, int count, int index_offset,
                    const std::function<DraftRecord(int)>& draft_fn,
                    const std::vector<std::string>& names) {
    Dataset ds;
    ds.task = task;
    ds.split = split;
    for (int i = 0; i < count; ++i) {
        ds.records.push_back(finish_record(draft_fn(index_offset + i), task, ds.vocabulary, names));
    }
    return ds;
}

}  // namespace

const std::vector<std::string>& technique_label_names() { return kTechniqueNames; }

CorpusBundle make_technique_corpus(Task task, const TechniqueCorpusOptions& opts) {
    auto draft = [&](int idx) { return draft_technique_record(task, opts, idx); };
    CorpusBundle bundle;
    bundle.train = build_split(task, Split::Train, opts.train_records, 0, draft, kTechniqueNames);
    bundle.dev = build_split(task, Split::Dev, opts.dev_records, kDevIndexOffset, draft,
                             kTechniqueNames);
    bundle.test = build_split(task, Split::Test, opts.test_records, kTestIndexOffset, draft,
                              kTechniqueNames);
    return bundle;
}

VisualFeatureStore make_technique_visual_store(const TechniqueCorpusOptions& opts, int dv,
                                               int regions) {
    VisualFeatureStore store(regions, dv);
    auto add_record = [&](int global_index) {
        DraftRecord draft = draft_technique_record(Task::C, opts, global_index);
        RngStream noise(record_key(opts.seed, static_cast<uint64_t>(global_index), 0xD));
        std::vector<std::vector<double>> feats(static_cast<size_t>(regions),
                                               std::vector<double>(static_cast<size_t>(dv)));
        for (auto& region : feats) {
            for (double& v : region) v = noise.uniform(-0.35, 0.35);
        }
        for (int k : draft.visual_only_labels) {
            int base = (k * 5) % dv;
            for (auto& region : feats) {
                for (int d = 0; d < 5 && base + d < dv; ++d) {
                    region[static_cast<size_t>(base + d)] += 0.9;
                }
            }
        }
        store.insert("img/" + draft.id + ".png", feats);
    };
    for (int i = 0; i < opts.train_records; ++i) add_record(i);
    for (int i = 0; i < opts.dev_records; ++i) add_record(kDevIndexOffset + i);
    for (int i = 0; i < opts.test_records; ++i) add_record(kTestIndexOffset + i);
    return store;
}

CorpusBundle make_planted_label_corpus(int train_n, int dev_n, int num_labels, uint64_t seed) {
    if (num_labels < 1 || num_labels > static_cast<int>(kTechniqueNames.size())) {
        throw std::invalid_argument("planted corpus: unsupported label count");
    }
    std::vector<std::string> names(kTechniqueNames.begin(), kTechniqueNames.begin() + num_labels);
    auto draft = [&](int idx) {
        DraftRecord rec;
        rec.id = padded_id("pl_", idx);
        RngStream rng(record_key(seed, static_cast<uint64_t>(idx), 0x1));
        rec.words = sample_fillers(rng, 3, 8, 12, /*allow_emoji=*/false);
        for (int k = 0; k < num_labels; ++k) {
            if (!rng.bernoulli(0.35)) continue;
            rec.textual_labels.push_back(k);
            insert_cue(rec.words, rng, "plant" + std::to_string(k), -1);
        }
        return rec;
    };
    CorpusBundle bundle;
    bundle.train = build_split(Task::A, Split::Train, train_n, 0, draft, names);
    bundle.dev = build_split(Task::A, Split::Dev, dev_n, kDevIndexOffset, draft, names);
    bundle.test = build_split(Task::A, Split::Test, dev_n, kTestIndexOffset, draft, names);
    return bundle;
}

CorpusBundle make_imbalanced_corpus(int train_n, int dev_n, double positive_rate, uint64_t seed) {
    std::vector<std::string> names = {kTechniqueNames[0]};
    auto draft = [&](int idx) {
        DraftRecord rec;
        rec.id = padded_id("im_", idx);
        RngStream rng(record_key(seed, static_cast<uint64_t>(idx), 0x2));
        rec.words = sample_fillers(rng, 4, 8, 10, /*allow_emoji=*/false);
        bool positive = rng.bernoulli(positive_rate);
        if (positive) rec.textual_labels.push_back(0);
        // Noisy cue: common on positives, still present on some negatives, so a
        // classifier that ignores class balance prefers the majority call.
        if (rng.bernoulli(positive ? 0.9 : 0.15)) insert_cue(rec.words, rng, "smearcue", -1);
        return rec;
    };
    CorpusBundle bundle;
    bundle.train = build_split(Task::A, Split::Train, train_n, 0, draft, names);
    bundle.dev = build_split(Task::A, Split::Dev, dev_n, kDevIndexOffset, draft, names);
    bundle.test = build_split(Task::A, Split::Test, dev_n, kTestIndexOffset, draft, names);
    return bundle;
}

MultimodalCorpus make_multimodal_corpus(int train_n, int dev_n, int test_n, int dv, int regions,
                                        uint64_t seed) {
    std::vector<std::string> names = {kTechniqueNames[0]};
    auto store = std::make_shared<VisualFeatureStore>(regions, dv);
    auto draft = [&](int idx) {
        DraftRecord rec;
        rec.id = padded_id("mm_", idx);
        RngStream rng(record_key(seed, static_cast<uint64_t>(idx), 0x3));
        bool text_flag = rng.bernoulli(0.5);
        bool visual_flag = rng.bernoulli(0.5);
        if (text_flag && visual_flag) rec.textual_labels.push_back(0);
        rec.words = sample_fillers(rng, 3, 6, 10, /*allow_emoji=*/false);
        insert_cue(rec.words, rng, text_flag ? "zzsignal" : "zzplain", -1);

        std::vector<std::vector<double>> feats(static_cast<size_t>(regions),
                                               std::vector<double>(static_cast<size_t>(dv)));
        for (auto& region : feats) {
            for (double& v : region) v = rng.uniform(-0.25, 0.25);
            for (int d = 0; d < 8 && d < dv; ++d) {
                region[static_cast<size_t>(d)] += visual_flag ? 0.8 : -0.8;
            }
        }
        store->insert("img/" + rec.id + ".png", feats);
        return rec;
    };
    // Image keys are attached by finish_record only for task C drafts; reuse the
    // technique-record plumbing by setting them here explicitly.
    auto build = [&](Split split, int count, int offset) {
        Dataset ds;
        ds.task = Task::C;
        ds.split = split;
        for (int i = 0; i < count; ++i) {
            DraftRecord d = draft(offset + i);
            MemeRecord rec;
            rec.id = d.id;
            rec.text = join_words(d.words);
            rec.text_length = static_cast<int>(utf8_length(rec.text));
            for (int k : d.textual_labels) {
                rec.labels.insert(ds.vocabulary.add(names[static_cast<size_t>(k)]));
            }
            rec.image_key = "img/" + d.id + ".png";
            ds.records.push_back(std::move(rec));
        }
        return ds;
    };
    MultimodalCorpus corpus;
    corpus.train = build(Split::Train, train_n, 0);
    corpus.dev = build(Split::Dev, dev_n, kDevIndexOffset);
    corpus.test = build(Split::Test, test_n, kTestIndexOffset);
    corpus.store = store;
    return corpus;
}

CorpusBundle make_span_corpus(int train_n, int dev_n, uint64_t seed) {
    std::vector<std::string> names = {kTechniqueNames[1], kTechniqueNames[2]};
    const std::vector<std::string> cues = {"alarmcue", "insultcue"};
    auto draft = [&](int idx) {
        DraftRecord rec;
        rec.id = padded_id("sp_", idx);
        RngStream rng(record_key(seed, static_cast<uint64_t>(idx), 0x4));
        rec.words = sample_fillers(rng, 6, 12, 16, /*allow_emoji=*/false);
        for (int k = 0; k < 2; ++k) {
            if (!rng.bernoulli(0.6)) continue;
            int copies = rng.bernoulli(0.3) ? 2 : 1;
            for (int c = 0; c < copies; ++c) insert_cue(rec.words, rng, cues[static_cast<size_t>(k)], k);
        }
        return rec;
    };
    CorpusBundle bundle;
    bundle.train = build_split(Task::B, Split::Train, train_n, 0, draft, names);
    bundle.dev = build_split(Task::B, Split::Dev, dev_n, kDevIndexOffset, draft, names);
    bundle.test = build_split(Task::B, Split::Test, dev_n, kTestIndexOffset, draft, names);
    return bundle;
}

}  // namespace propspan
