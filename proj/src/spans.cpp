#include "propspan/spans.hpp"

#include <algorithm>

#include "propspan/util.hpp"

namespace propspan {

int TokenizedText::num_words() const {
    int max_word = -1;
    for (const auto& tok : tokens) {
        if (!tok.is_special) max_word = std::max(max_word, tok.word_id);
    }
    return max_word + 1;
}

TokenizedText ChunkTokenizer::tokenize(const std::string& text) const {
    std::u32string cps = utf8_decode(text);
    TokenizedText out;
    out.source = text;

    struct WordRange {
        int start;
        int end;
    };
    std::vector<WordRange> words;
    int i = 0;
    int n = static_cast<int>(cps.size());
    while (i < n) {
        while (i < n && is_ascii_space(cps[static_cast<std::size_t>(i)])) ++i;
        if (i >= n) break;
        int start = i;
        while (i < n && !is_ascii_space(cps[static_cast<std::size_t>(i)])) ++i;
        words.push_back(WordRange{start, i});
    }

    out.tokens.push_back(Token{"<s>", 0, 0, -1, true});
    int budget = max_tokens_ - 2;
    int word_id = 0;
    for (const auto& w : words) {
        int len = w.end - w.start;
        int chunks = (len + chunk_size_ - 1) / chunk_size_;
        if (chunks > budget) break;  // truncate at a word boundary
        for (int c = 0; c < chunks; ++c) {
            int s = w.start + c * chunk_size_;
            int e = std::min(w.end, s + chunk_size_);
            out.tokens.push_back(Token{
                utf8_encode(std::u32string_view(cps).substr(static_cast<std::size_t>(s),
                                                            static_cast<std::size_t>(e - s))),
                s, e, word_id, false});
        }
        budget -= chunks;
        ++word_id;
    }
    out.tokens.push_back(Token{"</s>", n, n, -1, true});
    return out;
}

TokenLabelMatrix project_spans_to_tokens(const std::vector<LabeledSpan>& spans,
                                         const TokenizedText& t, int num_labels) {
    int text_len = static_cast<int>(utf8_length(t.source));
    for (const auto& s : spans) {
        if (s.start < 0 || s.end > text_len || s.start >= s.end)
            throw std::out_of_range("span [" + std::to_string(s.start) + "," +
                                    std::to_string(s.end) + ") invalid for text of length " +
                                    std::to_string(text_len));
        if (s.technique.id < 0 || s.technique.id >= num_labels)
            throw std::out_of_range("span label id " + std::to_string(s.technique.id) +
                                    " outside vocabulary of size " + std::to_string(num_labels));
    }

    TokenLabelMatrix m(static_cast<int>(t.tokens.size()), num_labels);
    for (std::size_t j = 0; j < t.tokens.size(); ++j) {
        const Token& tok = t.tokens[j];
        if (tok.is_special) continue;
        for (const auto& s : spans) {
            if (std::max(tok.start, s.start) < std::min(tok.end, s.end))
                m.set(static_cast<int>(j), s.technique.id, true);
        }
    }
    return m;
}

WordLabelSets merge_tokens_to_words(const TokenLabelMatrix& m, const TokenizedText& t) {
    if (m.num_tokens() != static_cast<int>(t.tokens.size()))
        throw std::invalid_argument("matrix row count does not match token count");

    WordLabelSets words;
    for (std::size_t j = 0; j < t.tokens.size(); ++j) {
        const Token& tok = t.tokens[j];
        if (tok.is_special) continue;
        if (words.empty() || words.back().word_id != tok.word_id) {
            words.push_back(WordLabels{tok.word_id, tok.start, tok.end, {}});
        }
        WordLabels& w = words.back();
        w.start = std::min(w.start, tok.start);
        w.end = std::max(w.end, tok.end);
        for (int k = 0; k < m.num_labels(); ++k) {
            if (m.get(static_cast<int>(j), k) &&
                !std::binary_search(w.labels.begin(), w.labels.end(), k)) {
                w.labels.insert(std::lower_bound(w.labels.begin(), w.labels.end(), k), k);
            }
        }
    }
    return words;
}

std::vector<LabeledSpan> words_to_char_spans(const WordLabelSets& w, const TokenizedText& t,
                                             const LabelVocabulary& vocab) {
    (void)t;
    std::vector<LabeledSpan> out;
    for (int k = 0; k < vocab.size(); ++k) {
        std::size_t i = 0;
        while (i < w.size()) {
            if (!std::binary_search(w[i].labels.begin(), w[i].labels.end(), k)) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j + 1 < w.size() && w[j + 1].word_id == w[j].word_id + 1 &&
                   std::binary_search(w[j + 1].labels.begin(), w[j + 1].labels.end(), k)) {
                ++j;
            }
            out.push_back(LabeledSpan{w[i].start, w[j].end, vocab.label(k)});
            i = j + 1;
        }
    }
    return out;
}

}  // namespace propspan
