#pragma once

#include <memory>
#include <string>
#include <vector>

#include "propspan/corpus.hpp"

namespace propspan {

struct Token {
    std::string text;       // UTF-8
    int start = 0;          // character offsets in Unicode scalar values
    int end = 0;            // exclusive; special tokens have start == end
    int word_id = -1;       // -1 for special tokens
    bool is_special = false;
};

struct TokenizedText {
    std::string source;
    std::vector<Token> tokens;

    int num_words() const;
};

// Offset-mapping tokenizer contract. Implementations must produce sorted,
// non-overlapping token ranges and group subword tokens via word_id.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual TokenizedText tokenize(const std::string& text) const = 0;
};

// Default deterministic tokenizer: whitespace words split into fixed-length
// character chunks (pseudo-subwords), wrapped in synthetic special tokens.
// Texts longer than max_tokens are truncated at a word boundary.
class ChunkTokenizer : public Tokenizer {
public:
    explicit ChunkTokenizer(int chunk_size = 4, int max_tokens = 512)
        : chunk_size_(chunk_size), max_tokens_(max_tokens) {
        if (chunk_size_ < 1) throw std::invalid_argument("chunk_size must be >= 1");
        if (max_tokens_ < 2) throw std::invalid_argument("max_tokens must be >= 2");
    }

    TokenizedText tokenize(const std::string& text) const override;

    int chunk_size() const { return chunk_size_; }
    int max_tokens() const { return max_tokens_; }

private:
    int chunk_size_;
    int max_tokens_;
};

// tokens x labels boolean matrix; rows for special tokens stay all-false.
class TokenLabelMatrix {
public:
    TokenLabelMatrix() = default;
    TokenLabelMatrix(int num_tokens, int num_labels)
        : rows_(num_tokens), cols_(num_labels),
          cells_(static_cast<std::size_t>(num_tokens) * static_cast<std::size_t>(num_labels), 0) {}

    int num_tokens() const { return rows_; }
    int num_labels() const { return cols_; }

    bool get(int token, int label) const { return cells_[index(token, label)] != 0; }
    void set(int token, int label, bool v) { cells_[index(token, label)] = v ? 1 : 0; }

    friend bool operator==(const TokenLabelMatrix&, const TokenLabelMatrix&) = default;

private:
    std::size_t index(int token, int label) const {
        return static_cast<std::size_t>(token) * static_cast<std::size_t>(cols_) +
               static_cast<std::size_t>(label);
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<uint8_t> cells_;
};

struct WordLabels {
    int word_id = -1;
    int start = 0;  // character range covered by the word's tokens
    int end = 0;
    std::vector<int> labels;  // sorted label ids
};

// One entry per word_id, in word order.
using WordLabelSets = std::vector<WordLabels>;

// Marks token (j, k) when token j is non-special and its character range
// intersects some span of label k.
TokenLabelMatrix project_spans_to_tokens(const std::vector<LabeledSpan>& spans,
                                         const TokenizedText& t, int num_labels);

// W_i = union of the label sets of word i's tokens; special tokens contribute
// nothing.
WordLabelSets merge_tokens_to_words(const TokenLabelMatrix& m, const TokenizedText& t);

// Inverse mapping: maximal runs of adjacent word_ids sharing a label become
// one character span. Output sorted by (label id, start).
std::vector<LabeledSpan> words_to_char_spans(const WordLabelSets& w, const TokenizedText& t,
                                             const LabelVocabulary& vocab);

}  // namespace propspan
