#pragma once

// Tagged-corpus ingestion, POS label normalization, seeded sentence splits
// and single-word masking.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cpnlp {

class MalformedTagError : public std::invalid_argument {
 public:
  explicit MalformedTagError(const std::string& raw);
};

class CorpusParseError : public std::runtime_error {
 public:
  CorpusParseError(std::size_t line, std::size_t column, const std::string& what);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class DegenerateSplitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TaggedToken {
  std::string word;
  std::string tag;

  friend bool operator==(const TaggedToken&, const TaggedToken&) = default;
};

struct TaggedSentence {
  std::vector<TaggedToken> tokens;

  friend bool operator==(const TaggedSentence&, const TaggedSentence&) = default;
};

/// Sentences plus the induced label set (first-appearance order) and word
/// vocabulary. Build through `parse_tagged_corpus` or `TaggedCorpus::from_sentences`
/// so the index invariants hold.
class TaggedCorpus {
 public:
  TaggedCorpus() = default;

  static TaggedCorpus from_sentences(std::vector<TaggedSentence> sentences);

  const std::vector<TaggedSentence>& sentences() const noexcept { return sentences_; }
  const std::vector<std::string>& label_set() const noexcept { return labels_; }
  const std::vector<std::string>& vocab() const noexcept { return vocab_; }

  std::size_t size() const noexcept { return sentences_.size(); }
  std::size_t token_count() const noexcept;

  /// Index of `tag` in the label set; throws std::out_of_range if absent.
  std::uint32_t label_index(std::string_view tag) const;

  friend bool operator==(const TaggedCorpus& a, const TaggedCorpus& b) {
    return a.sentences_ == b.sentences_ && a.labels_ == b.labels_ && a.vocab_ == b.vocab_;
  }

 private:
  std::vector<TaggedSentence> sentences_;
  std::vector<std::string> labels_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::uint32_t> label_ids_;
};

/// Strips `-HL`, `-TL`, `-NC` suffixes and the `FW-` prefix until none
/// remains. Suffix/prefix matching is case-insensitive (the NLTK
/// distribution of Brown uses lower-case tags) and the result is
/// upper-cased. `+`-combined tags stay a single label.
std::string normalize_tag(std::string_view raw);

/// One sentence per line, whitespace-separated `word/TAG` tokens split on the
/// last `/`. Blank lines are skipped.
TaggedCorpus parse_tagged_corpus(std::istream& in);
TaggedCorpus parse_tagged_corpus(std::string_view text);
TaggedCorpus load_tagged_corpus(const std::string& path);

/// Writes the corpus back in the input format; parse(serialize(c)) == c.
void serialize_corpus(const TaggedCorpus& corpus, std::ostream& out);

struct SplitSpec {
  double train_frac = 0.8;
  double cal_frac = 0.1;
  double test_frac = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CorpusSplit {
  std::uint64_t seed = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> cal;
  std::vector<std::size_t> test;

  friend bool operator==(const CorpusSplit&, const CorpusSplit&) = default;
};

/// Seeded uniform permutation partitioned as floor(n*train), floor(n*cal),
/// remainder to test.
CorpusSplit split_corpus(const TaggedCorpus& corpus, const SplitSpec& spec);
CorpusSplit split_indices(std::size_t n_sentences, const SplitSpec& spec);

/// Split file: seed on the first line, then the train, cal and test index
/// lists, one space-separated line each.
void write_split(const CorpusSplit& split, std::ostream& out);
CorpusSplit read_split(std::istream& in);

struct MaskedInstance {
  std::size_t sentence_index = 0;
  std::size_t mask_position = 0;
  std::string true_word;

  friend bool operator==(const MaskedInstance&, const MaskedInstance&) = default;
};

/// Uniform mask position over all tokens of the sentence, drawn from
/// SplitMix64 seeded with derive_seed(seed, sentence_index).
MaskedInstance mask_one_word(const TaggedCorpus& corpus, std::size_t sentence_index,
                             std::uint64_t seed);

/// Masked-sentence exchange format: `mask_position<TAB>sentence` with the
/// sentence as space-joined words (the original word stays in place; the
/// consumer substitutes its own mask token).
void write_masked_sentences(const TaggedCorpus& corpus,
                            const std::vector<MaskedInstance>& instances, std::ostream& out);

}  // namespace cpnlp
