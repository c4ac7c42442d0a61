#pragma once

// Count-based scorers that feed probability rows to the conformal engine.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cpnlp/corpus.hpp"
#include "cpnlp/scorefile.hpp"

namespace cpnlp {

using ScoreRow = std::vector<double>;

/// Per-word tag distribution with add-k smoothing; unseen words fall back to
/// the smoothed global tag distribution.
class LexicalTagger {
 public:
  /// `labels` fixes the output label order (normally the full corpus label
  /// set, so tags absent from training still receive add-k mass).
  static LexicalTagger fit(const TaggedCorpus& corpus, std::span<const std::size_t> train_sentences,
                           double k = 0.1, bool case_fold = true);

  ScoreRow score_word(std::string_view word) const;

  std::size_t num_labels() const noexcept { return q_; }
  const std::vector<std::uint64_t>& tag_totals() const noexcept { return tag_totals_; }
  /// Tag-index → count for `word` (after case folding); empty when unseen.
  const std::map<std::uint32_t, std::uint64_t>& counts(std::string_view word) const;

 private:
  std::string key(std::string_view word) const;

  std::unordered_map<std::string, std::map<std::uint32_t, std::uint64_t>> counts_;
  std::unordered_map<std::string, std::uint64_t> word_totals_;
  std::vector<std::uint64_t> tag_totals_;
  double k_ = 0.1;
  std::size_t q_ = 0;
  bool case_fold_ = true;
};

struct InfillerWeights {
  double unigram = 0.25;
  double left = 0.375;
  double right = 0.375;

  friend bool operator==(const InfillerWeights&, const InfillerWeights&) = default;
};

/// Interpolated unigram / left-bigram / right-bigram model over the
/// `vocab_cap` most frequent training words. Context words outside the
/// vocabulary share one out-of-vocabulary bucket.
class NGramInfiller {
 public:
  static NGramInfiller fit(const TaggedCorpus& corpus, std::span<const std::size_t> train_sentences,
                           InfillerWeights weights = {}, double k = 0.1, std::size_t vocab_cap = 10000);

  /// Distribution over `vocab()` for a gap between the given neighbours.
  /// A missing neighbour's weight is redistributed proportionally over the
  /// remaining terms.
  ScoreRow score_mask(std::optional<std::string_view> left, std::optional<std::string_view> right) const;

  const LabelVocabulary& vocab() const noexcept { return vocab_; }
  /// Vocabulary index of `word`, or kNoLabel when out of vocabulary.
  std::uint32_t index_of(std::string_view word) const;

  friend bool operator==(const NGramInfiller&, const NGramInfiller&) = default;

 private:
  using Sparse = std::vector<std::pair<std::uint32_t, std::uint64_t>>;

  // context id: vocab index, or vocab size for the OOV bucket
  std::uint32_t context_id(std::string_view word) const;
  void add_conditional(ScoreRow& row, double weight, const Sparse& counts, std::uint64_t total) const;

  LabelVocabulary vocab_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::uint64_t> unigram_;
  std::uint64_t unigram_total_ = 0;
  std::vector<Sparse> after_;   // after_[ctx]: words following ctx
  std::vector<Sparse> before_;  // before_[ctx]: words preceding ctx
  std::vector<std::uint64_t> after_total_;
  std::vector<std::uint64_t> before_total_;
  InfillerWeights weights_;
  double k_ = 0.1;
};

}  // namespace cpnlp
