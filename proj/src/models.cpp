#include "cpnlp/models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace cpnlp {

LexicalTagger LexicalTagger::fit(const TaggedCorpus& corpus, std::span<const std::size_t> train_sentences,
                                 double k, bool case_fold) {
  if (!(k >= 0.0)) throw std::invalid_argument("smoothing constant must be >= 0");
  LexicalTagger model;
  model.k_ = k;
  model.case_fold_ = case_fold;
  model.q_ = corpus.label_set().size();
  model.tag_totals_.assign(model.q_, 0);
  for (auto s : train_sentences) {
    for (const auto& token : corpus.sentences().at(s).tokens) {
      const auto tag = corpus.label_index(token.tag);
      auto w = model.key(token.word);
      ++model.counts_[w][tag];
      ++model.word_totals_[w];
      ++model.tag_totals_[tag];
    }
  }
  return model;
}

std::string LexicalTagger::key(std::string_view word) const {
  std::string out(word);
  if (case_fold_)
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const std::map<std::uint32_t, std::uint64_t>& LexicalTagger::counts(std::string_view word) const {
  static const std::map<std::uint32_t, std::uint64_t> kEmpty;
  auto it = counts_.find(key(word));
  return it == counts_.end() ? kEmpty : it->second;
}

ScoreRow LexicalTagger::score_word(std::string_view word) const {
  ScoreRow row(q_, 0.0);
  const auto kq = k_ * static_cast<double>(q_);
  auto it = counts_.find(key(word));
  if (it != counts_.end()) {
    const auto denom = static_cast<double>(word_totals_.at(it->first)) + kq;
    std::fill(row.begin(), row.end(), k_ / denom);
    for (auto [tag, c] : it->second) row[tag] = (static_cast<double>(c) + k_) / denom;
    return row;
  }
  std::uint64_t total = 0;
  for (auto c : tag_totals_) total += c;
  const auto denom = static_cast<double>(total) + kq;
  if (denom <= 0.0) {
    std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(q_));
    return row;
  }
  for (std::size_t s = 0; s < q_; ++s) row[s] = (static_cast<double>(tag_totals_[s]) + k_) / denom;
  return row;
}

NGramInfiller NGramInfiller::fit(const TaggedCorpus& corpus, std::span<const std::size_t> train_sentences,
                                 InfillerWeights weights, double k, std::size_t vocab_cap) {
  if (train_sentences.empty()) throw std::invalid_argument("infiller needs training sentences");
  if (vocab_cap == 0) throw std::invalid_argument("vocab_cap must be >= 1");
  if (!(k >= 0.0)) throw std::invalid_argument("smoothing constant must be >= 0");
  if (weights.unigram < 0 || weights.left < 0 || weights.right < 0 ||
      std::abs(weights.unigram + weights.left + weights.right - 1.0) > 1e-9)
    throw std::invalid_argument("mixture weights must be non-negative and sum to 1");

  std::unordered_map<std::string, std::uint64_t> freq;
  for (auto s : train_sentences)
    for (const auto& token : corpus.sentences().at(s).tokens) ++freq[token.word];
  std::vector<std::pair<std::string, std::uint64_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > vocab_cap) ranked.resize(vocab_cap);

  NGramInfiller model;
  model.weights_ = weights;
  model.k_ = k;
  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [w, c] : ranked) {
    model.index_.emplace(w, static_cast<std::uint32_t>(words.size()));
    words.push_back(w);
  }
  model.vocab_ = LabelVocabulary(std::move(words));

  const auto V = model.vocab_.size();
  model.unigram_.assign(V, 0);
  std::vector<std::map<std::uint32_t, std::uint64_t>> after(V + 1), before(V + 1);
  for (auto s : train_sentences) {
    const auto& tokens = corpus.sentences()[s].tokens;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto w = model.index_of(tokens[i].word);
      if (w == kNoLabel) continue;
      ++model.unigram_[w];
      ++model.unigram_total_;
      if (i > 0) ++after[model.context_id(tokens[i - 1].word)][w];
      if (i + 1 < tokens.size()) ++before[model.context_id(tokens[i + 1].word)][w];
    }
  }
  auto flatten = [](const std::vector<std::map<std::uint32_t, std::uint64_t>>& maps,
                    std::vector<Sparse>& out, std::vector<std::uint64_t>& totals) {
    out.resize(maps.size());
    totals.assign(maps.size(), 0);
    for (std::size_t c = 0; c < maps.size(); ++c) {
      out[c].assign(maps[c].begin(), maps[c].end());
      for (auto& [w, n] : maps[c]) totals[c] += n;
    }
  };
  flatten(after, model.after_, model.after_total_);
  flatten(before, model.before_, model.before_total_);
  return model;
}

std::uint32_t NGramInfiller::index_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kNoLabel : it->second;
}

std::uint32_t NGramInfiller::context_id(std::string_view word) const {
  const auto id = index_of(word);
  return id == kNoLabel ? static_cast<std::uint32_t>(vocab_.size()) : id;
}

void NGramInfiller::add_conditional(ScoreRow& row, double weight, const Sparse& counts,
                                    std::uint64_t total) const {
  const auto denom = static_cast<double>(total) + k_ * static_cast<double>(vocab_.size());
  const auto base = weight * k_ / denom;
  for (auto& v : row) v += base;
  for (auto [w, c] : counts) row[w] += weight * static_cast<double>(c) / denom;
}

ScoreRow NGramInfiller::score_mask(std::optional<std::string_view> left,
                                   std::optional<std::string_view> right) const {
  const auto V = vocab_.size();
  const auto kV = k_ * static_cast<double>(V);
  std::optional<std::uint32_t> left_ctx, right_ctx;
  // a context with no observations and k = 0 has no defined distribution
  if (left) {
    const auto c = context_id(*left);
    if (static_cast<double>(after_total_[c]) + kV > 0.0) left_ctx = c;
  }
  if (right) {
    const auto c = context_id(*right);
    if (static_cast<double>(before_total_[c]) + kV > 0.0) right_ctx = c;
  }

  double w_uni = weights_.unigram;
  double w_left = left_ctx ? weights_.left : 0.0;
  double w_right = right_ctx ? weights_.right : 0.0;
  const double active = w_uni + w_left + w_right;
  if (active <= 0.0) {
    w_uni = 1.0;
    w_left = w_right = 0.0;
  } else {
    w_uni /= active;
    w_left /= active;
    w_right /= active;
  }

  ScoreRow row(V, 0.0);
  if (w_uni > 0.0) {
    const auto denom = static_cast<double>(unigram_total_) + kV;
    for (std::size_t w = 0; w < V; ++w) row[w] = w_uni * (static_cast<double>(unigram_[w]) + k_) / denom;
  }
  if (w_left > 0.0) add_conditional(row, w_left, after_[*left_ctx], after_total_[*left_ctx]);
  if (w_right > 0.0) add_conditional(row, w_right, before_[*right_ctx], before_total_[*right_ctx]);
  return row;
}

}  // namespace cpnlp
