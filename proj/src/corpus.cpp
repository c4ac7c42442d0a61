#include "cpnlp/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "cpnlp/rng.hpp"

namespace cpnlp {

MalformedTagError::MalformedTagError(const std::string& raw)
    : std::invalid_argument("malformed tag '" + raw + "': empty after normalization") {}

CorpusParseError::CorpusParseError(std::size_t line, std::size_t column, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + what),
      line_(line),
      column_(column) {}

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
           return std::toupper(x) == std::toupper(y);
         });
}

constexpr std::string_view kSuffixes[] = {"-HL", "-TL", "-NC"};
constexpr std::string_view kForeignPrefix = "FW-";

}  // namespace

std::string normalize_tag(std::string_view raw) {
  std::string_view tag = raw;
  for (bool changed = true; changed;) {
    changed = false;
    for (auto suffix : kSuffixes) {
      if (tag.size() >= suffix.size() &&
          iequals(tag.substr(tag.size() - suffix.size()), suffix)) {
        tag.remove_suffix(suffix.size());
        changed = true;
      }
    }
    if (tag.size() >= kForeignPrefix.size() &&
        iequals(tag.substr(0, kForeignPrefix.size()), kForeignPrefix)) {
      tag.remove_prefix(kForeignPrefix.size());
      changed = true;
    }
  }
  if (tag.empty()) throw MalformedTagError(std::string(raw));
  std::string out(tag);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

TaggedCorpus TaggedCorpus::from_sentences(std::vector<TaggedSentence> sentences) {
  TaggedCorpus corpus;
  std::unordered_set<std::string> seen_words;
  for (const auto& sentence : sentences) {
    if (sentence.tokens.empty()) throw std::invalid_argument("empty sentence in corpus");
    for (const auto& token : sentence.tokens) {
      if (token.word.empty() || token.tag.empty())
        throw std::invalid_argument("token with empty word or tag");
      if (corpus.label_ids_.try_emplace(token.tag, static_cast<std::uint32_t>(corpus.labels_.size()))
              .second)
        corpus.labels_.push_back(token.tag);
      if (seen_words.insert(token.word).second) corpus.vocab_.push_back(token.word);
    }
  }
  corpus.sentences_ = std::move(sentences);
  return corpus;
}

std::size_t TaggedCorpus::token_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sentences_) n += s.tokens.size();
  return n;
}

std::uint32_t TaggedCorpus::label_index(std::string_view tag) const {
  auto it = label_ids_.find(std::string(tag));
  if (it == label_ids_.end()) throw std::out_of_range("unknown tag '" + std::string(tag) + "'");
  return it->second;
}

TaggedCorpus parse_tagged_corpus(std::istream& in) {
  std::vector<TaggedSentence> sentences;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    TaggedSentence sentence;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos == line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
      std::string_view token(line.data() + pos, end - pos);
      const auto slash = token.rfind('/');
      if (slash == std::string_view::npos)
        throw CorpusParseError(line_no, pos + 1, "token '" + std::string(token) + "' has no '/'");
      if (slash == 0)
        throw CorpusParseError(line_no, pos + 1, "token '" + std::string(token) + "' has no word");
      std::string tag;
      try {
        tag = normalize_tag(token.substr(slash + 1));
      } catch (const MalformedTagError& e) {
        throw CorpusParseError(line_no, pos + slash + 2, e.what());
      }
      sentence.tokens.push_back({std::string(token.substr(0, slash)), std::move(tag)});
      pos = end;
    }
    if (!sentence.tokens.empty()) sentences.push_back(std::move(sentence));
  }
  return TaggedCorpus::from_sentences(std::move(sentences));
}

TaggedCorpus parse_tagged_corpus(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_tagged_corpus(in);
}

TaggedCorpus load_tagged_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus '" + path + "'");
  return parse_tagged_corpus(in);
}

void serialize_corpus(const TaggedCorpus& corpus, std::ostream& out) {
  for (const auto& sentence : corpus.sentences()) {
    bool first = true;
    for (const auto& token : sentence.tokens) {
      if (!first) out << ' ';
      out << token.word << '/' << token.tag;
      first = false;
    }
    out << '\n';
  }
}

void SplitSpec::validate() const {
  for (double f : {train_frac, cal_frac, test_frac})
    if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("split fraction outside [0,1]");
  if (std::abs(train_frac + cal_frac + test_frac - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must sum to 1");
}

CorpusSplit split_indices(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n < 3) throw DegenerateSplitError("need at least 3 sentences to split, got " + std::to_string(n));
  // the small offset keeps products like 100 * 0.29 from flooring one short
  const auto part = [n](double frac) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-7));
  };
  const auto n_train = part(spec.train_frac);
  const auto n_cal = part(spec.cal_frac);
  if (n_train == 0 || n_cal == 0 || n_train + n_cal >= n)
    throw DegenerateSplitError("split of " + std::to_string(n) + " sentences leaves an empty partition");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  SplitMix64 rng(spec.seed);
  shuffle(std::span<std::size_t>(order), rng);

  CorpusSplit split;
  split.seed = spec.seed;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.cal.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                   order.begin() + static_cast<std::ptrdiff_t>(n_train + n_cal));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_cal), order.end());
  return split;
}

CorpusSplit split_corpus(const TaggedCorpus& corpus, const SplitSpec& spec) {
  return split_indices(corpus.size(), spec);
}

namespace {

void write_index_line(const std::vector<std::size_t>& indices, std::ostream& out) {
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i) out << ' ';
    out << indices[i];
  }
  out << '\n';
}

std::vector<std::size_t> read_index_line(std::istream& in, const char* which) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(std::string("split file missing ") + which + " line");
  std::istringstream ls(line);
  std::vector<std::size_t> out;
  std::size_t v;
  while (ls >> v) out.push_back(v);
  if (!ls.eof()) throw std::runtime_error(std::string("split file: bad index in ") + which + " line");
  return out;
}

}  // namespace

void write_split(const CorpusSplit& split, std::ostream& out) {
  out << split.seed << '\n';
  write_index_line(split.train, out);
  write_index_line(split.cal, out);
  write_index_line(split.test, out);
}

CorpusSplit read_split(std::istream& in) {
  CorpusSplit split;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("split file is empty");
  try {
    std::size_t used = 0;
    split.seed = std::stoull(line, &used);
    if (used != line.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw std::runtime_error("split file: bad seed line '" + line + "'");
  }
  split.train = read_index_line(in, "train");
  split.cal = read_index_line(in, "cal");
  split.test = read_index_line(in, "test");
  return split;
}

MaskedInstance mask_one_word(const TaggedCorpus& corpus, std::size_t sentence_index,
                             std::uint64_t seed) {
  const auto& tokens = corpus.sentences().at(sentence_index).tokens;
  SplitMix64 rng(derive_seed(seed, sentence_index));
  const auto pos = static_cast<std::size_t>(rng.below(tokens.size()));
  return {sentence_index, pos, tokens[pos].word};
}

void write_masked_sentences(const TaggedCorpus& corpus,
                            const std::vector<MaskedInstance>& instances, std::ostream& out) {
  for (const auto& inst : instances) {
    out << inst.mask_position << '\t';
    const auto& tokens = corpus.sentences().at(inst.sentence_index).tokens;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out << ' ';
      out << tokens[i].word;
    }
    out << '\n';
  }
}

}  // namespace cpnlp
