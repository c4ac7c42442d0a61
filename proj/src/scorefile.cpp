#include "cpnlp/scorefile.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_set>

namespace cpnlp {

ScoreFileError::ScoreFileError(Kind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

const char* to_string(ScoreFileError::Kind kind) {
  switch (kind) {
    case ScoreFileError::Kind::kIo: return "io error";
    case ScoreFileError::Kind::kBadMagic: return "bad magic";
    case ScoreFileError::Kind::kBadVersion: return "bad version";
    case ScoreFileError::Kind::kTruncated: return "truncated file";
    case ScoreFileError::Kind::kTrailingBytes: return "trailing bytes";
    case ScoreFileError::Kind::kVocabMismatch: return "vocabulary mismatch";
    case ScoreFileError::Kind::kInvariant: return "invariant violation";
  }
  return "unknown";
}

LabelVocabulary::LabelVocabulary(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw std::invalid_argument("label vocabulary is empty");
  std::unordered_set<std::string_view> seen;
  for (const auto& label : labels_) {
    if (label.find_first_of("\r\n") != std::string::npos)
      throw std::invalid_argument("label contains a line break");
    if (!seen.insert(label).second) throw std::invalid_argument("duplicate label '" + label + "'");
  }
}

std::string check_row(const ScoredExample& row, std::size_t n_labels) {
  if (row.scores.size() != n_labels)
    return "row has " + std::to_string(row.scores.size()) + " scores, vocabulary has " +
           std::to_string(n_labels);
  if (row.true_label_index != kNoLabel && row.true_label_index >= n_labels)
    return "true label index " + std::to_string(row.true_label_index) + " out of range";
  double sum = 0.0;
  for (std::size_t i = 0; i < row.scores.size(); ++i) {
    const float s = row.scores[i];
    if (!(s >= 0.0f && s <= 1.0f)) return "score " + std::to_string(s) + " at label " + std::to_string(i) + " outside [0,1]";
    sum += s;
  }
  if (std::abs(sum - 1.0) > kScoreSumTolerance) return "scores sum to " + std::to_string(sum);
  return {};
}

std::filesystem::path vocab_path_for(const std::filesystem::path& path) {
  auto p = path;
  p += ".vocab";
  return p;
}

namespace {

template <typename T>
void put_le(std::string& buf, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

void write_atomically(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ScoreFileError(ScoreFileError::Kind::kIo, "cannot open '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ScoreFileError(ScoreFileError::Kind::kIo, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ScoreFileError(ScoreFileError::Kind::kIo, "rename to '" + path.string() + "': " + ec.message());
}

std::size_t row_bytes(std::size_t n_labels) { return 8 + 4 + 4 * n_labels; }

LabelVocabulary read_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScoreFileError(ScoreFileError::Kind::kIo, "cannot open '" + path.string() + "'");
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) labels.push_back(line);
  try {
    return LabelVocabulary(std::move(labels));
  } catch (const std::invalid_argument& e) {
    throw ScoreFileError(ScoreFileError::Kind::kVocabMismatch, path.string() + ": " + e.what());
  }
}

}  // namespace

void write_score_file(const std::filesystem::path& path, const LabelVocabulary& vocab,
                      const std::vector<ScoredExample>& rows) {
  const std::size_t n_labels = vocab.size();
  if (n_labels == 0) throw std::invalid_argument("cannot write a score file with an empty vocabulary");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (auto err = check_row(rows[r], n_labels); !err.empty())
      throw ScoreFileError(ScoreFileError::Kind::kInvariant, "row " + std::to_string(r) + ": " + err);
  }

  std::string bytes;
  bytes.reserve(kScoreFileHeaderBytes + rows.size() * row_bytes(n_labels));
  bytes.append("CPSF", 4);
  put_le<std::uint32_t>(bytes, kScoreFileVersion);
  put_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(n_labels));
  put_le<std::uint64_t>(bytes, rows.size());
  for (const auto& row : rows) {
    put_le<std::uint64_t>(bytes, row.example_id);
    put_le<std::uint32_t>(bytes, row.true_label_index);
    for (float s : row.scores) put_le<std::uint32_t>(bytes, std::bit_cast<std::uint32_t>(s));
  }

  std::string vocab_text;
  for (const auto& label : vocab.labels()) {
    vocab_text += label;
    vocab_text += '\n';
  }
  write_atomically(vocab_path_for(path), vocab_text);
  write_atomically(path, bytes);
}

ScoreFileContents read_score_file(const std::filesystem::path& path) {
  using Kind = ScoreFileError::Kind;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScoreFileError(Kind::kIo, "cannot open '" + path.string() + "'");
  std::error_code ec;
  const auto file_size = std::filesystem::file_size(path, ec);
  if (ec) throw ScoreFileError(Kind::kIo, path.string() + ": " + ec.message());

  unsigned char header[kScoreFileHeaderBytes];
  if (file_size < kScoreFileHeaderBytes ||
      !in.read(reinterpret_cast<char*>(header), kScoreFileHeaderBytes))
    throw ScoreFileError(Kind::kTruncated, path.string() + ": header is shorter than 20 bytes");
  if (std::memcmp(header, "CPSF", 4) != 0) throw ScoreFileError(Kind::kBadMagic, path.string());
  const auto version = get_le<std::uint32_t>(header + 4);
  if (version != kScoreFileVersion)
    throw ScoreFileError(Kind::kBadVersion, path.string() + ": version " + std::to_string(version));
  const auto n_labels = get_le<std::uint32_t>(header + 8);
  const auto n_rows = get_le<std::uint64_t>(header + 12);
  if (n_labels == 0) throw ScoreFileError(Kind::kInvariant, path.string() + ": zero labels");

  // bound the claimed size by the actual file length before allocating
  const std::uint64_t per_row = row_bytes(n_labels);
  const std::uint64_t body = file_size - kScoreFileHeaderBytes;
  if (n_rows > body / per_row)
    throw ScoreFileError(Kind::kTruncated, path.string() + ": header claims " + std::to_string(n_rows) +
                                               " rows, file holds " + std::to_string(body / per_row));
  if (body != n_rows * per_row)
    throw ScoreFileError(Kind::kTrailingBytes, path.string() + ": " + std::to_string(body - n_rows * per_row) +
                                                   " bytes after the last row");

  ScoreFileContents contents;
  contents.vocab = read_vocab(vocab_path_for(path));
  if (contents.vocab.size() != n_labels)
    throw ScoreFileError(Kind::kVocabMismatch, path.string() + ": header has " + std::to_string(n_labels) +
                                                   " labels, sidecar has " + std::to_string(contents.vocab.size()));

  contents.rows.resize(n_rows);
  std::vector<unsigned char> buf(per_row);
  for (std::uint64_t r = 0; r < n_rows; ++r) {
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(per_row)))
      throw ScoreFileError(Kind::kTruncated, path.string() + ": row " + std::to_string(r));
    auto& row = contents.rows[r];
    row.example_id = get_le<std::uint64_t>(buf.data());
    row.true_label_index = get_le<std::uint32_t>(buf.data() + 8);
    row.scores.resize(n_labels);
    for (std::uint32_t i = 0; i < n_labels; ++i)
      row.scores[i] = std::bit_cast<float>(get_le<std::uint32_t>(buf.data() + 12 + 4 * i));
    if (auto err = check_row(row, n_labels); !err.empty())
      throw ScoreFileError(Kind::kInvariant, path.string() + ": row " + std::to_string(r) + ": " + err);
  }
  return contents;
}

}  // namespace cpnlp
