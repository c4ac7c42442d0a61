#pragma once

// CPSF: dense binary score matrices plus a `.vocab` text sidecar.
//
// Layout, little-endian throughout:
//   header  "CPSF" | u32 version (=1) | u32 n_labels | u64 n_rows      (20 bytes)
//   row     u64 example_id | u32 true_label_index | n_labels x f32 score
// true_label_index 0xFFFFFFFF means the example has no known label.
// `<path>.vocab` holds one label per line; line number (0-based) is the index.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpnlp {

inline constexpr std::uint32_t kScoreFileVersion = 1;
inline constexpr std::uint32_t kNoLabel = 0xFFFFFFFFu;
inline constexpr std::size_t kScoreFileHeaderBytes = 20;
inline constexpr double kScoreSumTolerance = 1e-3;

class ScoreFileError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kBadVersion, kTruncated, kTrailingBytes, kVocabMismatch, kInvariant };

  ScoreFileError(Kind kind, const std::string& what);

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(ScoreFileError::Kind kind);

class LabelVocabulary {
 public:
  LabelVocabulary() = default;
  /// Throws std::invalid_argument on an empty list, duplicates, or labels
  /// containing a line break.
  explicit LabelVocabulary(std::vector<std::string> labels);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& operator[](std::size_t i) const { return labels_[i]; }

  friend bool operator==(const LabelVocabulary&, const LabelVocabulary&) = default;

 private:
  std::vector<std::string> labels_;
};

struct ScoredExample {
  std::uint64_t example_id = 0;
  std::uint32_t true_label_index = kNoLabel;
  std::vector<float> scores;

  bool has_label() const noexcept { return true_label_index != kNoLabel; }

  friend bool operator==(const ScoredExample&, const ScoredExample&) = default;
};

/// Empty string when `row` is a valid probability row over `n_labels`
/// labels, otherwise a description of the first violation.
std::string check_row(const ScoredExample& row, std::size_t n_labels);

struct ScoreFileContents {
  LabelVocabulary vocab;
  std::vector<ScoredExample> rows;
};

std::filesystem::path vocab_path_for(const std::filesystem::path& path);

/// Writes `path` and `path.vocab` via temp files renamed into place. Output
/// bytes depend only on the inputs.
void write_score_file(const std::filesystem::path& path, const LabelVocabulary& vocab,
                      const std::vector<ScoredExample>& rows);

ScoreFileContents read_score_file(const std::filesystem::path& path);

}  // namespace cpnlp
