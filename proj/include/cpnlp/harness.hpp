#pragma once

// End-to-end orchestration: scoring corpora into CPSF rows, running the
// repeated split/calibrate/evaluate protocol, emitting CSVs, and filling
// `<UNK>` gaps in transcripts.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpnlp/corpus.hpp"
#include "cpnlp/icp.hpp"
#include "cpnlp/icp_kernels.hpp"
#include "cpnlp/metrics.hpp"
#include "cpnlp/models.hpp"
#include "cpnlp/scorefile.hpp"

namespace cpnlp {

enum class Task { kPos, kMlm };
enum class ScorerKind { kLexical, kNGram, kExternal };

Task parse_task(std::string_view s);
ScorerKind parse_scorer(std::string_view s);
const char* to_string(Task t);
const char* to_string(ScorerKind s);

/// Comma- or whitespace-separated list of numbers.
std::vector<double> parse_number_list(std::string_view s);

std::vector<double> default_epsilons(Task task);
/// eps = 1/(points+1), ..., points/(points+1).
std::vector<double> epsilon_grid(std::size_t points);

/// Flat `key = value` lines; blank lines and `#` comments are ignored.
/// Values may be wrapped in double quotes.
std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& in);

struct ExperimentConfig {
  std::string corpus_path;
  Task task = Task::kPos;
  ScorerKind scorer = ScorerKind::kLexical;
  std::string cal_scores_path;   // external scorer only
  std::string test_scores_path;  // external scorer only
  SplitSpec split{};
  std::size_t repetitions = 5;
  std::vector<double> epsilons;  // empty -> default_epsilons(task)
  std::size_t grid_points = 99;
  std::filesystem::path output_dir = "results";
  std::size_t cal_sentence_cap = 1300;
  std::size_t test_sentence_cap = 1000;
  double k = 0.1;
  bool case_fold = true;
  InfillerWeights weights{};
  std::size_t vocab_cap = 10000;

  void validate() const;
};

/// Scored examples for one evaluation stage with bookkeeping for rows that
/// cannot be scored against a known label.
struct ScoredSet {
  LabelVocabulary vocab;
  std::vector<ScoredExample> rows;
};

/// One row per token of the given sentences; example_id = (sentence << 32) | position.
ScoredSet score_pos(const TaggedCorpus& corpus, const LexicalTagger& tagger,
                    std::span<const std::size_t> sentences);

/// Masks one word per sentence (first `cap` sentences) with `mask_seed`.
std::vector<MaskedInstance> mask_sentences(const TaggedCorpus& corpus, std::span<const std::size_t> sentences,
                                           std::size_t cap, std::uint64_t mask_seed);

/// One row per instance; example_id = sentence index; true label is the
/// vocabulary index of the masked word, or kNoLabel when out of vocabulary.
ScoredSet score_mlm(const TaggedCorpus& corpus, const NGramInfiller& infiller,
                    std::span<const MaskedInstance> instances);

/// Calibration file: count on the first line, then one score per line in
/// shortest round-trip form.
void write_calibration(const CalibrationModel& cal, std::ostream& out);
CalibrationModel read_calibration(std::istream& in);

/// `example_id<TAB>epsilon<TAB>label,label,...` per row and epsilon.
void write_prediction_sets(const PValueMatrix& p, std::span<const ScoredExample> rows,
                           const LabelVocabulary& vocab, std::span<const double> epsilons, std::ostream& out);

/// Equal-width bins over [lo, hi); values equal to hi land in the last bin,
/// values outside are dropped.
std::vector<std::uint64_t> histogram(std::span<const double> values, double lo, double hi, std::size_t bins);

inline constexpr std::size_t kHistogramBins = 50;
inline constexpr double kZoomUpper = 0.0002;

/// Result of scoring one test set against a calibration model.
struct Evaluation {
  MetricsReport metrics;
  std::vector<CurvePoint> curve;
  std::size_t n_cal = 0;
  std::size_t n_test = 0;
  std::size_t n_unlabeled = 0;  // test + cal rows dropped for lacking a label
  std::vector<double> cal_scores;
  // set_sizes[e][size] = count at epsilons[e]
  std::vector<std::vector<std::uint64_t>> set_sizes;
};

/// Calibrates on labelled `cal` rows and evaluates labelled `test` rows.
Evaluation evaluate_rows(std::span<const ScoredExample> cal, std::span<const ScoredExample> test,
                         std::span<const double> epsilons, std::span<const double> grid);

struct ExperimentSummary {
  std::size_t succeeded = 0;
  std::vector<std::string> failures;  // "repetition r: message"
};

/// Writes metrics.csv, coverage_curve.csv, score_hist.csv,
/// score_hist_zoom.csv and set_size_hist.csv into config.output_dir.
ExperimentSummary run_experiment(const ExperimentConfig& config);

struct GapPrediction {
  std::size_t position = 0;            // token index in the transcript
  std::vector<std::string> labels;     // ordered by decreasing p-value, then vocabulary order
  PredictionSet set;
};

inline constexpr std::string_view kGapToken = "<UNK>";

/// Each `<UNK>` is predicted on its own, with the other gaps left verbatim
/// in its context.
std::vector<GapPrediction> fill_transcript(std::string_view text, const NGramInfiller& infiller,
                                           const CalibrationModel& cal, double epsilon);

}  // namespace cpnlp
