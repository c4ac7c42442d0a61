#pragma once

// Inductive conformal prediction over probability rows, plus the literal
// transductive procedure for small instances.
//
// Nonconformity of label s for a row is 1 - row[s]. With calibration scores
// a_1..a_n, the p-value of a test score a* is
//     p = (#{ j : a_j >= a* } + 1) / (n + 1)
// and the prediction set at significance eps is { s : p_s > eps }.
// p-values are kept as integer pairs so equality checks are exact.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cpnlp/scorefile.hpp"

namespace cpnlp {

class MissingLabelError : public std::invalid_argument {
 public:
  explicit MissingLabelError(std::size_t row);

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// 1 - row[label]; throws std::out_of_range for a bad index.
double nonconformity(std::span<const float> row, std::size_t label);
double nonconformity(std::span<const double> row, std::size_t label);

/// Rational p-value: numerator / denominator.
struct PValue {
  std::uint64_t numerator = 1;
  std::uint64_t denominator = 1;

  double value() const noexcept { return static_cast<double>(numerator) / static_cast<double>(denominator); }

  friend bool operator==(const PValue&, const PValue&) = default;
};

/// `p > epsilon`, evaluated on the reported double value.
inline bool exceeds(std::uint64_t numerator, std::uint64_t denominator, double epsilon) noexcept {
  return static_cast<double>(numerator) / static_cast<double>(denominator) > epsilon;
}

class CalibrationModel {
 public:
  CalibrationModel() = default;

  /// Sorts `alphas`; each must lie in [0,1].
  static CalibrationModel from_scores(std::vector<double> alphas);

  const std::vector<double>& alphas() const noexcept { return alphas_; }
  std::size_t size() const noexcept { return alphas_.size(); }

  /// #{ j : a_j >= alpha_star } by binary search.
  std::uint64_t count_at_least(double alpha_star) const noexcept;

  PValue p_value(double alpha_star) const noexcept {
    return {count_at_least(alpha_star) + 1, alphas_.size() + 1};
  }

  friend bool operator==(const CalibrationModel&, const CalibrationModel&) = default;

 private:
  std::vector<double> alphas_;
};

/// Nonconformity of the true label for each row. Rows without a label are an
/// error naming the row.
CalibrationModel calibrate(std::span<const ScoredExample> rows);

struct PValueVector {
  std::uint64_t denominator = 1;
  std::vector<std::uint32_t> numerators;

  std::size_t size() const noexcept { return numerators.size(); }
  PValue operator[](std::size_t i) const noexcept { return {numerators[i], denominator}; }
};

PValueVector p_vector(const CalibrationModel& cal, std::span<const float> row);
PValueVector p_vector(const CalibrationModel& cal, std::span<const double> row);

struct PredictionSet {
  double epsilon = 0.0;
  std::vector<std::uint32_t> members;  // ascending label indices

  bool contains(std::uint32_t label) const;
  std::size_t size() const noexcept { return members.size(); }
};

/// { s : p_s > epsilon }; may be empty. epsilon must lie in [0,1).
PredictionSet prediction_set(const PValueVector& pv, double epsilon);

// Transductive conformal prediction (refit per candidate; toy scale only).

struct LabeledPoint {
  std::vector<double> x;
  int y = 0;
};

/// A(bag without z, z). Must be a pure function of its arguments.
using NonconformityMeasure =
    std::function<double(std::span<const LabeledPoint> rest, const LabeledPoint& z)>;

/// Euclidean distance from z.x to the mean of the points in `rest` sharing
/// z's label; +infinity when there are none.
double centroid_distance(std::span<const LabeledPoint> rest, const LabeledPoint& z);

struct TransductiveResult {
  PredictionSet set;            // members index into the candidate list
  std::vector<PValue> p_values; // one per candidate
};

/// For each candidate y, extends the bag with (test_x, y), scores every
/// element against the others and keeps y when
///     #{ i : a_i >= a_{n+1} } / (n + 1) > epsilon.
TransductiveResult tcp_prediction_set(std::span<const LabeledPoint> bag, const std::vector<double>& test_x,
                                      std::span<const int> candidates, const NonconformityMeasure& measure,
                                      double epsilon);

}  // namespace cpnlp
