#include "cpnlp/icp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cpnlp {

MissingLabelError::MissingLabelError(std::size_t row)
    : std::invalid_argument("calibration row " + std::to_string(row) + " has no true label"), row_(row) {}

namespace {

template <typename T>
double nonconformity_impl(std::span<const T> row, std::size_t label) {
  if (label >= row.size())
    throw std::out_of_range("label " + std::to_string(label) + " out of range for row of " +
                            std::to_string(row.size()));
  return 1.0 - static_cast<double>(row[label]);
}

template <typename T>
PValueVector p_vector_impl(const CalibrationModel& cal, std::span<const T> row) {
  PValueVector pv;
  pv.denominator = cal.size() + 1;
  pv.numerators.resize(row.size());
  for (std::size_t s = 0; s < row.size(); ++s)
    pv.numerators[s] = static_cast<std::uint32_t>(cal.count_at_least(1.0 - static_cast<double>(row[s])) + 1);
  return pv;
}

}  // namespace

double nonconformity(std::span<const float> row, std::size_t label) { return nonconformity_impl(row, label); }
double nonconformity(std::span<const double> row, std::size_t label) { return nonconformity_impl(row, label); }

CalibrationModel CalibrationModel::from_scores(std::vector<double> alphas) {
  for (double a : alphas)
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("nonconformity score outside [0,1]");
  if (alphas.size() >= std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("calibration set too large");
  std::sort(alphas.begin(), alphas.end());
  CalibrationModel model;
  model.alphas_ = std::move(alphas);
  return model;
}

std::uint64_t CalibrationModel::count_at_least(double alpha_star) const noexcept {
  const auto first = std::lower_bound(alphas_.begin(), alphas_.end(), alpha_star);
  return static_cast<std::uint64_t>(alphas_.end() - first);
}

CalibrationModel calibrate(std::span<const ScoredExample> rows) {
  std::vector<double> alphas;
  alphas.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].has_label()) throw MissingLabelError(r);
    alphas.push_back(nonconformity(std::span<const float>(rows[r].scores), rows[r].true_label_index));
  }
  return CalibrationModel::from_scores(std::move(alphas));
}

PValueVector p_vector(const CalibrationModel& cal, std::span<const float> row) { return p_vector_impl(cal, row); }
PValueVector p_vector(const CalibrationModel& cal, std::span<const double> row) { return p_vector_impl(cal, row); }

bool PredictionSet::contains(std::uint32_t label) const {
  return std::binary_search(members.begin(), members.end(), label);
}

PredictionSet prediction_set(const PValueVector& pv, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in [0,1)");
  PredictionSet set;
  set.epsilon = epsilon;
  for (std::size_t s = 0; s < pv.size(); ++s)
    if (exceeds(pv.numerators[s], pv.denominator, epsilon)) set.members.push_back(static_cast<std::uint32_t>(s));
  return set;
}

double centroid_distance(std::span<const LabeledPoint> rest, const LabeledPoint& z) {
  std::vector<double> centroid(z.x.size(), 0.0);
  std::size_t n = 0;
  for (const auto& p : rest) {
    if (p.y != z.y) continue;
    for (std::size_t d = 0; d < centroid.size(); ++d) centroid[d] += p.x[d];
    ++n;
  }
  if (n == 0) return std::numeric_limits<double>::infinity();
  double sq = 0.0;
  for (std::size_t d = 0; d < centroid.size(); ++d) {
    const double diff = z.x[d] - centroid[d] / static_cast<double>(n);
    sq += diff * diff;
  }
  return std::sqrt(sq);
}

TransductiveResult tcp_prediction_set(std::span<const LabeledPoint> bag, const std::vector<double>& test_x,
                                      std::span<const int> candidates, const NonconformityMeasure& measure,
                                      double epsilon) {
  if (bag.empty()) throw std::invalid_argument("transductive bag must be non-empty");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in [0,1)");

  TransductiveResult result;
  result.set.epsilon = epsilon;
  const std::size_t n_plus_1 = bag.size() + 1;
  std::vector<LabeledPoint> extended(bag.begin(), bag.end());
  extended.push_back({test_x, 0});
  std::vector<LabeledPoint> rest;
  rest.reserve(bag.size());
  std::vector<double> alphas(n_plus_1);

  for (std::size_t c = 0; c < candidates.size(); ++c) {
    extended.back().y = candidates[c];
    for (std::size_t i = 0; i < n_plus_1; ++i) {
      rest.clear();
      for (std::size_t j = 0; j < n_plus_1; ++j)
        if (j != i) rest.push_back(extended[j]);
      alphas[i] = measure(rest, extended[i]);
    }
    const double test_alpha = alphas.back();
    const auto count = static_cast<std::uint64_t>(
        std::count_if(alphas.begin(), alphas.end(), [&](double a) { return a >= test_alpha; }));
    const PValue p{count, n_plus_1};
    result.p_values.push_back(p);
    if (exceeds(p.numerator, p.denominator, epsilon)) result.set.members.push_back(static_cast<std::uint32_t>(c));
  }
  return result;
}

}  // namespace cpnlp
