#include "cpnlp/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace cpnlp {

namespace {

template <typename T>
std::uint32_t argmax(std::span<const T> row) {
  if (row.empty()) throw std::invalid_argument("forced prediction of an empty row");
  std::size_t best = 0;
  for (std::size_t s = 1; s < row.size(); ++s)
    if (row[s] > row[best]) best = s;
  return static_cast<std::uint32_t>(best);
}

void check_rows(const PValueMatrix& p, std::span<const std::uint32_t> truths) {
  if (p.n_rows == 0) throw std::invalid_argument("metrics of an empty test set");
  if (truths.size() != p.n_rows) throw std::invalid_argument("p-matrix and truth lengths differ");
  for (auto t : truths)
    if (t >= p.n_labels) throw std::out_of_range("truth label out of range");
}

std::int64_t signed_rows(const PValueMatrix& p) { return static_cast<std::int64_t>(p.n_rows); }

}  // namespace

std::uint32_t forced_prediction(std::span<const float> row) { return argmax(row); }
std::uint32_t forced_prediction(std::span<const double> row) { return argmax(row); }

double classification_accuracy(std::span<const std::uint32_t> predictions, std::span<const std::uint32_t> truths) {
  if (predictions.size() != truths.size()) throw std::invalid_argument("prediction and truth lengths differ");
  if (truths.empty()) throw std::invalid_argument("accuracy of an empty test set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) hits += predictions[i] == truths[i];
  return static_cast<double>(hits) / static_cast<double>(truths.size());
}

// Sums below accumulate integer numerators, so the result does not depend
// on thread count or reduction order.

Credibility credibility(const PValueMatrix& p) {
  if (p.n_rows == 0 || p.n_labels == 0) throw std::invalid_argument("credibility of an empty p-matrix");
  std::uint64_t max_sum = 0;
  const auto n = signed_rows(p);
#pragma omp parallel for reduction(+ : max_sum) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto row = p.row(static_cast<std::size_t>(i));
    max_sum += *std::max_element(row.begin(), row.end());
  }
  const double total = static_cast<double>(p.denominator) * static_cast<double>(p.n_rows);
  const double conventional = static_cast<double>(max_sum) / total;
  return {1.0 - conventional, conventional};
}

double observed_perceptiveness(const PValueMatrix& p, std::span<const std::uint32_t> truths) {
  check_rows(p, truths);
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < p.n_rows; ++i) sum += p.row(i)[truths[i]];
  return static_cast<double>(sum) / (static_cast<double>(p.denominator) * static_cast<double>(p.n_rows));
}

double observed_fuzziness(const PValueMatrix& p, std::span<const std::uint32_t> truths) {
  check_rows(p, truths);
  std::uint64_t sum = 0;
  const auto n = signed_rows(p);
#pragma omp parallel for reduction(+ : sum) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto row = p.row(static_cast<std::size_t>(i));
    std::uint64_t row_sum = 0;
    for (auto v : row) row_sum += v;
    sum += row_sum - row[truths[static_cast<std::size_t>(i)]];
  }
  return static_cast<double>(sum) / (static_cast<double>(p.denominator) * static_cast<double>(p.n_rows));
}

namespace {

EpsilonStats finish(double epsilon, std::size_t n, std::uint64_t covered, std::uint64_t indecisive,
                    std::uint64_t singletons, std::uint64_t singleton_hits, std::uint64_t total_size) {
  EpsilonStats st;
  const double dn = static_cast<double>(n);
  st.epsilon = epsilon;
  st.coverage = static_cast<double>(covered) / dn;
  st.pis = static_cast<double>(indecisive) / dn;
  if (singletons > 0) st.acds = static_cast<double>(singleton_hits) / static_cast<double>(singletons);
  st.n_eps = static_cast<double>(total_size) / dn;
  return st;
}

}  // namespace

EpsilonStats per_epsilon_stats(std::span<const PredictionSet> sets, std::span<const std::uint32_t> truths,
                               double epsilon) {
  if (sets.size() != truths.size()) throw std::invalid_argument("set and truth lengths differ");
  if (sets.empty()) throw std::invalid_argument("statistics of an empty test set");
  std::uint64_t covered = 0, indecisive = 0, singletons = 0, singleton_hits = 0, total_size = 0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].epsilon != epsilon) throw std::invalid_argument("prediction sets at mixed significance levels");
    const bool hit = sets[i].contains(truths[i]);
    covered += hit;
    indecisive += sets[i].size() > 1;
    if (sets[i].size() == 1) {
      ++singletons;
      singleton_hits += hit;
    }
    total_size += sets[i].size();
  }
  return finish(epsilon, sets.size(), covered, indecisive, singletons, singleton_hits, total_size);
}

EpsilonStats per_epsilon_stats(const PValueMatrix& p, std::span<const std::uint32_t> truths, double epsilon) {
  check_rows(p, truths);
  std::uint64_t covered = 0, indecisive = 0, singletons = 0, singleton_hits = 0, total_size = 0;
  const auto n = signed_rows(p);
#pragma omp parallel for reduction(+ : covered, indecisive, singletons, singleton_hits, total_size) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto row = p.row(static_cast<std::size_t>(i));
    std::uint64_t size = 0;
    for (auto v : row) size += exceeds(v, p.denominator, epsilon);
    const bool hit = exceeds(row[truths[static_cast<std::size_t>(i)]], p.denominator, epsilon);
    covered += hit;
    indecisive += size > 1;
    if (size == 1) {
      ++singletons;
      singleton_hits += hit;
    }
    total_size += size;
  }
  return finish(epsilon, p.n_rows, covered, indecisive, singletons, singleton_hits, total_size);
}

std::vector<CurvePoint> coverage_curve(const PValueMatrix& p, std::span<const std::uint32_t> truths,
                                       std::span<const double> epsilon_grid) {
  check_rows(p, truths);
  std::vector<std::uint32_t> true_p(p.n_rows);
  for (std::size_t i = 0; i < p.n_rows; ++i) true_p[i] = p.row(i)[truths[i]];
  std::vector<CurvePoint> curve;
  curve.reserve(epsilon_grid.size());
  for (double eps : epsilon_grid) {
    if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("epsilon grid value outside [0,1)");
    std::size_t covered = 0;
    for (auto v : true_p) covered += exceeds(v, p.denominator, eps);
    curve.push_back({1.0 - eps, static_cast<double>(covered) / static_cast<double>(p.n_rows)});
  }
  return curve;
}

MetricsReport evaluate_metrics(const PValueMatrix& p, std::span<const std::uint32_t> forced,
                               std::span<const std::uint32_t> truths, std::span<const double> epsilons) {
  MetricsReport report;
  report.ca = classification_accuracy(forced, truths);
  report.cred = credibility(p);
  report.op = observed_perceptiveness(p, truths);
  report.of = observed_fuzziness(p, truths);
  for (double eps : epsilons) report.per_epsilon.push_back(per_epsilon_stats(p, truths, eps));
  return report;
}

}  // namespace cpnlp
