#pragma once

// Evaluation criteria for conformal prediction sets and forced predictions.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cpnlp/icp.hpp"
#include "cpnlp/icp_kernels.hpp"

namespace cpnlp {

/// Argmax with the lowest index winning ties.
std::uint32_t forced_prediction(std::span<const float> row);
std::uint32_t forced_prediction(std::span<const double> row);

double classification_accuracy(std::span<const std::uint32_t> predictions, std::span<const std::uint32_t> truths);

struct Credibility {
  double inverted = 0.0;         // mean of 1 - max_s p_s
  double conventional = 0.0;  // mean of max_s p_s
};

Credibility credibility(const PValueMatrix& p);

/// Mean true-label p-value.
double observed_perceptiveness(const PValueMatrix& p, std::span<const std::uint32_t> truths);

/// Mean over rows of the summed p-values of all incorrect labels.
double observed_fuzziness(const PValueMatrix& p, std::span<const std::uint32_t> truths);

struct EpsilonStats {
  double epsilon = 0.0;
  double coverage = 0.0;
  double pis = 0.0;
  std::optional<double> acds;  // nullopt when no set has exactly one label
  double n_eps = 0.0;
};

/// From materialized sets; all sets must share `epsilon`.
EpsilonStats per_epsilon_stats(std::span<const PredictionSet> sets, std::span<const std::uint32_t> truths,
                               double epsilon);

/// Same quantities computed straight from the p-matrix (no set materialization).
EpsilonStats per_epsilon_stats(const PValueMatrix& p, std::span<const std::uint32_t> truths, double epsilon);

struct CurvePoint {
  double nominal = 0.0;    // 1 - epsilon
  double empirical = 0.0;
};

/// Empirical coverage at each epsilon, from p_{y_i} > epsilon.
std::vector<CurvePoint> coverage_curve(const PValueMatrix& p, std::span<const std::uint32_t> truths,
                                       std::span<const double> epsilon_grid);

struct MetricsReport {
  double ca = 0.0;
  Credibility cred;
  double op = 0.0;
  double of = 0.0;
  std::vector<EpsilonStats> per_epsilon;
};

MetricsReport evaluate_metrics(const PValueMatrix& p, std::span<const std::uint32_t> forced,
                               std::span<const std::uint32_t> truths, std::span<const double> epsilons);

}  // namespace cpnlp
