#pragma once

// Batched p-value evaluation. `serial` is the reference path used by tests;
// `parallel` splits rows across OpenMP threads and must agree with it exactly.

#include <cstdint>
#include <span>
#include <vector>

#include "cpnlp/icp.hpp"
#include "cpnlp/scorefile.hpp"

namespace cpnlp {

/// Row-major numerators over a shared denominator (n_cal + 1).
struct PValueMatrix {
  std::size_t n_rows = 0;
  std::size_t n_labels = 0;
  std::uint64_t denominator = 1;
  std::vector<std::uint32_t> numerators;

  std::span<const std::uint32_t> row(std::size_t i) const {
    return {numerators.data() + i * n_labels, n_labels};
  }
  PValue at(std::size_t i, std::size_t s) const { return {numerators[i * n_labels + s], denominator}; }

  friend bool operator==(const PValueMatrix&, const PValueMatrix&) = default;
};

namespace reference {

/// O(n) count of calibration scores >= alpha_star over an unsorted multiset.
std::uint64_t naive_count_at_least(std::span<const double> alphas, double alpha_star);

PValueMatrix p_matrix(const CalibrationModel& cal, std::span<const ScoredExample> rows);

}  // namespace reference

namespace parallel {

PValueMatrix p_matrix(const CalibrationModel& cal, std::span<const ScoredExample> rows);

}  // namespace parallel

/// Default entry point (parallel).
inline PValueMatrix compute_p_matrix(const CalibrationModel& cal, std::span<const ScoredExample> rows) {
  return parallel::p_matrix(cal, rows);
}

}  // namespace cpnlp
