#include "cpnlp/icp_kernels.hpp"

#include <stdexcept>

namespace cpnlp {

namespace {

PValueMatrix allocate(const CalibrationModel& cal, std::span<const ScoredExample> rows) {
  PValueMatrix m;
  m.n_rows = rows.size();
  m.n_labels = rows.empty() ? 0 : rows.front().scores.size();
  for (const auto& r : rows)
    if (r.scores.size() != m.n_labels) throw std::invalid_argument("score rows differ in length");
  m.denominator = cal.size() + 1;
  m.numerators.resize(m.n_rows * m.n_labels);
  return m;
}

inline void fill_row(const CalibrationModel& cal, const ScoredExample& row, std::uint32_t* out) {
  const std::size_t n = row.scores.size();
  for (std::size_t s = 0; s < n; ++s)
    out[s] = static_cast<std::uint32_t>(cal.count_at_least(1.0 - static_cast<double>(row.scores[s])) + 1);
}

}  // namespace

namespace reference {

std::uint64_t naive_count_at_least(std::span<const double> alphas, double alpha_star) {
  std::uint64_t count = 0;
  for (double a : alphas)
    if (a >= alpha_star) ++count;
  return count;
}

PValueMatrix p_matrix(const CalibrationModel& cal, std::span<const ScoredExample> rows) {
  auto m = allocate(cal, rows);
  for (std::size_t i = 0; i < m.n_rows; ++i) fill_row(cal, rows[i], m.numerators.data() + i * m.n_labels);
  return m;
}

}  // namespace reference

namespace parallel {

PValueMatrix p_matrix(const CalibrationModel& cal, std::span<const ScoredExample> rows) {
  auto m = allocate(cal, rows);
  const auto n_rows = static_cast<std::int64_t>(m.n_rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n_rows; ++i)
    fill_row(cal, rows[static_cast<std::size_t>(i)], m.numerators.data() + static_cast<std::size_t>(i) * m.n_labels);
  return m;
}

}  // namespace parallel

}  // namespace cpnlp
