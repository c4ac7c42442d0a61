#include "cpnlp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpnlp/icp.hpp"
#include "cpnlp/icp_kernels.hpp"
#include "cpnlp/metrics.hpp"
#include "cpnlp/rng.hpp"

namespace cpnlp {

void SyntheticSpec::validate() const {
  if (n_classes < 1 || n_cal < 1 || n_test < 1) throw std::invalid_argument("synthetic counts must be >= 1");
  if (!(noise >= 0.0)) throw std::invalid_argument("synthetic noise must be >= 0");
}

namespace {

ScoredExample draw(SplitMix64& rng, const SyntheticSpec& spec, std::uint64_t id) {
  ScoredExample ex;
  ex.example_id = id;
  ex.true_label_index = static_cast<std::uint32_t>(rng.below(spec.n_classes));
  std::vector<double> v(spec.n_classes);
  double total = 0.0;
  if (spec.uniform_scorer) {
    for (auto& x : v) total += (x = rng.uniform());
    if (total <= 0.0) {
      std::fill(v.begin(), v.end(), 1.0);
      total = static_cast<double>(v.size());
    }
  } else {
    for (std::size_t c = 0; c < v.size(); ++c)
      v[c] = (c == ex.true_label_index ? spec.signal : 0.0) + spec.noise * rng.normal();
    double top = v[0];
    for (double x : v) top = std::max(top, x);
    for (auto& x : v) total += (x = std::exp(x - top));
  }
  ex.scores.resize(v.size());
  for (std::size_t c = 0; c < v.size(); ++c) ex.scores[c] = static_cast<float>(v[c] / total);
  return ex;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SplitMix64 rng(derive_seed(spec.seed, 0));
  SyntheticData data;
  std::uint64_t id = 0;
  for (std::size_t i = 0; i < spec.n_train; ++i) draw(rng, spec, id++);
  data.cal.reserve(spec.n_cal);
  for (std::size_t i = 0; i < spec.n_cal; ++i) data.cal.push_back(draw(rng, spec, id++));
  data.test.reserve(spec.n_test);
  for (std::size_t i = 0; i < spec.n_test; ++i) data.test.push_back(draw(rng, spec, id++));
  return data;
}

SyntheticReport run_synthetic_validity(const SyntheticSpec& spec, std::span<const double> epsilons,
                                       std::size_t n_seeds) {
  spec.validate();
  if (n_seeds == 0) throw std::invalid_argument("need at least one seed");
  SyntheticReport report;
  report.per_seed_coverage.assign(n_seeds, std::vector<double>(epsilons.size()));
  std::vector<double> ops(n_seeds);

  for (std::size_t r = 0; r < n_seeds; ++r) {
    auto seed_spec = spec;
    seed_spec.seed = spec.seed + r;
    const auto data = generate_synthetic(seed_spec);
    const auto cal = calibrate(data.cal);
    const auto p = compute_p_matrix(cal, data.test);
    std::vector<std::uint32_t> truths;
    truths.reserve(data.test.size());
    for (const auto& ex : data.test) truths.push_back(ex.true_label_index);
    ops[r] = observed_perceptiveness(p, truths);
    const auto curve = coverage_curve(p, truths, epsilons);
    for (std::size_t e = 0; e < epsilons.size(); ++e) report.per_seed_coverage[r][e] = curve[e].empirical;
  }

  const double pooled_n = static_cast<double>(spec.n_test * n_seeds);
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n_seeds; ++r) mean += report.per_seed_coverage[r][e];
    mean /= static_cast<double>(n_seeds);
    report.rows.push_back({epsilons[e], mean, std::sqrt(mean * (1.0 - mean) / pooled_n), spec.n_test * n_seeds});
  }
  for (double op : ops) report.op += op;
  report.op /= static_cast<double>(n_seeds);
  return report;
}

}  // namespace cpnlp
