#pragma once

// Exchangeable synthetic classification data with a known scorer, used to
// check marginal coverage independently of any trained model.

#include <cstdint>
#include <span>
#include <vector>

#include "cpnlp/scorefile.hpp"

namespace cpnlp {

struct SyntheticSpec {
  std::size_t n_classes = 10;
  double noise = 1.0;   // std-dev of the Gaussian logit noise
  double signal = 2.0;  // logit boost on the true class
  std::size_t n_train = 0;  // drawn first so cal/test sit where a three-way split would put them
  std::size_t n_cal = 1000;
  std::size_t n_test = 5000;
  std::uint64_t seed = 0;
  bool uniform_scorer = false;  // rows ignore the label entirely

  void validate() const;
};

struct SyntheticData {
  std::vector<ScoredExample> cal;
  std::vector<ScoredExample> test;
};

/// Label uniform over classes; row = softmax(signal * onehot(label) + noise * N(0,1)),
/// or normalized uniform draws when `uniform_scorer` is set.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

struct SyntheticCoverage {
  double epsilon = 0.0;
  double coverage = 0.0;   // pooled over seeds
  double std_error = 0.0;  // binomial, over all pooled test rows
  std::size_t n = 0;
};

struct SyntheticReport {
  std::vector<SyntheticCoverage> rows;
  double op = 0.0;
  std::vector<std::vector<double>> per_seed_coverage;  // [seed][epsilon]
};

/// Runs ICP for seeds spec.seed .. spec.seed + n_seeds - 1.
SyntheticReport run_synthetic_validity(const SyntheticSpec& spec, std::span<const double> epsilons,
                                       std::size_t n_seeds = 5);

}  // namespace cpnlp
