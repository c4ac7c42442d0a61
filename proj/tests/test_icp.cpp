#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cpnlp/icp.hpp"
#include "cpnlp/icp_kernels.hpp"
#include "cpnlp/rng.hpp"

using namespace cpnlp;

namespace {

std::vector<double> drow(std::initializer_list<double> v) { return v; }

}  // namespace

TEST_CASE("nonconformity is one minus the label score") {
  const auto row = drow({0.9, 0.07, 0.03});
  CHECK(nonconformity(std::span<const double>(row), 0) == doctest::Approx(0.1));
  const auto certain = drow({1.0, 0.0});
  CHECK(nonconformity(std::span<const double>(certain), 0) == 0.0);
  CHECK(nonconformity(std::span<const double>(certain), 1) == 1.0);
  CHECK_THROWS_AS(nonconformity(std::span<const double>(certain), 2), std::out_of_range);
}

TEST_CASE("calibrate sorts true-label scores") {
  const std::vector<ScoredExample> rows = {
      {0, 0, {0.9f, 0.1f}}, {1, 1, {0.4f, 0.6f}}, {2, 0, {0.3f, 0.7f}}};
  const auto cal = calibrate(rows);
  REQUIRE(cal.size() == 3);
  CHECK(cal.alphas()[0] == doctest::Approx(0.1));
  CHECK(cal.alphas()[1] == doctest::Approx(0.4));
  CHECK(cal.alphas()[2] == doctest::Approx(0.7));

  CHECK(calibrate(std::vector<ScoredExample>{{0, 0, {0.5f, 0.5f}}}).alphas() == std::vector<double>{0.5});
  CHECK(calibrate(std::vector<ScoredExample>{{0, 0, {0.5f, 0.5f}}, {1, 1, {0.5f, 0.5f}}}).alphas() ==
        std::vector<double>{0.5, 0.5});

  try {
    calibrate(std::vector<ScoredExample>{{0, 0, {1.0f}}, {1, kNoLabel, {1.0f}}});
    FAIL("expected MissingLabelError");
  } catch (const MissingLabelError& e) {
    CHECK(e.row() == 1);
  }
}

TEST_CASE("p_value examples") {
  const auto cal = CalibrationModel::from_scores({0.7, 0.1, 0.4});
  CHECK(cal.p_value(0.4) == PValue{3, 4});
  CHECK(cal.p_value(0.4).value() == 0.75);
  CHECK(cal.p_value(0.0) == PValue{4, 4});
  CHECK(CalibrationModel{}.p_value(0.3) == PValue{1, 1});
  CHECK(CalibrationModel::from_scores({0.5, 0.5}).p_value(0.9) == PValue{1, 3});
  CHECK(CalibrationModel::from_scores({0.5, 0.5}).p_value(0.5) == PValue{3, 3});
  CHECK_THROWS(CalibrationModel::from_scores({1.5}));
}

TEST_CASE("p_vector and prediction sets") {
  const auto cal = CalibrationModel::from_scores({0.2, 0.5, 0.8});
  const auto row = drow({0.9, 0.07, 0.03});
  const auto pv = p_vector(cal, std::span<const double>(row));
  CHECK(pv.denominator == 4);
  CHECK(pv.numerators == std::vector<std::uint32_t>{4, 1, 1});
  CHECK(prediction_set(pv, 0.3).members == std::vector<std::uint32_t>{0});
  CHECK(prediction_set(pv, 0.0).members == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(prediction_set(pv, 0.25).members == std::vector<std::uint32_t>{0});  // strict inequality

  const auto uniform = drow({1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto pu = p_vector(cal, std::span<const double>(uniform));
  CHECK(pu.numerators == std::vector<std::uint32_t>{2, 2, 2});
  CHECK(pu[0].value() == 0.5);
  CHECK(prediction_set(pu, 0.6).members.empty());
  CHECK_THROWS(prediction_set(pu, 1.0));
  CHECK_THROWS(prediction_set(pu, -0.1));
}

TEST_CASE("property: binary search count equals naive count, including ties") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> alphas(rng.below(40));
    for (auto& a : alphas) a = static_cast<double>(rng.below(6)) / 5.0;
    const auto cal = CalibrationModel::from_scores(alphas);
    for (int q = 0; q < 5; ++q) {
      const double star = rng.below(2) ? static_cast<double>(rng.below(6)) / 5.0 : rng.uniform();
      CHECK(cal.count_at_least(star) == reference::naive_count_at_least(alphas, star));
    }
  }
}

TEST_CASE("property: nesting, granularity and permutation invariance") {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t labels = 2 + rng.below(6);
    std::vector<ScoredExample> cal_rows;
    for (std::size_t i = 0; i < 1 + rng.below(30); ++i) {
      std::vector<float> s(labels, 0.0f);
      s[rng.below(labels)] = 1.0f;
      if (rng.below(2)) std::fill(s.begin(), s.end(), 1.0f / static_cast<float>(labels));
      cal_rows.push_back({i, static_cast<std::uint32_t>(rng.below(labels)), s});
    }
    const auto cal = calibrate(cal_rows);
    auto shuffled = cal_rows;
    shuffle(std::span<ScoredExample>(shuffled), rng);
    CHECK(calibrate(shuffled) == cal);

    std::vector<double> row(labels);
    double total = 0;
    for (auto& x : row) total += (x = rng.uniform());
    for (auto& x : row) x /= total;
    const auto pv = p_vector(cal, std::span<const double>(row));
    for (auto n : pv.numerators) {
      CHECK(n >= 1);
      CHECK(n <= pv.denominator);
    }
    const double e1 = rng.uniform() * 0.99, e2 = rng.uniform() * 0.99;
    const auto big = prediction_set(pv, std::min(e1, e2));
    const auto small = prediction_set(pv, std::max(e1, e2));
    CHECK(std::includes(big.members.begin(), big.members.end(), small.members.begin(), small.members.end()));
  }
}

TEST_CASE("transductive prediction") {
  const std::vector<LabeledPoint> single = {{{0.0}, 0}};
  const std::vector<int> cands = {0, 1};
  const auto r = tcp_prediction_set(single, {3.0}, cands, centroid_distance, 0.4);
  for (const auto& p : r.p_values) CHECK_UNARY(p == PValue{1, 2} || p == PValue{2, 2});
  CHECK(r.set.members == std::vector<std::uint32_t>{0, 1});

  // identical points: every alpha ties, p = 1
  const std::vector<LabeledPoint> same(5, LabeledPoint{{1.0, 1.0}, 0});
  const std::vector<int> one = {0};
  const auto tie = tcp_prediction_set(same, {1.0, 1.0}, one, centroid_distance, 0.9);
  CHECK(tie.p_values[0] == PValue{6, 6});
  CHECK(tie.set.members == std::vector<std::uint32_t>{0});

  // 5-point bag, enumerated by hand-rolled loop below
  const std::vector<LabeledPoint> bag = {{{0.0}, 0}, {{1.0}, 0}, {{10.0}, 1}, {{11.0}, 1}, {{0.5}, 0}};
  const std::vector<int> both = {0, 1};
  const auto res = tcp_prediction_set(bag, {0.2}, both, centroid_distance, 0.2);
  // label 0: the test point sits inside cluster 0, label 1: far from cluster 1
  CHECK(res.set.members == std::vector<std::uint32_t>{0});
  CHECK(res.p_values[1] == PValue{1, 6});
  CHECK_THROWS(tcp_prediction_set({}, {0.0}, both, centroid_distance, 0.1));
}

TEST_CASE("centroid distance") {
  const std::vector<LabeledPoint> rest = {{{0.0, 0.0}, 1}, {{2.0, 0.0}, 1}, {{9.0, 9.0}, 2}};
  CHECK(centroid_distance(rest, {{1.0, 1.0}, 1}) == doctest::Approx(1.0));
  CHECK(std::isinf(centroid_distance(rest, {{1.0, 1.0}, 3})));
}
