// Acceptance suite: one PASS/FAIL/SKIP line per criterion; exit status is
// nonzero when any criterion fails.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "cpnlp/corpus.hpp"
#include "cpnlp/harness.hpp"
#include "cpnlp/icp.hpp"
#include "cpnlp/icp_kernels.hpp"
#include "cpnlp/metrics.hpp"
#include "cpnlp/models.hpp"
#include "cpnlp/rng.hpp"
#include "cpnlp/scorefile.hpp"
#include "cpnlp/synthetic.hpp"
#include "test_util.hpp"
#include "toy_corpus.hpp"

using namespace cpnlp;
using Clock = std::chrono::steady_clock;

namespace {

enum class Outcome { kPass, kFail, kSkip };

struct Verdict {
  Outcome outcome;
  std::string detail;
};

Verdict pass(std::string d) { return {Outcome::kPass, std::move(d)}; }
Verdict fail(std::string d) { return {Outcome::kFail, std::move(d)}; }
Verdict skip(std::string d) { return {Outcome::kSkip, std::move(d)}; }

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1. binary-search p-values against an O(n) count, exact rational equality
Verdict pvalue_oracle() {
  const auto t0 = Clock::now();
  SplitMix64 rng(20240501);
  std::size_t ties = 0;
  for (int c = 0; c < 100000; ++c) {
    const std::size_t n = rng.below(201);
    std::vector<double> alphas(n);
    const bool grid = rng.below(2) == 0;
    for (auto& a : alphas) a = grid ? static_cast<double>(rng.below(11)) / 10.0 : rng.uniform();
    double star;
    const auto mode = rng.below(3);
    if (mode == 0 && n > 0) {
      star = alphas[rng.below(n)];
      ++ties;
    } else if (mode == 1) {
      star = static_cast<double>(rng.below(11)) / 10.0;
    } else {
      star = rng.uniform();
    }
    const auto cal = CalibrationModel::from_scores(alphas);
    const PValue fast = cal.p_value(star);
    const PValue naive{reference::naive_count_at_least(alphas, star) + 1, n + 1};
    if (!(fast == naive))
      return fail(fmt::format("case {}: {}/{} vs naive {}/{}", c, fast.numerator, fast.denominator, naive.numerator,
                              naive.denominator));
  }
  const double secs = seconds_since(t0);
  if (secs >= 30.0) return fail(fmt::format("took {:.1f}s (limit 30s)", secs));
  return pass(fmt::format("100000 cases ({} with alpha* drawn from the calibration multiset), {:.2f}s", ties, secs));
}

// 2. nesting of prediction sets in epsilon
Verdict set_nesting() {
  SplitMix64 rng(99);
  for (int c = 0; c < 10000; ++c) {
    PValueVector pv;
    pv.denominator = 1 + rng.below(1000);
    pv.numerators.resize(1 + rng.below(50));
    for (auto& v : pv.numerators) v = static_cast<std::uint32_t>(1 + rng.below(pv.denominator));
    double e1 = rng.uniform(), e2 = rng.uniform();
    if (rng.below(5) == 0) e2 = e1;
    if (e1 > e2) std::swap(e1, e2);
    const auto wide = prediction_set(pv, e1);
    const auto narrow = prediction_set(pv, e2);
    if (!std::includes(wide.members.begin(), wide.members.end(), narrow.members.begin(), narrow.members.end()))
      return fail(fmt::format("case {}: eps {} vs {}", c, e1, e2));
  }
  return pass("10000 random p-vectors");
}

SyntheticSpec validity_spec() {
  SyntheticSpec spec;
  spec.n_classes = 10;
  spec.noise = 1.0;
  spec.signal = 2.0;
  spec.n_cal = 1000;
  spec.n_test = 5000;
  spec.seed = 1;
  return spec;
}

// 3 + 4. marginal validity and observed perceptiveness on synthetic data
std::pair<Verdict, Verdict> validity_and_op() {
  const auto t0 = Clock::now();
  const std::vector<double> eps = {0.05, 0.1, 0.25};
  const auto report = run_synthetic_validity(validity_spec(), eps, 5);
  const double secs = seconds_since(t0);
  std::string detail;
  bool ok = secs < 120.0;
  for (const auto& r : report.rows) {
    const bool in_band = std::abs(r.coverage - (1.0 - r.epsilon)) <= 0.02;
    ok = ok && in_band;
    detail += fmt::format("eps={} coverage={:.4f}{}; ", r.epsilon, r.coverage, in_band ? "" : " (OUT OF BAND)");
  }
  detail += fmt::format("{:.2f}s", secs);
  Verdict validity = ok ? pass(detail) : fail(detail);
  const bool op_ok = std::abs(report.op - 0.5) <= 0.03;
  Verdict op = op_ok ? pass(fmt::format("OP={:.4f}", report.op)) : fail(fmt::format("OP={:.4f}", report.op));
  return {validity, op};
}

// 5. transductive procedure against an independent enumeration
double brute_centroid(const std::vector<LabeledPoint>& all, std::size_t skip, const LabeledPoint& z) {
  // mean over same-label points other than index `skip`, accumulated in index order
  std::vector<double> sum(z.x.size(), 0.0);
  double count = 0;
  for (std::size_t j = 0; j < all.size(); ++j) {
    if (j == skip || all[j].y != z.y) continue;
    for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += all[j].x[d];
    count += 1;
  }
  if (count == 0) return std::numeric_limits<double>::infinity();
  double sq = 0;
  for (std::size_t d = 0; d < sum.size(); ++d) {
    const double diff = z.x[d] - sum[d] / count;
    sq += diff * diff;
  }
  return std::sqrt(sq);
}

Verdict tcp_oracle() {
  SplitMix64 rng(31337);
  std::size_t included = 0, total = 0;
  for (int c = 0; c < 1000; ++c) {
    const std::size_t n = 1 + rng.below(8);
    const std::size_t dims = 1 + rng.below(2);
    std::vector<LabeledPoint> bag(n);
    for (auto& p : bag) {
      p.x.resize(dims);
      for (auto& v : p.x) v = static_cast<double>(rng.below(4));
      p.y = static_cast<int>(rng.below(3));
    }
    std::vector<double> test_x(dims);
    for (auto& v : test_x) v = static_cast<double>(rng.below(4));
    const std::vector<int> candidates = {0, 1, 2};
    const double eps = static_cast<double>(rng.below(10)) / 10.0;
    const auto got = tcp_prediction_set(bag, test_x, candidates, centroid_distance, eps);

    for (std::size_t k = 0; k < candidates.size(); ++k) {
      auto all = bag;
      all.push_back({test_x, candidates[k]});
      std::vector<double> scores(all.size());
      for (std::size_t i = 0; i < all.size(); ++i) scores[i] = brute_centroid(all, i, all[i]);
      // rank the test score among all scores by sorting descending
      const double mine = scores.back();
      auto sorted = scores;
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      std::size_t at_least = 0;
      while (at_least < sorted.size() && sorted[at_least] >= mine) ++at_least;
      const PValue expect{at_least, all.size()};
      const bool member = static_cast<double>(at_least) / static_cast<double>(all.size()) > eps;
      const bool got_member = std::find(got.set.members.begin(), got.set.members.end(), k) != got.set.members.end();
      if (!(got.p_values[k] == expect) || member != got_member)
        return fail(fmt::format("instance {}, candidate {}: p {}/{} vs {}/{}", c, k, got.p_values[k].numerator,
                                got.p_values[k].denominator, expect.numerator, expect.denominator));
      included += member;
      ++total;
    }
  }
  return pass(fmt::format("1000 instances, {} of {} candidates included", included, total));
}

// 6. hand-computed metric examples
Verdict metrics_suite() {
  std::vector<std::string> failures;
  auto expect = [&](bool cond, const char* what) {
    if (!cond) failures.emplace_back(what);
  };
  auto matrix = [](std::uint64_t den, std::vector<std::vector<std::uint32_t>> rows) {
    PValueMatrix m;
    m.denominator = den;
    m.n_rows = rows.size();
    m.n_labels = rows[0].size();
    for (auto& r : rows) m.numerators.insert(m.numerators.end(), r.begin(), r.end());
    return m;
  };

  const std::vector<std::uint32_t> ab = {0, 1}, aa = {0, 0};
  expect(classification_accuracy(ab, aa) == 0.5, "CA 0.5");
  expect(classification_accuracy(aa, aa) == 1.0, "CA 1.0");

  const auto c1 = credibility(matrix(4, {{4, 1, 1}}));
  expect(c1.inverted == 0.0 && c1.conventional == 1.0, "credibility of p=[1,.25,.25]");
  expect(std::abs(credibility(matrix(20, {{15, 2}})).inverted - 0.25) < 1e-15, "credibility of p=[.75,.1]");

  const std::vector<std::uint32_t> t0 = {0};
  expect(std::abs(observed_perceptiveness(matrix(10, {{8, 1}}), t0) - 0.8) < 1e-15, "OP 0.8");
  expect(std::abs(observed_perceptiveness(matrix(10, {{4, 1}, {6, 1}}), aa) - 0.5) < 1e-15, "OP mean 0.5");
  expect(std::abs(observed_fuzziness(matrix(20, {{16, 2, 1}}), t0) - 0.15) < 1e-15, "OF 0.15");
  std::vector<std::uint32_t> floor_row(190, 1);
  floor_row[0] = 5700;
  expect(std::abs(observed_fuzziness(matrix(5700, {floor_row}), t0) - 189.0 / 5700.0) < 1e-15, "OF floor 189/5700");

  const std::vector<PredictionSet> sets = {{0.1, {0}}, {0.1, {0, 1}}};
  const auto st = per_epsilon_stats(sets, ab, 0.1);
  expect(st.coverage == 1.0 && st.pis == 0.5 && st.acds == std::optional<double>(1.0) && st.n_eps == 1.5,
         "coverage 1 / pis .5 / acds 1 / n_eps 1.5");
  const std::vector<PredictionSet> wide = {{0.05, {0, 1}}, {0.05, {0, 1, 2}}};
  expect(!per_epsilon_stats(wide, ab, 0.05).acds.has_value(), "ACDS NA without singletons");

  const std::vector<double> grid = {0.0, 0.5};
  const std::vector<std::uint32_t> zeros = {0, 0, 0};
  const auto curve = coverage_curve(matrix(10, {{2, 1}, {6, 1}, {9, 1}}), zeros, grid);
  expect(curve[0].empirical == 1.0, "curve at eps 0");
  expect(std::abs(curve[1].empirical - 2.0 / 3.0) < 1e-15, "curve 2/3");

  if (!failures.empty()) {
    std::string d;
    for (auto& f : failures) d += f + "; ";
    return fail(d);
  }
  return pass("all hand-computed examples exact");
}

// 7. reference Brown corpus (only when available)
std::string brown_path() {
  if (const char* env = std::getenv("CPNLP_BROWN_CORPUS")) return env;
#ifdef CPNLP_SOURCE_DIR
  const auto p = std::filesystem::path(CPNLP_SOURCE_DIR) / "data" / "brown.txt";
  if (std::filesystem::exists(p)) return p.string();
#endif
  return {};
}

Verdict brown_check() {
  const auto path = brown_path();
  if (path.empty() || !std::filesystem::exists(path))
    return skip("reference corpus not present (set CPNLP_BROWN_CORPUS or add data/brown.txt)");
  const auto t0 = Clock::now();
  const auto corpus = load_tagged_corpus(path);
  std::string detail = fmt::format("sentences={} labels={}", corpus.size(), corpus.label_set().size());
  bool ok = corpus.label_set().size() == 190;

  const auto split = split_corpus(corpus, {0.8, 0.1, 0.1, 0});
  const auto tagger = LexicalTagger::fit(corpus, split.train);
  const auto cal = score_pos(corpus, tagger, split.cal);
  const auto test = score_pos(corpus, tagger, split.test);
  const std::vector<double> eps = {0.1, 0.05, 0.01};
  const auto ev = evaluate_rows(cal.rows, test.rows, eps, std::span<const double>());
  const bool ca_ok = ev.metrics.ca >= 0.85 && ev.metrics.ca <= 0.95;
  ok = ok && ca_ok;
  detail += fmt::format(" test_sentences={} CA={:.4f}", split.test.size(), ev.metrics.ca);
  for (const auto& st : ev.metrics.per_epsilon) {
    const bool in_band = std::abs(st.coverage - (1.0 - st.epsilon)) <= 0.015;
    ok = ok && in_band;
    detail += fmt::format(" cov@{}={:.4f}{}", 1.0 - st.epsilon, st.coverage, in_band ? "" : "(OUT)");
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 300.0;
  detail += fmt::format(" {:.1f}s", secs);
  return ok ? pass(detail) : fail(detail);
}

// 8. byte-identical experiment output across runs and thread counts
Verdict determinism() {
  testing::TempDir dir("accept_det");
  testing::spit(dir / "toy.txt", testing::toy_corpus_text(300, 11));
  const int saved = omp_get_max_threads();
  std::size_t files = 0;
  for (auto task : {Task::kPos, Task::kMlm}) {
    ExperimentConfig config;
    config.corpus_path = (dir / "toy.txt").string();
    config.task = task;
    config.scorer = task == Task::kPos ? ScorerKind::kLexical : ScorerKind::kNGram;
    config.repetitions = 5;
    config.cal_sentence_cap = 30;
    config.test_sentence_cap = 25;
    std::vector<std::filesystem::path> outs;
    for (int threads : {1, 1, 4}) {
      omp_set_num_threads(threads);
      config.output_dir = dir / fmt::format("{}_{}", to_string(task), outs.size());
      run_experiment(config);
      outs.push_back(config.output_dir);
    }
    for (const char* f : {"metrics.csv", "coverage_curve.csv", "score_hist.csv", "score_hist_zoom.csv",
                          "set_size_hist.csv"}) {
      const auto ref = testing::slurp(outs[0] / f);
      for (std::size_t i = 1; i < outs.size(); ++i)
        if (testing::slurp(outs[i] / f) != ref) {
          omp_set_num_threads(saved);
          return fail(fmt::format("{} differs for {} run {}", f, to_string(task), i));
        }
      ++files;
    }
  }
  omp_set_num_threads(saved);
  return pass(fmt::format("{} CSVs identical across repeat runs and 1 vs 4 threads", files));
}

// 9. CPSF round trip and corruption handling
Verdict scorefile_roundtrip() {
  testing::TempDir dir("accept_sf");
  SplitMix64 rng(4242);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_labels = 1 + rng.below(64);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n_labels; ++i) labels.push_back(fmt::format("lab{}", i));
    const LabelVocabulary vocab(labels);
    std::vector<ScoredExample> rows(rng.below(50));
    for (auto& r : rows) {
      r.example_id = rng.next();
      r.true_label_index = rng.below(5) ? static_cast<std::uint32_t>(rng.below(n_labels)) : kNoLabel;
      double total = 0;
      std::vector<double> v(n_labels);
      for (auto& x : v) total += (x = rng.uniform());
      for (double x : v) r.scores.push_back(static_cast<float>(x / total));
    }
    const auto p = dir / "rt.cpsf";
    write_score_file(p, vocab, rows);
    const auto bytes = testing::slurp(p);
    const auto back = read_score_file(p);
    if (!(back.vocab == vocab) || !(back.rows == rows)) return fail(fmt::format("trial {} content differs", trial));
    write_score_file(p, back.vocab, back.rows);
    if (testing::slurp(p) != bytes) return fail(fmt::format("trial {} bytes differ after rewrite", trial));
  }

  const auto good = dir / "good.cpsf";
  write_score_file(good, LabelVocabulary({"a", "b"}), {{1, 0, {0.5f, 0.5f}}, {2, 1, {0.25f, 0.75f}}});
  const auto bytes = testing::slurp(good);
  const auto vocab = testing::slurp(vocab_path_for(good));
  struct Case {
    const char* name;
    std::string data;
    ScoreFileError::Kind kind;
  };
  auto patched = [&](std::size_t at, std::string with) {
    auto b = bytes;
    b.replace(at, with.size(), with);
    return b;
  };
  const std::vector<Case> cases = {
      {"bad magic", patched(0, "XXXX"), ScoreFileError::Kind::kBadMagic},
      {"bad version", patched(4, std::string("\x07", 1)), ScoreFileError::Kind::kBadVersion},
      {"oversized row count", patched(12, std::string(8, '\x7f')), ScoreFileError::Kind::kTruncated},
      {"short header", bytes.substr(0, 10), ScoreFileError::Kind::kTruncated},
      {"truncated row", bytes.substr(0, bytes.size() - 1), ScoreFileError::Kind::kTruncated},
  };
  for (const auto& c : cases) {
    const auto p = dir / "bad.cpsf";
    testing::spit(p, c.data);
    testing::spit(vocab_path_for(p), vocab);
    try {
      read_score_file(p);
      return fail(fmt::format("{} accepted", c.name));
    } catch (const ScoreFileError& e) {
      if (e.kind() != c.kind) return fail(fmt::format("{} reported as '{}'", c.name, e.what()));
    }
  }
  return pass("100 random files round-trip bit-exactly; 5 corruption cases rejected by name");
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"p-value oracle equality", pvalue_oracle},
      {"set nesting", set_nesting},
  };
  std::optional<std::pair<Verdict, Verdict>> synthetic;
  auto synthetic_once = [&]() -> std::pair<Verdict, Verdict>& {
    if (!synthetic) synthetic = validity_and_op();
    return *synthetic;
  };
  criteria.emplace_back("marginal validity (synthetic)", [&] { return synthetic_once().first; });
  criteria.emplace_back("OP calibration (synthetic)", [&] { return synthetic_once().second; });
  criteria.emplace_back("TCP oracle", tcp_oracle);
  criteria.emplace_back("metrics unit suite", metrics_suite);
  criteria.emplace_back("Brown corpus conditional check", brown_check);
  criteria.emplace_back("experiment determinism", determinism);
  criteria.emplace_back("score-file round trip", scorefile_roundtrip);

  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = fail(std::string("exception: ") + e.what());
    }
    const char* tag = v.outcome == Outcome::kPass ? "PASS" : v.outcome == Outcome::kFail ? "FAIL" : "SKIP";
    failures += v.outcome == Outcome::kFail;
    std::cout << "[" << tag << "] " << name << ": " << v.detail << std::endl;
  }
  std::cout << (failures ? fmt::format("{} criterion(s) failed", failures) : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
