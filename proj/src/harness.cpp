#include "cpnlp/harness.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "cpnlp/rng.hpp"

namespace cpnlp {

Task parse_task(std::string_view s) {
  if (s == "pos" || s == "POS") return Task::kPos;
  if (s == "mlm" || s == "MLM") return Task::kMlm;
  throw std::invalid_argument("unknown task '" + std::string(s) + "' (expected pos or mlm)");
}

ScorerKind parse_scorer(std::string_view s) {
  if (s == "lexical" || s == "builtin-lexical") return ScorerKind::kLexical;
  if (s == "ngram" || s == "builtin-ngram") return ScorerKind::kNGram;
  if (s == "external" || s == "external-scorefile") return ScorerKind::kExternal;
  throw std::invalid_argument("unknown scorer '" + std::string(s) + "' (expected lexical, ngram or external)");
}

const char* to_string(Task t) { return t == Task::kPos ? "pos" : "mlm"; }

const char* to_string(ScorerKind s) {
  switch (s) {
    case ScorerKind::kLexical: return "lexical";
    case ScorerKind::kNGram: return "ngram";
    case ScorerKind::kExternal: return "external";
  }
  return "unknown";
}

std::vector<double> parse_number_list(std::string_view s) {
  std::vector<double> out;
  std::string text(s);
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream in(text);
  std::string item;
  while (in >> item) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size())
      throw std::invalid_argument("bad number '" + item + "' in list");
    out.push_back(v);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& in) {
  auto trim = [](std::string_view v) {
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
    return v;
  };
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(body.substr(0, eq));
    auto value = trim(body.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out.emplace_back(std::string(key), std::string(value));
  }
  return out;
}

std::vector<double> default_epsilons(Task task) {
  if (task == Task::kPos) return {0.001, 0.01, 0.05};
  return {0.05, 0.1, 0.2, 0.25};
}

std::vector<double> epsilon_grid(std::size_t points) {
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = static_cast<double>(i + 1) / static_cast<double>(points + 1);
  return grid;
}

void ExperimentConfig::validate() const {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (cal_sentence_cap < 1 || test_sentence_cap < 1) throw std::invalid_argument("sentence caps must be >= 1");
  for (double e : epsilons)
    if (!(e >= 0.0 && e < 1.0)) throw std::invalid_argument("epsilon outside [0,1)");
  if (scorer == ScorerKind::kLexical && task != Task::kPos)
    throw std::invalid_argument("the lexical scorer only supports the pos task");
  if (scorer == ScorerKind::kNGram && task != Task::kMlm)
    throw std::invalid_argument("the ngram scorer only supports the mlm task");
  if (scorer == ScorerKind::kExternal) {
    if (cal_scores_path.empty() || test_scores_path.empty())
      throw std::invalid_argument("external scorer needs cal_scores and test_scores");
  } else {
    if (corpus_path.empty()) throw std::invalid_argument("no corpus given");
    split.validate();
  }
}

namespace {

ScoredExample to_example(std::uint64_t id, std::uint32_t truth, const ScoreRow& row) {
  ScoredExample ex;
  ex.example_id = id;
  ex.true_label_index = truth;
  ex.scores.assign(row.begin(), row.end());
  return ex;
}

}  // namespace

ScoredSet score_pos(const TaggedCorpus& corpus, const LexicalTagger& tagger,
                    std::span<const std::size_t> sentences) {
  ScoredSet out{LabelVocabulary(corpus.label_set()), {}};
  for (auto s : sentences) {
    const auto& tokens = corpus.sentences().at(s).tokens;
    for (std::size_t i = 0; i < tokens.size(); ++i)
      out.rows.push_back(to_example((static_cast<std::uint64_t>(s) << 32) | i, corpus.label_index(tokens[i].tag),
                                    tagger.score_word(tokens[i].word)));
  }
  return out;
}

std::vector<MaskedInstance> mask_sentences(const TaggedCorpus& corpus, std::span<const std::size_t> sentences,
                                           std::size_t cap, std::uint64_t mask_seed) {
  std::vector<MaskedInstance> out;
  const auto n = std::min(cap, sentences.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(mask_one_word(corpus, sentences[i], mask_seed));
  return out;
}

ScoredSet score_mlm(const TaggedCorpus& corpus, const NGramInfiller& infiller,
                    std::span<const MaskedInstance> instances) {
  ScoredSet out{infiller.vocab(), {}};
  out.rows.reserve(instances.size());
  for (const auto& inst : instances) {
    const auto& tokens = corpus.sentences().at(inst.sentence_index).tokens;
    std::optional<std::string_view> left, right;
    if (inst.mask_position > 0) left = tokens[inst.mask_position - 1].word;
    if (inst.mask_position + 1 < tokens.size()) right = tokens[inst.mask_position + 1].word;
    out.rows.push_back(
        to_example(inst.sentence_index, infiller.index_of(inst.true_word), infiller.score_mask(left, right)));
  }
  return out;
}

void write_calibration(const CalibrationModel& cal, std::ostream& out) {
  out << cal.size() << '\n';
  for (double a : cal.alphas()) out << fmt::format("{}", a) << '\n';
}

CalibrationModel read_calibration(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("calibration file is empty");
  std::size_t n = 0;
  auto [p, ec] = std::from_chars(line.data(), line.data() + line.size(), n);
  if (ec != std::errc() || p != line.data() + line.size())
    throw std::runtime_error("calibration file: bad count line '" + line + "'");
  std::vector<double> alphas;
  alphas.reserve(n);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double v = 0.0;
    auto [q, ec2] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec2 != std::errc() || q != line.data() + line.size())
      throw std::runtime_error("calibration file: bad score '" + line + "'");
    alphas.push_back(v);
  }
  if (alphas.size() != n)
    throw std::runtime_error("calibration file: expected " + std::to_string(n) + " scores, found " +
                             std::to_string(alphas.size()));
  return CalibrationModel::from_scores(std::move(alphas));
}

void write_prediction_sets(const PValueMatrix& p, std::span<const ScoredExample> rows,
                           const LabelVocabulary& vocab, std::span<const double> epsilons, std::ostream& out) {
  for (std::size_t i = 0; i < p.n_rows; ++i) {
    const auto row = p.row(i);
    for (double eps : epsilons) {
      out << rows[i].example_id << '\t' << fmt::format("{}", eps) << '\t';
      bool first = true;
      for (std::size_t s = 0; s < row.size(); ++s) {
        if (!exceeds(row[s], p.denominator, eps)) continue;
        if (!first) out << ',';
        out << vocab[s];
        first = false;
      }
      out << '\n';
    }
  }
}

std::vector<std::uint64_t> histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw std::invalid_argument("bad histogram range");
  std::vector<std::uint64_t> counts(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    if (v < lo || v > hi) continue;
    auto b = static_cast<std::size_t>((v - lo) / width);
    if (b >= bins) b = bins - 1;
    ++counts[b];
  }
  return counts;
}

Evaluation evaluate_rows(std::span<const ScoredExample> cal_rows, std::span<const ScoredExample> test_rows,
                         std::span<const double> epsilons, std::span<const double> grid) {
  Evaluation ev;
  std::vector<ScoredExample> cal_labelled, test_labelled;
  for (const auto& r : cal_rows) {
    if (r.has_label()) cal_labelled.push_back(r);
    else ++ev.n_unlabeled;
  }
  for (const auto& r : test_rows) {
    if (r.has_label()) test_labelled.push_back(r);
    else ++ev.n_unlabeled;
  }
  if (test_labelled.empty()) throw std::runtime_error("no labelled test rows");

  const auto cal = calibrate(cal_labelled);
  const auto p = compute_p_matrix(cal, test_labelled);
  std::vector<std::uint32_t> truths, forced;
  truths.reserve(test_labelled.size());
  forced.reserve(test_labelled.size());
  for (const auto& r : test_labelled) {
    truths.push_back(r.true_label_index);
    forced.push_back(forced_prediction(std::span<const float>(r.scores)));
  }
  ev.metrics = evaluate_metrics(p, forced, truths, epsilons);
  ev.curve = coverage_curve(p, truths, grid);
  ev.n_cal = cal.size();
  ev.n_test = test_labelled.size();
  ev.cal_scores = cal.alphas();
  ev.set_sizes.assign(epsilons.size(), std::vector<std::uint64_t>(p.n_labels + 1, 0));
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    for (std::size_t i = 0; i < p.n_rows; ++i) {
      std::size_t size = 0;
      for (auto v : p.row(i)) size += exceeds(v, p.denominator, epsilons[e]);
      ++ev.set_sizes[e][size];
    }
  }
  return ev;
}

namespace {

struct RepetitionResult {
  std::uint64_t seed = 0;
  std::optional<Evaluation> eval;
  std::string error;
};

std::string num(double v) { return fmt::format("{:.6f}", v); }

Evaluation run_repetition(const ExperimentConfig& config, const TaggedCorpus& corpus, std::uint64_t seed,
                          std::span<const double> epsilons, std::span<const double> grid) {
  auto spec = config.split;
  spec.seed = seed;
  const auto split = split_corpus(corpus, spec);
  if (config.task == Task::kPos) {
    const auto tagger = LexicalTagger::fit(corpus, split.train, config.k, config.case_fold);
    const auto cal = score_pos(corpus, tagger, split.cal);
    const auto test = score_pos(corpus, tagger, split.test);
    return evaluate_rows(cal.rows, test.rows, epsilons, grid);
  }
  const auto infiller = NGramInfiller::fit(corpus, split.train, config.weights, config.k, config.vocab_cap);
  const auto mask_seed = derive_seed(seed, 1);
  const auto cal_masks = mask_sentences(corpus, split.cal, config.cal_sentence_cap, mask_seed);
  const auto test_masks = mask_sentences(corpus, split.test, config.test_sentence_cap, mask_seed);
  const auto cal = score_mlm(corpus, infiller, cal_masks);
  const auto test = score_mlm(corpus, infiller, test_masks);
  return evaluate_rows(cal.rows, test.rows, epsilons, grid);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

void write_outputs(const ExperimentConfig& config, const std::vector<RepetitionResult>& results,
                   std::span<const double> epsilons) {
  const std::string model = to_string(config.scorer);
  std::vector<const RepetitionResult*> ok;
  for (const auto& r : results)
    if (r.eval) ok.push_back(&r);

  std::string metrics =
      "model,seed,epsilon,ca,cred_inverted,cred_conventional,op,of,coverage,pis,acds,n_eps,n_cal,n_test,n_unlabeled\n";
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    for (const auto* r : ok) {
      const auto& m = r->eval->metrics;
      const auto& st = m.per_epsilon[e];
      metrics += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", model, r->seed, num(epsilons[e]),
                             num(m.ca), num(m.cred.inverted), num(m.cred.conventional), num(m.op), num(m.of),
                             num(st.coverage), num(st.pis), st.acds ? num(*st.acds) : "NA", num(st.n_eps),
                             r->eval->n_cal, r->eval->n_test, r->eval->n_unlabeled);
    }
    if (ok.empty()) continue;
    // summary: arithmetic mean over successful repetitions; ACDS over those where it is defined
    const double n = static_cast<double>(ok.size());
    auto mean = [&](auto get) {
      double s = 0.0;
      for (const auto* r : ok) s += get(*r->eval);
      return s / n;
    };
    double acds_sum = 0.0;
    std::size_t acds_n = 0;
    for (const auto* r : ok)
      if (const auto& a = r->eval->metrics.per_epsilon[e].acds) {
        acds_sum += *a;
        ++acds_n;
      }
    metrics += fmt::format(
        "{},summary,{},{},{},{},{},{},{},{},{},{},{:.1f},{:.1f},{:.1f}\n", model, num(epsilons[e]),
        num(mean([](const Evaluation& v) { return v.metrics.ca; })),
        num(mean([](const Evaluation& v) { return v.metrics.cred.inverted; })),
        num(mean([](const Evaluation& v) { return v.metrics.cred.conventional; })),
        num(mean([](const Evaluation& v) { return v.metrics.op; })),
        num(mean([](const Evaluation& v) { return v.metrics.of; })),
        num(mean([e](const Evaluation& v) { return v.metrics.per_epsilon[e].coverage; })),
        num(mean([e](const Evaluation& v) { return v.metrics.per_epsilon[e].pis; })),
        acds_n ? num(acds_sum / static_cast<double>(acds_n)) : std::string("NA"),
        num(mean([e](const Evaluation& v) { return v.metrics.per_epsilon[e].n_eps; })),
        mean([](const Evaluation& v) { return static_cast<double>(v.n_cal); }),
        mean([](const Evaluation& v) { return static_cast<double>(v.n_test); }),
        mean([](const Evaluation& v) { return static_cast<double>(v.n_unlabeled); }));
  }
  write_file(config.output_dir / "metrics.csv", metrics);

  std::string curve = "model,seed,nominal,empirical\n";
  for (const auto* r : ok)
    for (const auto& pt : r->eval->curve)
      curve += fmt::format("{},{},{},{}\n", model, r->seed, num(pt.nominal), num(pt.empirical));
  if (!ok.empty()) {
    const auto& first = ok.front()->eval->curve;
    for (std::size_t g = 0; g < first.size(); ++g) {
      double s = 0.0;
      for (const auto* r : ok) s += r->eval->curve[g].empirical;
      curve += fmt::format("{},summary,{},{}\n", model, num(first[g].nominal), num(s / static_cast<double>(ok.size())));
    }
  }
  write_file(config.output_dir / "coverage_curve.csv", curve);

  auto hist_csv = [&](double hi) {
    std::string out = "model,seed,bin_lo,bin_hi,count\n";
    const double width = hi / static_cast<double>(kHistogramBins);
    for (const auto* r : ok) {
      std::vector<double> values;
      for (double a : r->eval->cal_scores)
        if (hi >= 1.0 || a < hi) values.push_back(a);
      const auto counts = histogram(values, 0.0, hi, kHistogramBins);
      for (std::size_t b = 0; b < counts.size(); ++b)
        out += fmt::format("{},{},{:.8f},{:.8f},{}\n", model, r->seed, width * static_cast<double>(b),
                           width * static_cast<double>(b + 1), counts[b]);
    }
    return out;
  };
  write_file(config.output_dir / "score_hist.csv", hist_csv(1.0));
  write_file(config.output_dir / "score_hist_zoom.csv", hist_csv(kZoomUpper));

  std::string sizes = "model,seed,epsilon,set_size,count\n";
  for (const auto* r : ok)
    for (std::size_t e = 0; e < epsilons.size(); ++e) {
      const auto& counts = r->eval->set_sizes[e];
      for (std::size_t s = 0; s < counts.size(); ++s)
        if (counts[s]) sizes += fmt::format("{},{},{},{},{}\n", model, r->seed, num(epsilons[e]), s, counts[s]);
    }
  write_file(config.output_dir / "set_size_hist.csv", sizes);
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto epsilons = config.epsilons.empty() ? default_epsilons(config.task) : config.epsilons;
  const auto grid = epsilon_grid(config.grid_points);
  std::filesystem::create_directories(config.output_dir);

  std::vector<RepetitionResult> results;
  if (config.scorer == ScorerKind::kExternal) {
    // precomputed scores fix the split, so there is exactly one repetition
    RepetitionResult r;
    r.seed = config.split.seed;
    try {
      const auto cal = read_score_file(config.cal_scores_path);
      const auto test = read_score_file(config.test_scores_path);
      if (!(cal.vocab == test.vocab)) throw std::runtime_error("calibration and test vocabularies differ");
      r.eval = evaluate_rows(cal.rows, test.rows, epsilons, grid);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    results.push_back(std::move(r));
  } else {
    const auto corpus = load_tagged_corpus(config.corpus_path);
    results.resize(config.repetitions);
    const auto reps = static_cast<std::int64_t>(config.repetitions);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < reps; ++i) {
      auto& r = results[static_cast<std::size_t>(i)];
      r.seed = config.split.seed + static_cast<std::uint64_t>(i);
      try {
        r.eval = run_repetition(config, corpus, r.seed, epsilons, grid);
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  }

  ExperimentSummary summary;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].eval) ++summary.succeeded;
    else summary.failures.push_back("repetition " + std::to_string(i) + " (seed " +
                                    std::to_string(results[i].seed) + "): " + results[i].error);
  }
  write_outputs(config, results, epsilons);
  return summary;
}

std::vector<GapPrediction> fill_transcript(std::string_view text, const NGramInfiller& infiller,
                                           const CalibrationModel& cal, double epsilon) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    const auto start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos > start) tokens.push_back(text.substr(start, pos - start));
  }

  std::vector<GapPrediction> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] != kGapToken) continue;
    std::optional<std::string_view> left, right;
    if (i > 0) left = tokens[i - 1];
    if (i + 1 < tokens.size()) right = tokens[i + 1];
    const auto scores = infiller.score_mask(left, right);
    // round through float so test scores match the precision calibration saw
    const std::vector<float> row(scores.begin(), scores.end());
    const auto pv = p_vector(cal, std::span<const float>(row));
    GapPrediction gap;
    gap.position = i;
    gap.set = prediction_set(pv, epsilon);
    auto order = gap.set.members;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return pv.numerators[a] > pv.numerators[b]; });
    for (auto s : order) gap.labels.push_back(infiller.vocab()[s]);
    out.push_back(std::move(gap));
  }
  return out;
}

}  // namespace cpnlp
