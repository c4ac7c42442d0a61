// cpnlp: command-line front end for conformal POS tagging and word infilling.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include "cpnlp/corpus.hpp"
#include "cpnlp/harness.hpp"
#include "cpnlp/icp.hpp"
#include "cpnlp/icp_kernels.hpp"
#include "cpnlp/metrics.hpp"
#include "cpnlp/models.hpp"
#include "cpnlp/rng.hpp"
#include "cpnlp/scorefile.hpp"
#include "cpnlp/synthetic.hpp"

using namespace cpnlp;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

std::vector<std::size_t> pick(const CorpusSplit& split, const std::string& which) {
  if (which == "train") return split.train;
  if (which == "cal") return split.cal;
  if (which == "test") return split.test;
  throw std::invalid_argument("unknown partition '" + which + "' (expected train, cal or test)");
}

// `experiment --config FILE` expands into `--key=value` arguments placed
// ahead of the explicit flags so the latter win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;
  auto sub = std::find(args.begin(), args.end(), "experiment");
  if (sub == args.end()) return args;
  auto in = open_in(config_path);
  std::vector<std::string> injected;
  for (auto& [key, value] : read_key_values(in)) injected.push_back("--" + key + "=" + value);
  args.insert(sub + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal prediction sets for POS tagging and masked-word infilling"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse and validate a tagged corpus");
  std::string corpus_path;
  ingest->add_option("--corpus", corpus_path)->required();

  // split
  auto* split_cmd = app.add_subcommand("split", "Seeded train/cal/test sentence split");
  SplitSpec split_spec;
  std::string out_path;
  split_cmd->add_option("--corpus", corpus_path)->required();
  split_cmd->add_option("--seed", split_spec.seed);
  split_cmd->add_option("--train_frac", split_spec.train_frac);
  split_cmd->add_option("--cal_frac", split_spec.cal_frac);
  split_cmd->add_option("--test_frac", split_spec.test_frac);
  split_cmd->add_option("--out", out_path)->required();

  // masks
  auto* masks = app.add_subcommand("masks", "Write masked-sentence input for an external scorer");
  std::string split_path, which = "cal";
  std::size_t cap = 1300;
  std::uint64_t mask_seed = 0;
  masks->add_option("--corpus", corpus_path)->required();
  masks->add_option("--split", split_path)->required();
  masks->add_option("--which", which);
  masks->add_option("--cap", cap);
  masks->add_option("--mask_seed", mask_seed);
  masks->add_option("--out", out_path)->required();

  // score
  auto* score = app.add_subcommand("score", "Score a split partition with a built-in model into CPSF");
  std::string task_name = "pos";
  double k = 0.1;
  bool case_fold = true;
  std::size_t vocab_cap = 10000;
  InfillerWeights weights;
  score->add_option("--corpus", corpus_path)->required();
  score->add_option("--split", split_path)->required();
  score->add_option("--which", which);
  score->add_option("--task", task_name);
  score->add_option("--k", k);
  score->add_option("--case_fold", case_fold);
  score->add_option("--vocab_cap", vocab_cap);
  score->add_option("--lambda_uni", weights.unigram);
  score->add_option("--lambda_left", weights.left);
  score->add_option("--lambda_right", weights.right);
  score->add_option("--cap", cap, "MLM sentence cap");
  score->add_option("--mask_seed", mask_seed);
  score->add_option("--out", out_path)->required();

  // calibrate
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Nonconformity scores from a labelled CPSF file");
  std::string scores_path;
  calibrate_cmd->add_option("--scores", scores_path)->required();
  calibrate_cmd->add_option("--out", out_path)->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Prediction sets and metrics for a CPSF file");
  std::string calibration_path, sets_path, metrics_path, eps_text = "0.001,0.01,0.05";
  evaluate->add_option("--calibration", calibration_path)->required();
  evaluate->add_option("--scores", scores_path)->required();
  evaluate->add_option("--epsilons", eps_text);
  evaluate->add_option("--sets", sets_path);
  evaluate->add_option("--metrics", metrics_path);

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Repeated split/calibrate/evaluate protocol");
  ExperimentConfig config;
  std::string config_path, scorer_name = "lexical", exp_eps, output_dir = "results";
  experiment->add_option("--config", config_path, "key = value file; flags override it");
  experiment->add_option("--corpus", config.corpus_path);
  experiment->add_option("--task", task_name);
  experiment->add_option("--scorer", scorer_name);
  experiment->add_option("--cal_scores", config.cal_scores_path);
  experiment->add_option("--test_scores", config.test_scores_path);
  experiment->add_option("--train_frac", config.split.train_frac);
  experiment->add_option("--cal_frac", config.split.cal_frac);
  experiment->add_option("--test_frac", config.split.test_frac);
  experiment->add_option("--seed", config.split.seed);
  experiment->add_option("--repetitions", config.repetitions);
  experiment->add_option("--epsilons", exp_eps);
  experiment->add_option("--grid_points", config.grid_points);
  experiment->add_option("--output", output_dir);
  experiment->add_option("--cal_sentence_cap", config.cal_sentence_cap);
  experiment->add_option("--test_sentence_cap", config.test_sentence_cap);
  experiment->add_option("--k", config.k);
  experiment->add_option("--case_fold", config.case_fold);
  experiment->add_option("--vocab_cap", config.vocab_cap);
  experiment->add_option("--lambda_uni", config.weights.unigram);
  experiment->add_option("--lambda_left", config.weights.left);
  experiment->add_option("--lambda_right", config.weights.right);
  experiment->add_option("--threads", threads);

  // synthetic
  auto* synthetic = app.add_subcommand("synthetic", "Coverage study on exchangeable synthetic data");
  SyntheticSpec syn;
  std::size_t n_seeds = 5;
  std::string syn_eps = "0.05,0.1,0.25";
  synthetic->add_option("--classes", syn.n_classes);
  synthetic->add_option("--noise", syn.noise);
  synthetic->add_option("--signal", syn.signal);
  synthetic->add_option("--n_train", syn.n_train);
  synthetic->add_option("--n_cal", syn.n_cal);
  synthetic->add_option("--n_test", syn.n_test);
  synthetic->add_option("--seed", syn.seed);
  synthetic->add_option("--seeds", n_seeds);
  synthetic->add_option("--epsilons", syn_eps);
  synthetic->add_flag("--uniform", syn.uniform_scorer, "label-independent random score rows");

  // fill
  auto* fill = app.add_subcommand("fill", "Prediction sets for <UNK> gaps in a transcript");
  std::string text, text_file;
  double epsilon = 0.25;
  SplitSpec fill_split;
  fill->add_option("--corpus", corpus_path)->required();
  fill->add_option("--text", text);
  fill->add_option("--text_file", text_file);
  fill->add_option("--epsilon", epsilon);
  fill->add_option("--seed", fill_split.seed);
  fill->add_option("--cap", cap, "calibration sentence cap");
  fill->add_option("--k", k);
  fill->add_option("--vocab_cap", vocab_cap);

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (threads > 0) omp_set_num_threads(threads);

    if (*ingest) {
      const auto corpus = load_tagged_corpus(corpus_path);
      std::cout << fmt::format("sentences {}\ntokens {}\nwords {}\nlabels {}\n", corpus.size(), corpus.token_count(),
                               corpus.vocab().size(), corpus.label_set().size());
    } else if (*split_cmd) {
      const auto corpus = load_tagged_corpus(corpus_path);
      auto out = open_out(out_path);
      write_split(split_corpus(corpus, split_spec), out);
    } else if (*masks) {
      const auto corpus = load_tagged_corpus(corpus_path);
      auto in = open_in(split_path);
      const auto split = read_split(in);
      const auto indices = pick(split, which);
      auto out = open_out(out_path);
      write_masked_sentences(corpus, mask_sentences(corpus, indices, cap, mask_seed), out);
    } else if (*score) {
      const auto corpus = load_tagged_corpus(corpus_path);
      auto in = open_in(split_path);
      const auto split = read_split(in);
      const auto indices = pick(split, which);
      ScoredSet scored;
      if (parse_task(task_name) == Task::kPos) {
        const auto tagger = LexicalTagger::fit(corpus, split.train, k, case_fold);
        scored = score_pos(corpus, tagger, indices);
      } else {
        const auto infiller = NGramInfiller::fit(corpus, split.train, weights, k, vocab_cap);
        scored = score_mlm(corpus, infiller, mask_sentences(corpus, indices, cap, mask_seed));
      }
      write_score_file(out_path, scored.vocab, scored.rows);
      std::cout << fmt::format("rows {}\nlabels {}\n", scored.rows.size(), scored.vocab.size());
    } else if (*calibrate_cmd) {
      const auto contents = read_score_file(scores_path);
      std::vector<ScoredExample> labelled;
      for (const auto& r : contents.rows)
        if (r.has_label()) labelled.push_back(r);
      auto out = open_out(out_path);
      write_calibration(calibrate(labelled), out);
      std::cout << fmt::format("calibration rows {}\nunlabelled rows skipped {}\n", labelled.size(),
                               contents.rows.size() - labelled.size());
    } else if (*evaluate) {
      auto in = open_in(calibration_path);
      const auto cal = read_calibration(in);
      const auto contents = read_score_file(scores_path);
      const auto eps = parse_number_list(eps_text);
      const auto p = compute_p_matrix(cal, contents.rows);
      if (!sets_path.empty()) {
        auto out = open_out(sets_path);
        write_prediction_sets(p, contents.rows, contents.vocab, eps, out);
      }
      std::vector<ScoredExample> labelled;
      for (const auto& r : contents.rows)
        if (r.has_label()) labelled.push_back(r);
      if (!labelled.empty()) {
        const auto lp = compute_p_matrix(cal, labelled);
        std::vector<std::uint32_t> truths, forced;
        for (const auto& r : labelled) {
          truths.push_back(r.true_label_index);
          forced.push_back(forced_prediction(std::span<const float>(r.scores)));
        }
        const auto m = evaluate_metrics(lp, forced, truths, eps);
        std::string csv = "epsilon,ca,cred_inverted,cred_conventional,op,of,coverage,pis,acds,n_eps\n";
        for (const auto& st : m.per_epsilon)
          csv += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{},{:.6f}\n", st.epsilon, m.ca,
                             m.cred.inverted, m.cred.conventional, m.op, m.of, st.coverage, st.pis,
                             st.acds ? fmt::format("{:.6f}", *st.acds) : std::string("NA"), st.n_eps);
        if (metrics_path.empty()) std::cout << csv;
        else open_out(metrics_path) << csv;
      }
    } else if (*experiment) {
      config.task = parse_task(task_name);
      config.scorer = parse_scorer(scorer_name);
      if (!exp_eps.empty()) config.epsilons = parse_number_list(exp_eps);
      config.output_dir = output_dir;
      const auto summary = run_experiment(config);
      for (const auto& f : summary.failures) std::cerr << "warning: " << f << '\n';
      std::cout << fmt::format("repetitions succeeded {}\noutput {}\n", summary.succeeded, output_dir);
      if (summary.succeeded == 0) {
        std::cerr << "error: every repetition failed\n";
        return 1;
      }
    } else if (*synthetic) {
      const auto eps = parse_number_list(syn_eps);
      const auto report = run_synthetic_validity(syn, eps, n_seeds);
      std::cout << "epsilon,nominal,coverage,std_error,n\n";
      for (const auto& r : report.rows)
        std::cout << fmt::format("{},{:.6f},{:.6f},{:.6f},{}\n", r.epsilon, 1.0 - r.epsilon, r.coverage, r.std_error,
                                 r.n);
      std::cerr << fmt::format("op {:.6f}\n", report.op);
    } else if (*fill) {
      if (!text_file.empty()) {
        auto in = open_in(text_file);
        std::stringstream buf;
        buf << in.rdbuf();
        text = buf.str();
      }
      const auto corpus = load_tagged_corpus(corpus_path);
      const auto split = split_corpus(corpus, fill_split);
      const auto infiller = NGramInfiller::fit(corpus, split.train, {}, k, vocab_cap);
      const auto scored = score_mlm(corpus, infiller, mask_sentences(corpus, split.cal, cap, derive_seed(fill_split.seed, 1)));
      std::vector<ScoredExample> labelled;
      for (const auto& r : scored.rows)
        if (r.has_label()) labelled.push_back(r);
      const auto cal = calibrate(labelled);
      const auto gaps = fill_transcript(text, infiller, cal, epsilon);
      for (std::size_t g = 0; g < gaps.size(); ++g) {
        std::cout << g << '\t' << gaps[g].position << '\t';
        for (std::size_t i = 0; i < gaps[g].labels.size(); ++i) std::cout << (i ? "," : "") << gaps[g].labels[i];
        std::cout << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
