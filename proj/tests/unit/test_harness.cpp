#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "otmeta/harness.hpp"

using namespace otmeta;
namespace fs = std::filesystem;

namespace {

ModelConfig tiny_model() {
  ModelConfig cfg;
  cfg.embed_dim = 3;
  cfg.hidden_dim = 4;
  return cfg;
}

EaseConfig quick_ease() {
  EaseConfig e;
  e.step = 10;
  e.cap = 30;
  e.n_test = 10;
  e.epoch_cap = 3;
  e.batch_size = 10;
  return e;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(OTMETA_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("otmeta_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, RoundTrip) {
  ExperimentConfig cfg;
  cfg.set("seed", "17");
  cfg.set("meta.outer", "exact");
  cfg.set("meta.outer_lr", "0.1");
  cfg.set("model.hidden_dim", "12");
  cfg.set("ease.plateau_tol", "3e-5");
  cfg.set("inner.steps", "3");
  const std::string text = cfg.to_string();
  const ExperimentConfig back = ExperimentConfig::parse("# comment\n\n" + text);
  EXPECT_EQ(back.to_string(), text);
  EXPECT_EQ(back.seed, 17u);
  EXPECT_EQ(back.meta.outer, OuterGradient::Exact);
  EXPECT_EQ(back.meta.outer_lr, 0.1);
  EXPECT_EQ(back.meta.model.hidden_dim, 12);
  EXPECT_EQ(back.analysis.inner.steps, 3);
  EXPECT_EQ(back.analysis.ease.plateau_tol, 3e-5);
}

TEST(Config, RejectsBadInput) {
  ExperimentConfig cfg;
  EXPECT_THROW(cfg.set("no.such.key", "1"), InvalidInput);
  EXPECT_THROW(cfg.set("seed", "abc"), InvalidInput);
  EXPECT_THROW(cfg.set("meta.outer", "third-order"), InvalidInput);
  EXPECT_THROW(ExperimentConfig::parse("seed 3\n"), InvalidInput);
}

TEST(Report, SummariesAndRatios) {
  EvalReport r;
  auto add = [&](const std::string& cond, const std::string& lang, double v, bool censored = false) {
    r.add({"constraint-set", "meta", cond, lang, "examples", v, censored});
  };
  add("Onset/NoCoda", "a", 100);
  add("Onset/NoCoda", "b", 300);
  add("NoOnset/NoCoda", "c", 400);
  add("Onset/Coda", "d", 600);
  add("NoOnset/Coda", "e", 1500, true);
  const auto row = r.row("constraint-set", "meta", "Onset/NoCoda", "examples");
  ASSERT_TRUE(row);
  EXPECT_EQ(row->n_languages, 2u);
  EXPECT_DOUBLE_EQ(row->mean, 200.0);
  EXPECT_DOUBLE_EQ(row->stddev, 100.0);
  const auto cs = r.ratio("constraint-set", "meta");
  ASSERT_TRUE(cs);
  EXPECT_DOUBLE_EQ(cs->numerator, (400.0 + 600.0 + 1500.0) / 3);
  EXPECT_DOUBLE_EQ(cs->value, cs->numerator / 200.0);
  const auto partial = r.ratio("constraint-set-partial", "meta");
  ASSERT_TRUE(partial);
  EXPECT_DOUBLE_EQ(partial->value, 1500.0 / 500.0);
  EXPECT_EQ(r.row("constraint-set", "meta", "NoOnset/Coda", "examples")->censored, 1u);
  EXPECT_FALSE(r.ratio("consistent-ranking", "meta"));
}

TEST(Report, CsvRoundTripAndMerge) {
  EvalReport a, b;
  a.add({"pos-length-5", "meta", "length-5", "L1", "heldout-accuracy", 0.1 + 0.2, false});
  b.add({"pos-length-5", "random", "length-5", "L1", "heldout-accuracy", 1.0 / 3.0, false});
  b.add({"eval-100shot", "meta", "standard", "L2", "accuracy", 0.5, true});
  EvalReport m = a;
  m.merge(b);
  EvalReport n = b;
  n.merge(a);
  EXPECT_EQ(m, n);
  EXPECT_EQ(m.results().size(), 3u);
  EXPECT_EQ(EvalReport::from_results_csv(m.results_csv()), m);
  EXPECT_FALSE(m.summary_csv().empty());
  EXPECT_THROW(EvalReport::from_results_csv("x,y\n1,2\n"), InvalidInput);
  EXPECT_THROW(m.add({"a", "b", "c", "L,3", "accuracy", 0.0, false}), InvalidInput);
}

TEST(Ease, CriterionBoundsAndCensoring) {
  const ModelConfig model = tiny_model();
  Rng rng(3);
  const ParameterVector init = init_params(model, rng);
  Rng lrng(4);
  const Language lang = sample_language(lrng);
  EaseConfig cfg = quick_ease();
  cfg.criterion = 0.0;
  const auto easy = ease_of_learning(init, lang, Condition::standard(), model, cfg, 9);
  EXPECT_EQ(easy.examples, 10u);
  EXPECT_FALSE(easy.censored);
  EXPECT_EQ(easy.attempts.size(), 1u);
  cfg.criterion = 1.01;
  const auto hard = ease_of_learning(init, lang, Condition::standard(), model, cfg, 9);
  EXPECT_EQ(hard.examples, 30u);
  EXPECT_TRUE(hard.censored);
  ASSERT_EQ(hard.attempts.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(hard.attempts[i].examples, 10 * (i + 1));
    EXPECT_LE(hard.attempts[i].epochs, cfg.epoch_cap);
  }
  const auto again = ease_of_learning(init, lang, Condition::standard(), model, cfg, 9);
  EXPECT_EQ(again.attempts.back().final_train_loss, hard.attempts.back().final_train_loss);
  cfg.step = 0;
  EXPECT_THROW(ease_of_learning(init, lang, Condition::standard(), model, cfg, 9), InvalidInput);
}

TEST(Ease, PlateauStopsTraining) {
  const ModelConfig model = tiny_model();
  const ParameterVector init = zero_params(model);
  EaseConfig cfg = quick_ease();
  cfg.epoch_cap = 1000;
  cfg.plateau_window = 2;
  cfg.plateau_tol = 1e9;  // any window counts as a plateau
  cfg.lr = 0.0;
  EaseAttempt attempt;
  const std::vector<Example> ex = {{"ka", ".ka."}};
  train_to_convergence(init, ex, ex, model, cfg, 1, attempt);
  EXPECT_EQ(attempt.epochs, 3);
}

TEST(Analyses, SmallCellsProduceResults) {
  const ModelConfig model = tiny_model();
  Rng rng(5);
  const ParameterVector init = init_params(model, rng);
  AnalysisConfig cfg;
  cfg.n_languages = 2;
  cfg.shots = 20;
  cfg.data.n_test = 10;
  cfg.ease = quick_ease();
  cfg.ease.criterion = 0.0;
  const auto cs = constraint_set_analysis(init, "random", model, cfg, 1);
  EXPECT_EQ(cs.results().size(), 8u);
  EXPECT_TRUE(cs.ratio("constraint-set", "random"));
  const auto cr = consistent_ranking_analysis(init, "random", model, cfg, 1);
  EXPECT_EQ(cr.results().size(), 4u);
  EXPECT_DOUBLE_EQ(cr.ratio("consistent-ranking", "random")->value, 1.0);
  for (auto kind : {PosKind::NewPhonemes, PosKind::Length5, PosKind::Length6, PosKind::Universals}) {
    EXPECT_EQ(pos_kind_from_name(pos_kind_name(kind)), kind);
    const auto r = pos_analysis(init, "random", kind, model, cfg, 1);
    EXPECT_EQ(r.results().size(), 4u) << pos_kind_name(kind);
    for (const auto& x : r.results()) {
      EXPECT_GE(x.value, 0.0);
      EXPECT_LE(x.value, 1.0);
    }
    EXPECT_EQ(r, pos_analysis(init, "random", kind, model, cfg, 1));
  }
  const std::string svg = bar_chart_svg(cs.rows(), "constraint-set", "examples");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("Onset/NoCoda"), std::string::npos);
}

TEST(Cli, GenWritesDatasets) {
  const fs::path out = scratch("gen");
  ASSERT_EQ(run_cli("--seed 1 --out " + out.string() + " gen --n 3"), 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(out)) files += e.path().extension() == ".jsonl";
  EXPECT_EQ(files, 3u);
  const fs::path again = scratch("gen2");
  ASSERT_EQ(run_cli("--seed 1 --out " + again.string() + " gen --n 3"), 0);
  for (const auto& e : fs::directory_iterator(out)) EXPECT_EQ(slurp(e.path()), slurp(again / e.path().filename()));
}

TEST(Cli, BadInvocationsFail) {
  EXPECT_NE(run_cli("frobnicate"), 0);
  EXPECT_NE(run_cli(""), 0);
  EXPECT_NE(run_cli("--set no.such=1 gen"), 0);
  EXPECT_NE(run_cli("analyze bogus"), 0);
  EXPECT_NE(run_cli("--set init=/nonexistent.ckpt eval"), 0);
}

TEST(Cli, TinyMetaTrainThenAnalyze) {
  const fs::path out = scratch("train");
  const std::string tiny =
      "--set model.embed_dim=3 --set model.hidden_dim=4 --set meta.n_train_languages=4 --set meta.eval_every=2 "
      "--set meta.n_holdout_languages=1 --set meta.shots=10 --set data.n_test=5 --set analysis.n_languages=1 "
      "--out " + out.string() + " ";
  ASSERT_EQ(run_cli(tiny + "meta-train"), 0);
  EXPECT_TRUE(fs::exists(out / "m0.ckpt"));
  EXPECT_TRUE(fs::exists(out / "meta_log.csv"));
  const Checkpoint ck = load_checkpoint((out / "m0.ckpt").string());
  EXPECT_EQ(ck.config.hidden_dim, 4);
  ASSERT_EQ(run_cli(tiny + "--set init=" + (out / "m0.ckpt").string() + " analyze pos-length-5"), 0);
  ASSERT_EQ(run_cli(tiny + "analyze pos-length-5"), 0);
  EXPECT_TRUE(fs::exists(out / "pos-length-5-meta.results.csv"));
  EXPECT_TRUE(fs::exists(out / "pos-length-5-random.results.csv"));
  ASSERT_EQ(run_cli(tiny + "report " + (out / "pos-length-5-meta.results.csv").string() + " " +
                    (out / "pos-length-5-random.results.csv").string()),
            0);
  EXPECT_TRUE(fs::exists(out / "report.summary.csv"));
  EXPECT_TRUE(fs::exists(out / "pos-length-5-heldout-accuracy.svg"));
  // a checkpoint with a different model shape is refused
  EXPECT_NE(run_cli("--set init=" + (out / "m0.ckpt").string() + " --out " + out.string() + " eval"), 0);
}
