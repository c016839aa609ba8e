// otmeta: dataset generation, meta-training, evaluation, analyses, reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "otmeta/harness.hpp"

namespace fs = std::filesystem;
using namespace otmeta;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  std::vector<std::string> overrides;  // key=value
};

ExperimentConfig resolve(const Globals& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(g.config);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidInput("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed_given) cfg.seed = g.seed;
  if (!g.out.empty()) cfg.out = g.out;
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ParameterVector random_init(const ExperimentConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, 0));
  return init_params(cfg.meta.model, rng);
}

/// The init named by cfg.init plus its label in reports.
std::pair<ParameterVector, std::string> load_init(const ExperimentConfig& cfg, const std::string& label) {
  if (cfg.init == "random") return {random_init(cfg), label.empty() ? "random" : label};
  Checkpoint ck = load_checkpoint(cfg.init);
  if (!(ck.config == cfg.meta.model))
    throw InvalidInput("checkpoint " + cfg.init + " was trained with a different model configuration");
  return {std::move(ck.params), label.empty() ? "meta" : label};
}

void write_report(const EvalReport& report, const fs::path& stem) {
  write_text(stem.string() + ".results.csv", report.results_csv());
  write_text(stem.string() + ".summary.csv", report.summary_csv());
}

int cmd_gen(const ExperimentConfig& cfg) {
  const Condition cond = Condition::parse(cfg.condition);
  fs::create_directories(cfg.out);
  DatasetOptions opts = cfg.meta.data;
  opts.n_train = cfg.meta.shots;
  for (std::size_t i = 0; i < cfg.gen_languages; ++i) {
    Rng rng(derive_seed(cfg.seed, i));
    const Dataset d = sample_dataset(rng, cond, opts);
    write_dataset(d, cfg.out);
    std::cout << d.language.id << " " << d.condition.tag() << " train=" << d.train.size() << " test=" << d.test.size()
              << "\n";
  }
  return 0;
}

int cmd_meta_train(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out);
  write_text(fs::path(cfg.out) / "config.conf", cfg.to_string());
  MetaHooks hooks;
  hooks.on_eval = [](const MetaState&, const EvalRecord& r) {
    std::fprintf(stderr, "languages %lld holdout %.4f%s\n", static_cast<long long>(r.languages_seen), r.holdout_accuracy,
                 r.improved ? " *" : "");
  };
  const MetaTrainResult res = meta_train(cfg.meta, cfg.seed, hooks);
  save_checkpoint({cfg.meta.model, cfg.seed, res.best_m0, "meta-train"}, (fs::path(cfg.out) / "m0.ckpt").string());
  write_log_csv(res.log, (fs::path(cfg.out) / "meta_log.csv").string());
  std::printf("best holdout accuracy %.6f after %lld languages%s\n", res.best_score,
              static_cast<long long>(res.final_state.languages_seen), res.stopped_early ? " (early stop)" : "");
  return 0;
}

int cmd_eval(const ExperimentConfig& cfg, const std::string& label) {
  const auto [init, name] = load_init(cfg, label);
  const EvalReport report = eval_100shot(init, name, cfg.meta.model, cfg.analysis, cfg.seed);
  write_report(report, fs::path(cfg.out) / ("eval-100shot-" + name));
  const auto row = report.row("eval-100shot", name, "standard", "accuracy");
  std::printf("%s mean 100-shot accuracy %.6f over %zu languages\n", name.c_str(), row ? row->mean : 0.0,
              row ? row->n_languages : std::size_t{0});
  return 0;
}

const std::vector<std::string>& analysis_modes() {
  static const std::vector<std::string> modes = {"constraint-set",  "consistent-ranking", "inconsistent-set",
                                                 "pos-new-phonemes", "pos-length-5",       "pos-length-6",
                                                 "pos-universals"};
  return modes;
}

int cmd_analyze(const ExperimentConfig& cfg, const std::string& mode, const std::string& label) {
  const auto [init, name] = load_init(cfg, label);
  const auto& m = cfg.meta.model;
  EvalReport report;
  if (mode == "constraint-set") report = constraint_set_analysis(init, name, m, cfg.analysis, cfg.seed);
  else if (mode == "consistent-ranking") report = consistent_ranking_analysis(init, name, m, cfg.analysis, cfg.seed);
  else if (mode == "inconsistent-set") report = inconsistent_set_analysis(init, name, m, cfg.analysis, cfg.seed);
  else if (mode.rfind("pos-", 0) == 0) report = pos_analysis(init, name, pos_kind_from_name(mode.substr(4)), m, cfg.analysis, cfg.seed);
  else throw InvalidInput("unknown analysis mode '" + mode + "'");
  write_report(report, fs::path(cfg.out) / (mode + "-" + name));
  std::cout << report.summary_csv() << report.ratios_csv();
  return 0;
}

int cmd_report(const ExperimentConfig& cfg, const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw InvalidInput("report: no results CSVs given");
  EvalReport merged;
  for (const auto& path : inputs) merged.merge(EvalReport::from_results_csv(read_text(path)));
  const fs::path out(cfg.out);
  write_text(out / "report.results.csv", merged.results_csv());
  write_text(out / "report.summary.csv", merged.summary_csv());
  write_text(out / "report.ratios.csv", merged.ratios_csv());
  std::map<std::pair<std::string, std::string>, std::vector<SummaryRow>> charts;
  for (const auto& r : merged.rows()) charts[{r.analysis, r.metric}].push_back(r);
  for (const auto& [key, rows] : charts) {
    const auto& [analysis, metric] = key;
    const std::string y = metric == "examples" ? "examples to 95% accuracy" : metric;
    write_text(out / (analysis + "-" + metric + ".svg"), bar_chart_svg(rows, analysis, y));
  }
  std::cout << merged.summary_csv() << merged.ratios_csv();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"otmeta: meta-learning syllable-structure biases"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "key = value experiment config");
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) {
        g.seed = s;
        g.seed_given = true;
      }, "seed (overrides the config)");
  app.add_option("--out", g.out, "output directory (overrides the config)");
  app.add_option("--set", g.overrides, "config override key=value (repeatable)");

  std::size_t n = 0;
  std::string condition;
  auto* gen = app.add_subcommand("gen", "emit language datasets");
  gen->add_option("--n", n, "number of languages");
  gen->add_option("--condition", condition, "condition tag, e.g. standard, length-holdout(5)");

  auto* train = app.add_subcommand("meta-train", "meta-train an initialisation");

  std::string label;
  auto* eval = app.add_subcommand("eval", "100-shot accuracy over fresh languages");
  std::string init;
  eval->add_option("--init", init, "checkpoint path or 'random'");
  eval->add_option("--label", label, "init label in reports");

  std::string mode;
  auto* analyze = app.add_subcommand("analyze", "run an analysis");
  analyze->add_option("mode", mode, "analysis mode")->required()->check(CLI::IsMember(analysis_modes()));
  analyze->add_option("--init", init, "checkpoint path or 'random'");
  analyze->add_option("--label", label, "init label in reports");

  std::vector<std::string> inputs;
  auto* report = app.add_subcommand("report", "merge results CSVs and draw charts");
  report->add_option("inputs", inputs, "results CSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    ExperimentConfig cfg = resolve(g);
    if (!init.empty()) cfg.init = init;
    if (*gen) {
      if (n > 0) cfg.gen_languages = n;
      if (!condition.empty()) cfg.condition = condition;
      return cmd_gen(cfg);
    }
    if (*train) return cmd_meta_train(cfg);
    if (*eval) return cmd_eval(cfg, label);
    if (*analyze) return cmd_analyze(cfg, mode, label);
    if (*report) return cmd_report(cfg, inputs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
