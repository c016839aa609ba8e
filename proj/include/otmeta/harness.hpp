#pragma once

// Analyses of a meta-learned initialisation, experiment configuration, and
// report emission.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "otmeta/langspace.hpp"
#include "otmeta/metalearn.hpp"
#include "otmeta/params.hpp"
#include "otmeta/seq2seq.hpp"

namespace otmeta {

// ---- ease of learning -------------------------------------------------------

struct EaseConfig {
  std::size_t step = 100;          // examples are tried in multiples of this
  std::size_t cap = 1600;          // largest training-set size attempted
  std::size_t n_test = 100;
  double criterion = 0.95;         // test accuracy that counts as learned
  int epoch_cap = 5000;
  int plateau_window = 50;         // epochs
  double plateau_tol = 1e-4;       // relative improvement over the window
  int check_every = 0;             // epochs between early accuracy checks; 0 disables
  double lr = 1.0;                 // SGD
  std::size_t batch_size = 100;
};

struct EaseAttempt {
  std::size_t examples = 0;
  int epochs = 0;
  double final_train_loss = 0.0;
  double test_accuracy = 0.0;
};

struct EaseResult {
  std::size_t examples = 0;  // first passing size, or the cap when censored
  bool censored = false;
  std::vector<EaseAttempt> attempts;
};

/// Trains `init` with minibatch SGD on `examples` until the train loss
/// plateaus or the epoch cap is reached. With check_every > 0 training also
/// stops once accuracy on `test` meets the criterion. Returns the trained
/// parameters and fills `attempt`.
ParameterVector train_to_convergence(const ParameterVector& init, const std::vector<Example>& examples,
                                     const std::vector<Example>& test, const ModelConfig& model, const EaseConfig& cfg,
                                     std::uint64_t seed, EaseAttempt& attempt);

/// Smallest multiple of cfg.step (up to cfg.cap) of fresh examples from
/// `lang` with which training from `init` reaches the criterion. Train sets
/// are nested prefixes of one pool; one test set is shared by all sizes.
EaseResult ease_of_learning(const ParameterVector& init, const Language& lang, const Condition& condition,
                            const ModelConfig& model, const EaseConfig& cfg, std::uint64_t seed);

// ---- reports -------------------------------------------------------------------

/// One language's outcome in one analysis cell.
struct LanguageResult {
  std::string analysis;   // constraint-set, consistent-ranking, pos-length, ...
  std::string init;       // meta, random, ...
  std::string condition;  // cell label
  std::string language;   // language id
  std::string metric;     // examples, seen-accuracy, heldout-accuracy
  double value = 0.0;
  bool censored = false;

  friend bool operator==(const LanguageResult&, const LanguageResult&) = default;
};

struct SummaryRow {
  std::string analysis, init, condition, metric;
  std::size_t n_languages = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t censored = 0;
};

struct Ratio {
  std::string analysis, init, name;
  double numerator = 0.0;    // mean of the harder cell(s)
  double denominator = 0.0;  // mean of the reference cell(s)
  double value = 0.0;
};

/// Per-language results; summaries and ratios are always recomputed from
/// them. Result order is canonical (sorted), so merges are deterministic.
class EvalReport {
 public:
  EvalReport() = default;
  explicit EvalReport(std::vector<LanguageResult> results);

  const std::vector<LanguageResult>& results() const { return results_; }
  void add(LanguageResult r);
  void merge(const EvalReport& other);

  std::vector<SummaryRow> rows() const;
  std::optional<SummaryRow> row(const std::string& analysis, const std::string& init, const std::string& condition,
                                const std::string& metric) const;
  /// Ratios for the ease analyses, grouped by init:
  ///   constraint-set            mean(alternate sets) / mean(Onset/NoCoda)
  ///   constraint-set-partial    mean(NoOnset/Coda) / mean(NoOnset/NoCoda, Onset/Coda)
  ///   consistent-ranking        mean(inconsistent-ranking) / mean(consistent)
  ///   inconsistent-set          mean(inconsistent-set) / mean(consistent)
  std::vector<Ratio> ratios() const;
  std::optional<Ratio> ratio(const std::string& name, const std::string& init) const;

  std::string results_csv() const;
  std::string summary_csv() const;
  std::string ratios_csv() const;
  static EvalReport from_results_csv(const std::string& text);

  friend bool operator==(const EvalReport&, const EvalReport&) = default;

 private:
  std::vector<LanguageResult> results_;
};

// ---- analyses -----------------------------------------------------------------

struct AnalysisConfig {
  std::size_t n_languages = 20;  // per cell
  EaseConfig ease;
  InnerConfig inner;             // adaptation used by the k-shot analyses
  std::size_t shots = 100;
  DatasetOptions data;
};

/// Ease of learning over the four constraint sets for one init.
EvalReport constraint_set_analysis(const ParameterVector& init, const std::string& init_name, const ModelConfig& model,
                                   const AnalysisConfig& cfg, std::uint64_t seed);
/// Consistent vs inconsistent-ranking languages.
EvalReport consistent_ranking_analysis(const ParameterVector& init, const std::string& init_name,
                                       const ModelConfig& model, const AnalysisConfig& cfg, std::uint64_t seed);
/// Consistent vs inconsistent-set languages.
EvalReport inconsistent_set_analysis(const ParameterVector& init, const std::string& init_name, const ModelConfig& model,
                                     const AnalysisConfig& cfg, std::uint64_t seed);

enum class PosKind { NewPhonemes, Length5, Length6, Universals };
std::string pos_kind_name(PosKind k);  // new-phonemes, length-5, length-6, universals
PosKind pos_kind_from_name(const std::string& name);

/// k-shot adaptation on the condition's train split; reports accuracy on the
/// adaptation examples (seen category) and on the test split (held-out
/// category). Universals cycle through enumerate_universals().
EvalReport pos_analysis(const ParameterVector& init, const std::string& init_name, PosKind kind,
                        const ModelConfig& model, const AnalysisConfig& cfg, std::uint64_t seed);

/// Plain 100-shot accuracy over fresh standard languages.
EvalReport eval_100shot(const ParameterVector& init, const std::string& init_name, const ModelConfig& model,
                        const AnalysisConfig& cfg, std::uint64_t seed);

// ---- configuration ------------------------------------------------------------

/// key = value lines; '#' starts a comment. See configs/desk.conf for the
/// full schema.
struct ExperimentConfig {
  std::string mode = "meta-train";
  std::uint64_t seed = 1;
  std::string out = "runs";
  std::string init = "random";  // checkpoint path, or "random"
  MetaConfig meta;
  AnalysisConfig analysis;
  std::string condition = "standard";  // for gen
  std::size_t gen_languages = 3;

  std::map<std::string, std::string> to_map() const;
  std::string to_string() const;
  /// Applies one key; throws InvalidInput on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);
};

// ---- charts -----------------------------------------------------------------------

/// Grouped bar chart: one group per condition, one bar per init.
std::string bar_chart_svg(const std::vector<SummaryRow>& rows, const std::string& title, const std::string& y_label);

}  // namespace otmeta
