#pragma once

// Episodic MAML over sampled languages.

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "otmeta/autodiff.hpp"
#include "otmeta/langspace.hpp"
#include "otmeta/params.hpp"
#include "otmeta/seq2seq.hpp"

namespace otmeta {

/// A differentiable scalar objective over a parameter vector.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual ad::ValueAndGradient value_and_gradient(const ParameterVector& p) const = 0;
  virtual bool has_exact_hvp() const { return false; }
  /// Exact Hessian-vector product; throws CapabilityError unless overridden.
  virtual ParameterVector hvp(const ParameterVector& p, const ParameterVector& direction) const;
  /// Central difference of gradients; available for every objective.
  ParameterVector fd_hvp(const ParameterVector& p, const ParameterVector& direction, double h = 1e-5) const;
};

/// Mean teacher-forced loss of the seq2seq model over a fixed set of pairs.
class SeqObjective final : public Objective {
 public:
  SeqObjective(std::vector<Example> examples, ModelConfig cfg) : examples_(std::move(examples)), cfg_(cfg) {}
  ad::ValueAndGradient value_and_gradient(const ParameterVector& p) const override;
  bool has_exact_hvp() const override { return true; }
  ParameterVector hvp(const ParameterVector& p, const ParameterVector& direction) const override;
  const std::vector<Example>& examples() const { return examples_; }

 private:
  std::vector<Example> examples_;
  ModelConfig cfg_;
};

/// One learning problem: a sequence of train minibatch objectives cycled by
/// the inner loop, and the held-out objective the outer loop minimises.
class Task {
 public:
  virtual ~Task() = default;
  virtual std::size_t num_train_batches() const = 0;
  virtual const Objective& train_batch(std::size_t j) const = 0;
  virtual const Objective& test_objective() const = 0;
};

/// Task over a language dataset; train examples are split in order into
/// minibatches of at most `batch_size`.
class LanguageTask final : public Task {
 public:
  LanguageTask(const std::vector<Example>& train, const std::vector<Example>& test, const ModelConfig& cfg,
               std::size_t batch_size = 100);
  std::size_t num_train_batches() const override { return batches_.size(); }
  const Objective& train_batch(std::size_t j) const override { return *batches_.at(j); }
  const Objective& test_objective() const override { return *test_; }

 private:
  std::vector<std::unique_ptr<SeqObjective>> batches_;
  std::unique_ptr<SeqObjective> test_;
};

struct InnerConfig {
  int steps = 1;
  double lr = 1.0;
  std::size_t batch_size = 100;
};

enum class OuterGradient { FirstOrder, Exact };

/// `steps` SGD steps from `init`, cycling minibatches. `init` is untouched.
/// With `trajectory`, the iterates theta_0 .. theta_{steps-1} are recorded.
ParameterVector inner_adapt(const ParameterVector& init, const Task& task, const InnerConfig& inner,
                            std::vector<ParameterVector>* trajectory = nullptr);

struct OuterResult {
  ParameterVector gradient;  // d test_loss(adapted) / d init
  double test_loss = 0.0;
};

/// First-order: gradient of the test loss at the adapted parameters.
/// Exact: back-propagates that gradient through every inner step,
/// v <- (I - lr H_j) v, using exact Hessian-vector products, or central
/// differences when `fd_fallback` is set. Throws ad::CapabilityError when
/// exact mode meets an objective without exact HVPs and no fallback.
OuterResult outer_gradient(const ParameterVector& init, const Task& task, const InnerConfig& inner, OuterGradient mode,
                           bool fd_fallback = false);

struct MetaState {
  ParameterVector m0;
  AdamState adam;
  double best_score = -std::numeric_limits<double>::infinity();
  ParameterVector best_m0;
  int evals_without_improvement = 0;
  std::int64_t languages_seen = 0;

  static MetaState start(ParameterVector init, double outer_lr);
};

/// One outer update: outer gradient for the episode, then Adam on m0. The
/// adapted parameters are not retained.
double meta_step(MetaState& state, const Task& task, const InnerConfig& inner, OuterGradient mode,
                 bool fd_fallback = false);

/// Adapt on the first k train examples (k = 0: no adaptation), then report
/// exact-match accuracy on the test split.
double k_shot_eval(const ParameterVector& init, const Dataset& dataset, std::size_t k, const InnerConfig& inner,
                   const ModelConfig& cfg);

struct MetaConfig {
  ModelConfig model;
  InnerConfig inner;
  OuterGradient outer = OuterGradient::FirstOrder;
  bool fd_fallback = false;
  double outer_lr = 0.001;
  std::int64_t n_train_languages = 2000;  // size of the fixed meta-training set
  int max_epochs = 1;                      // passes over that set; patience may stop earlier
  std::int64_t n_holdout_languages = 100;
  std::int64_t eval_every = 100;
  int patience = 10;
  std::size_t shots = 100;  // train examples per language
  DatasetOptions data;
};

struct EvalRecord {
  std::int64_t languages_seen = 0;
  double holdout_accuracy = 0.0;
  bool improved = false;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

struct MetaTrainResult {
  ParameterVector best_m0;
  double best_score = 0.0;
  std::vector<EvalRecord> log;
  bool stopped_early = false;
  MetaState final_state;
};

/// Early-stopping bookkeeping shared by meta_train and its tests. Returns
/// true when training should stop.
bool record_evaluation(MetaState& state, double score, int patience);

struct MetaHooks {
  std::function<void(const MetaState&, const EvalRecord&)> on_eval;
};

/// Streams: training languages from derive_seed(seed, 1), held-out
/// languages from derive_seed(seed, 2), init from derive_seed(seed, 0).
/// Languages are visited in index order, epoch after epoch.
MetaTrainResult meta_train(const MetaConfig& cfg, std::uint64_t seed, const MetaHooks& hooks = {});

/// The held-out evaluation datasets meta_train uses for a seed.
std::vector<Dataset> holdout_datasets(const MetaConfig& cfg, std::uint64_t seed);
double mean_k_shot_accuracy(const ParameterVector& init, const std::vector<Dataset>& datasets, const MetaConfig& cfg);

void write_log_csv(const std::vector<EvalRecord>& log, const std::string& path);
std::string log_csv(const std::vector<EvalRecord>& log);

}  // namespace otmeta
