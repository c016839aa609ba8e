#include "otmeta/metalearn.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace otmeta {

ParameterVector Objective::hvp(const ParameterVector&, const ParameterVector&) const {
  throw ad::CapabilityError("objective does not provide exact Hessian-vector products");
}

ParameterVector Objective::fd_hvp(const ParameterVector& p, const ParameterVector& direction, double h) const {
  ParameterVector plus = p, minus = p;
  plus.axpy(h, direction);
  minus.axpy(-h, direction);
  ParameterVector out = value_and_gradient(plus).gradient;
  out -= value_and_gradient(minus).gradient;
  out *= 1.0 / (2.0 * h);
  return out;
}

ad::ValueAndGradient SeqObjective::value_and_gradient(const ParameterVector& p) const {
  return loss_and_gradient(examples_, p, cfg_);
}

ParameterVector SeqObjective::hvp(const ParameterVector& p, const ParameterVector& direction) const {
  return loss_gradient_and_hvp(examples_, p, direction, cfg_).hvp;
}

LanguageTask::LanguageTask(const std::vector<Example>& train, const std::vector<Example>& test, const ModelConfig& cfg,
                           std::size_t batch_size) {
  if (batch_size == 0) throw InvalidInput("batch size must be positive");
  for (std::size_t start = 0; start < train.size(); start += batch_size) {
    const auto end = std::min(train.size(), start + batch_size);
    batches_.push_back(std::make_unique<SeqObjective>(
        std::vector<Example>(train.begin() + static_cast<std::ptrdiff_t>(start), train.begin() + static_cast<std::ptrdiff_t>(end)),
        cfg));
  }
  test_ = std::make_unique<SeqObjective>(test, cfg);
}

ParameterVector inner_adapt(const ParameterVector& init, const Task& task, const InnerConfig& inner,
                            std::vector<ParameterVector>* trajectory) {
  ParameterVector theta = init;
  if (trajectory) trajectory->clear();
  const std::size_t nb = task.num_train_batches();
  if (nb == 0) return theta;
  for (int j = 0; j < inner.steps; ++j) {
    if (trajectory) trajectory->push_back(theta);
    const auto g = task.train_batch(static_cast<std::size_t>(j) % nb).value_and_gradient(theta).gradient;
    theta.axpy(-inner.lr, g);
  }
  return theta;
}

OuterResult outer_gradient(const ParameterVector& init, const Task& task, const InnerConfig& inner, OuterGradient mode,
                           bool fd_fallback) {
  const bool exact = mode == OuterGradient::Exact;
  if (exact && !fd_fallback) {
    for (std::size_t j = 0; j < task.num_train_batches(); ++j)
      if (!task.train_batch(j).has_exact_hvp())
        throw ad::CapabilityError("exact meta-gradient requested but a train objective lacks exact Hessian-vector products");
  }
  std::vector<ParameterVector> trajectory;
  const ParameterVector adapted = inner_adapt(init, task, inner, exact ? &trajectory : nullptr);
  auto test = task.test_objective().value_and_gradient(adapted);
  OuterResult out{std::move(test.gradient), test.value};
  if (!exact) return out;
  const std::size_t nb = task.num_train_batches();
  for (std::size_t j = trajectory.size(); j-- > 0;) {
    const Objective& obj = task.train_batch(j % nb);
    const ParameterVector hv = obj.has_exact_hvp() ? obj.hvp(trajectory[j], out.gradient) : obj.fd_hvp(trajectory[j], out.gradient);
    out.gradient.axpy(-inner.lr, hv);
  }
  return out;
}

MetaState MetaState::start(ParameterVector init, double outer_lr) {
  MetaState s;
  s.adam = AdamState::for_params(init, outer_lr);
  s.best_m0 = init;
  s.m0 = std::move(init);
  return s;
}

double meta_step(MetaState& state, const Task& task, const InnerConfig& inner, OuterGradient mode, bool fd_fallback) {
  const OuterResult r = outer_gradient(state.m0, task, inner, mode, fd_fallback);
  state.m0 = adam_step(state.m0, r.gradient, state.adam);
  ++state.languages_seen;
  return r.test_loss;
}

double k_shot_eval(const ParameterVector& init, const Dataset& dataset, std::size_t k, const InnerConfig& inner,
                   const ModelConfig& cfg) {
  if (k == 0) return exact_match_accuracy(dataset.test, init, cfg);
  if (k > dataset.train.size())
    throw InvalidInput("k_shot_eval: k = " + std::to_string(k) + " exceeds the " + std::to_string(dataset.train.size()) +
                       " available train examples");
  const std::vector<Example> shots(dataset.train.begin(), dataset.train.begin() + static_cast<std::ptrdiff_t>(k));
  const LanguageTask task(shots, {}, cfg, inner.batch_size);
  return exact_match_accuracy(dataset.test, inner_adapt(init, task, inner), cfg);
}

bool record_evaluation(MetaState& state, double score, int patience) {
  if (score > state.best_score) {
    state.best_score = score;
    state.best_m0 = state.m0;
    state.evals_without_improvement = 0;
    return false;
  }
  ++state.evals_without_improvement;
  return state.evals_without_improvement >= patience;
}

namespace {

Dataset language_dataset(std::uint64_t stream_seed, std::int64_t index, const MetaConfig& cfg) {
  Rng rng(derive_seed(stream_seed, static_cast<std::uint64_t>(index)));
  DatasetOptions opts = cfg.data;
  opts.n_train = cfg.shots;
  return sample_dataset(rng, Condition::standard(), opts);
}

}  // namespace

std::vector<Dataset> holdout_datasets(const MetaConfig& cfg, std::uint64_t seed) {
  std::vector<Dataset> out;
  const std::uint64_t stream = derive_seed(seed, 2);
  for (std::int64_t i = 0; i < cfg.n_holdout_languages; ++i) out.push_back(language_dataset(stream, i, cfg));
  return out;
}

double mean_k_shot_accuracy(const ParameterVector& init, const std::vector<Dataset>& datasets, const MetaConfig& cfg) {
  if (datasets.empty()) return 0.0;
  double total = 0.0;
  for (const auto& d : datasets) total += k_shot_eval(init, d, std::min(cfg.shots, d.train.size()), cfg.inner, cfg.model);
  return total / static_cast<double>(datasets.size());
}

MetaTrainResult meta_train(const MetaConfig& cfg, std::uint64_t seed, const MetaHooks& hooks) {
  Rng init_rng(derive_seed(seed, 0));
  MetaState state = MetaState::start(init_params(cfg.model, init_rng), cfg.outer_lr);
  const auto holdout = holdout_datasets(cfg, seed);
  const std::uint64_t train_stream = derive_seed(seed, 1);
  MetaTrainResult result;

  std::vector<LanguageTask> tasks;
  tasks.reserve(static_cast<std::size_t>(std::max<std::int64_t>(cfg.n_train_languages, 0)));
  for (std::int64_t i = 0; i < cfg.n_train_languages; ++i) {
    const Dataset d = language_dataset(train_stream, i, cfg);
    tasks.emplace_back(d.train, d.test, cfg.model, cfg.inner.batch_size);
  }
  const std::int64_t total = cfg.n_train_languages * std::max(cfg.max_epochs, 0);
  for (std::int64_t i = 0; i < total; ++i) {
    meta_step(state, tasks[static_cast<std::size_t>(i % cfg.n_train_languages)], cfg.inner, cfg.outer, cfg.fd_fallback);
    if (cfg.eval_every > 0 && state.languages_seen % cfg.eval_every == 0) {
      const double score = mean_k_shot_accuracy(state.m0, holdout, cfg);
      const double previous_best = state.best_score;
      const bool stop = record_evaluation(state, score, cfg.patience);
      const EvalRecord rec{state.languages_seen, score, score > previous_best};
      result.log.push_back(rec);
      if (hooks.on_eval) hooks.on_eval(state, rec);
      if (stop) {
        result.stopped_early = true;
        break;
      }
    }
  }
  if (result.log.empty()) {
    // no evaluation happened; fall back to the final parameters
    state.best_m0 = state.m0;
    state.best_score = mean_k_shot_accuracy(state.m0, holdout, cfg);
  }
  result.best_m0 = state.best_m0;
  result.best_score = state.best_score;
  result.final_state = std::move(state);
  return result;
}

std::string log_csv(const std::vector<EvalRecord>& log) {
  std::ostringstream os;
  os << "languages_seen,holdout_accuracy\n";
  char buf[64];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g\n", static_cast<long long>(r.languages_seen), r.holdout_accuracy);
    os << buf;
  }
  return os.str();
}

void write_log_csv(const std::vector<EvalRecord>& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write log " + path);
  out << log_csv(log);
}

}  // namespace otmeta
