#include "otmeta/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

namespace otmeta {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::uint64_t cell_seed(std::uint64_t seed, const std::string& analysis, const std::string& condition) {
  return derive_seed(seed, hash_string(analysis + "/" + condition));
}

}  // namespace

// ---- ease of learning -------------------------------------------------------

ParameterVector train_to_convergence(const ParameterVector& init, const std::vector<Example>& examples,
                                     const std::vector<Example>& test, const ModelConfig& model, const EaseConfig& cfg,
                                     std::uint64_t seed, EaseAttempt& attempt) {
  if (cfg.batch_size == 0) throw InvalidInput("ease batch size must be positive");
  ParameterVector theta = init;
  attempt = EaseAttempt{examples.size(), 0, 0.0, 0.0};
  if (examples.empty()) return theta;
  Rng rng(seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> losses;
  std::vector<Example> batch;
  for (int epoch = 1; epoch <= cfg.epoch_cap; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
      const auto g = loss_and_gradient(batch, theta, model);
      total += g.value * static_cast<double>(batch.size());
      theta.axpy(-cfg.lr, g.gradient);
    }
    losses.push_back(total / static_cast<double>(examples.size()));
    attempt.epochs = epoch;
    attempt.final_train_loss = losses.back();
    if (cfg.check_every > 0 && epoch % cfg.check_every == 0 && exact_match_accuracy(test, theta, model) >= cfg.criterion)
      break;
    const auto w = static_cast<std::size_t>(std::max(cfg.plateau_window, 1));
    if (losses.size() > w) {
      const double before = losses[losses.size() - 1 - w];
      if (!std::isfinite(losses.back()) || before <= 0.0 || (before - losses.back()) / before < cfg.plateau_tol) break;
    }
  }
  attempt.test_accuracy = exact_match_accuracy(test, theta, model);
  return theta;
}

EaseResult ease_of_learning(const ParameterVector& init, const Language& lang, const Condition& condition,
                            const ModelConfig& model, const EaseConfig& cfg, std::uint64_t seed) {
  if (cfg.step == 0 || cfg.cap < cfg.step) throw InvalidInput("ease: need 0 < step <= cap");
  Rng rng(derive_seed(seed, 0));
  DatasetOptions opts;
  opts.n_train = cfg.cap;
  opts.n_test = cfg.n_test;
  const Dataset pool = make_dataset(lang, rng, condition, opts);
  EaseResult result;
  for (std::size_t k = cfg.step; k <= cfg.cap; k += cfg.step) {
    const std::vector<Example> train(pool.train.begin(), pool.train.begin() + static_cast<std::ptrdiff_t>(k));
    EaseAttempt attempt;
    train_to_convergence(init, train, pool.test, model, cfg, derive_seed(seed, k), attempt);
    result.attempts.push_back(attempt);
    if (attempt.test_accuracy >= cfg.criterion) {
      result.examples = k;
      return result;
    }
  }
  result.examples = cfg.cap;
  result.censored = true;
  return result;
}

// ---- reports ----------------------------------------------------------------

namespace {

auto result_key(const LanguageResult& r) {
  return std::tie(r.analysis, r.init, r.condition, r.metric, r.language);
}

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  m.n = xs.size();
  if (xs.empty()) return m;
  double s = 0.0;
  for (double x : xs) s += x;
  m.mean = s / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.stddev = std::sqrt(ss / static_cast<double>(xs.size()));
  return m;
}

}  // namespace

EvalReport::EvalReport(std::vector<LanguageResult> results) : results_(std::move(results)) {
  std::stable_sort(results_.begin(), results_.end(),
                   [](const auto& a, const auto& b) { return result_key(a) < result_key(b); });
}

void EvalReport::add(LanguageResult r) {
  for (const std::string* f : {&r.analysis, &r.init, &r.condition, &r.language, &r.metric})
    if (f->find_first_of(",\n\r") != std::string::npos) throw InvalidInput("result field '" + *f + "' contains a separator");
  const auto pos = std::upper_bound(results_.begin(), results_.end(), r,
                                    [](const auto& a, const auto& b) { return result_key(a) < result_key(b); });
  results_.insert(pos, std::move(r));
}

void EvalReport::merge(const EvalReport& other) {
  for (const auto& r : other.results_) add(r);
}

std::vector<SummaryRow> EvalReport::rows() const {
  std::vector<SummaryRow> out;
  std::size_t i = 0;
  while (i < results_.size()) {
    const auto& head = results_[i];
    std::vector<double> xs;
    std::size_t censored = 0;
    std::size_t j = i;
    for (; j < results_.size(); ++j) {
      const auto& r = results_[j];
      if (r.analysis != head.analysis || r.init != head.init || r.condition != head.condition || r.metric != head.metric)
        break;
      xs.push_back(r.value);
      censored += r.censored ? 1 : 0;
    }
    const auto m = moments(xs);
    out.push_back({head.analysis, head.init, head.condition, head.metric, m.n, m.mean, m.stddev, censored});
    i = j;
  }
  return out;
}

std::optional<SummaryRow> EvalReport::row(const std::string& analysis, const std::string& init,
                                          const std::string& condition, const std::string& metric) const {
  for (const auto& r : rows())
    if (r.analysis == analysis && r.init == init && r.condition == condition && r.metric == metric) return r;
  return std::nullopt;
}

std::vector<Ratio> EvalReport::ratios() const {
  struct Spec {
    std::string name, analysis;
    std::vector<std::string> numerator, denominator;
  };
  const std::vector<Spec> specs = {
      {"constraint-set", "constraint-set", {"NoOnset/NoCoda", "Onset/Coda", "NoOnset/Coda"}, {"Onset/NoCoda"}},
      {"constraint-set-partial", "constraint-set", {"NoOnset/Coda"}, {"NoOnset/NoCoda", "Onset/Coda"}},
      {"consistent-ranking", "consistent-ranking", {"inconsistent-ranking"}, {"consistent"}},
      {"inconsistent-set", "inconsistent-set", {"inconsistent-set"}, {"consistent"}},
  };
  std::set<std::string> inits;
  for (const auto& r : results_) inits.insert(r.init);
  std::vector<Ratio> out;
  for (const auto& s : specs) {
    for (const auto& init : inits) {
      std::vector<double> num, den;
      for (const auto& r : results_) {
        if (r.analysis != s.analysis || r.init != init || r.metric != "examples") continue;
        if (std::find(s.numerator.begin(), s.numerator.end(), r.condition) != s.numerator.end()) num.push_back(r.value);
        if (std::find(s.denominator.begin(), s.denominator.end(), r.condition) != s.denominator.end())
          den.push_back(r.value);
      }
      if (num.empty() || den.empty()) continue;
      const double a = moments(num).mean, b = moments(den).mean;
      out.push_back({s.analysis, init, s.name, a, b, b != 0.0 ? a / b : 0.0});
    }
  }
  return out;
}

std::optional<Ratio> EvalReport::ratio(const std::string& name, const std::string& init) const {
  for (const auto& r : ratios())
    if (r.name == name && r.init == init) return r;
  return std::nullopt;
}

std::string EvalReport::results_csv() const {
  std::ostringstream os;
  os << "analysis,init,condition,language,metric,value,censored\n";
  for (const auto& r : results_)
    os << r.analysis << ',' << r.init << ',' << r.condition << ',' << r.language << ',' << r.metric << ','
       << fmt_double(r.value) << ',' << (r.censored ? 1 : 0) << '\n';
  return os.str();
}

std::string EvalReport::summary_csv() const {
  std::ostringstream os;
  os << "analysis,init,condition,metric,n_languages,mean,std,censored\n";
  for (const auto& r : rows())
    os << r.analysis << ',' << r.init << ',' << r.condition << ',' << r.metric << ',' << r.n_languages << ','
       << fmt_double(r.mean) << ',' << fmt_double(r.stddev) << ',' << r.censored << '\n';
  return os.str();
}

std::string EvalReport::ratios_csv() const {
  std::ostringstream os;
  os << "analysis,init,ratio,numerator,denominator,value\n";
  for (const auto& r : ratios())
    os << r.analysis << ',' << r.init << ',' << r.name << ',' << fmt_double(r.numerator) << ','
       << fmt_double(r.denominator) << ',' << fmt_double(r.value) << '\n';
  return os.str();
}

EvalReport EvalReport::from_results_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || trim(line) != "analysis,init,condition,language,metric,value,censored")
    throw InvalidInput("results csv: unexpected header");
  std::vector<LanguageResult> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 7) throw InvalidInput("results csv line " + std::to_string(lineno) + ": expected 7 fields");
    LanguageResult r{f[0], f[1], f[2], f[3], f[4], 0.0, false};
    const auto parsed = std::from_chars(f[5].data(), f[5].data() + f[5].size(), r.value);
    if (f[5].empty() || parsed.ec != std::errc() || parsed.ptr != f[5].data() + f[5].size())
      throw InvalidInput("results csv line " + std::to_string(lineno) + ": bad value '" + f[5] + "'");
    if (f[6] != "0" && f[6] != "1") throw InvalidInput("results csv line " + std::to_string(lineno) + ": bad censored flag");
    r.censored = f[6] == "1";
    out.push_back(std::move(r));
  }
  return EvalReport(std::move(out));
}

// ---- analyses -----------------------------------------------------------------

namespace {

EvalReport ease_cells(const ParameterVector& init, const std::string& init_name, const std::string& analysis,
                      const std::vector<std::pair<std::string, LanguageSpec>>& cells, const ModelConfig& model,
                      const AnalysisConfig& cfg, std::uint64_t seed) {
  EvalReport report;
  for (const auto& [label, spec] : cells) {
    const std::uint64_t stream = cell_seed(seed, analysis, label);
    for (std::size_t i = 0; i < cfg.n_languages; ++i) {
      Rng rng(derive_seed(stream, i));
      const Language lang = sample_language(rng, spec);
      const Condition cond = spec.consistency == Consistency::InconsistentRanking ? Condition::of(Condition::Kind::InconsistentRanking)
                             : spec.consistency == Consistency::InconsistentSet  ? Condition::of(Condition::Kind::InconsistentSet)
                             : spec.set == ConstraintSet::canonical()            ? Condition::standard()
                                                                                 : Condition::of(Condition::Kind::AltConstraints);
      const auto r = ease_of_learning(init, lang, cond, model, cfg.ease, derive_seed(lang.seed, hash_string("ease")));
      report.add({analysis, init_name, label, lang.id, "examples", static_cast<double>(r.examples), r.censored});
    }
  }
  return report;
}

LanguageSpec spec_of(ConstraintSet set, Consistency c = Consistency::Consistent) {
  LanguageSpec s;
  s.set = set;
  s.consistency = c;
  return s;
}

}  // namespace

EvalReport constraint_set_analysis(const ParameterVector& init, const std::string& init_name, const ModelConfig& model,
                                   const AnalysisConfig& cfg, std::uint64_t seed) {
  std::vector<std::pair<std::string, LanguageSpec>> cells;
  for (const auto& set : ConstraintSet::all()) cells.emplace_back(set.name(), spec_of(set));
  return ease_cells(init, init_name, "constraint-set", cells, model, cfg, seed);
}

EvalReport consistent_ranking_analysis(const ParameterVector& init, const std::string& init_name,
                                       const ModelConfig& model, const AnalysisConfig& cfg, std::uint64_t seed) {
  return ease_cells(init, init_name, "consistent-ranking",
                    {{"consistent", spec_of(ConstraintSet::canonical())},
                     {"inconsistent-ranking", spec_of(ConstraintSet::canonical(), Consistency::InconsistentRanking)}},
                    model, cfg, seed);
}

EvalReport inconsistent_set_analysis(const ParameterVector& init, const std::string& init_name, const ModelConfig& model,
                                     const AnalysisConfig& cfg, std::uint64_t seed) {
  return ease_cells(init, init_name, "inconsistent-set",
                    {{"consistent", spec_of(ConstraintSet::canonical())},
                     {"inconsistent-set", spec_of(ConstraintSet::canonical(), Consistency::InconsistentSet)}},
                    model, cfg, seed);
}

std::string pos_kind_name(PosKind k) {
  switch (k) {
    case PosKind::NewPhonemes: return "new-phonemes";
    case PosKind::Length5: return "length-5";
    case PosKind::Length6: return "length-6";
    case PosKind::Universals: return "universals";
  }
  return "";
}

PosKind pos_kind_from_name(const std::string& name) {
  for (auto k : {PosKind::NewPhonemes, PosKind::Length5, PosKind::Length6, PosKind::Universals})
    if (pos_kind_name(k) == name) return k;
  throw InvalidInput("unknown pos kind '" + name + "' (new-phonemes, length-5, length-6, universals)");
}

EvalReport pos_analysis(const ParameterVector& init, const std::string& init_name, PosKind kind,
                        const ModelConfig& model, const AnalysisConfig& cfg, std::uint64_t seed) {
  const std::string label = pos_kind_name(kind);
  const std::string analysis = "pos-" + label;
  const std::uint64_t stream = cell_seed(seed, analysis, label);
  const auto universals = kind == PosKind::Universals ? enumerate_universals() : std::vector<Universal>{};
  EvalReport report;
  for (std::size_t i = 0; i < cfg.n_languages; ++i) {
    Condition cond;
    switch (kind) {
      case PosKind::NewPhonemes: cond = Condition::of(Condition::Kind::NewPhonemes); break;
      case PosKind::Length5: cond = Condition::length_holdout(5); break;
      case PosKind::Length6: cond = Condition::length_holdout(6); break;
      case PosKind::Universals: cond = Condition::implication(universals[i % universals.size()]); break;
    }
    Rng rng(derive_seed(stream, i));
    DatasetOptions opts = cfg.data;
    opts.n_train = cfg.shots;
    const Dataset d = sample_dataset(rng, cond, opts);
    const LanguageTask task(d.train, {}, model, cfg.inner.batch_size);
    const ParameterVector adapted = inner_adapt(init, task, cfg.inner);
    report.add({analysis, init_name, label, d.language.id, "seen-accuracy", exact_match_accuracy(d.train, adapted, model), false});
    report.add({analysis, init_name, label, d.language.id, "heldout-accuracy", exact_match_accuracy(d.test, adapted, model), false});
  }
  return report;
}

EvalReport eval_100shot(const ParameterVector& init, const std::string& init_name, const ModelConfig& model,
                        const AnalysisConfig& cfg, std::uint64_t seed) {
  const std::uint64_t stream = cell_seed(seed, "eval-100shot", "standard");
  EvalReport report;
  for (std::size_t i = 0; i < cfg.n_languages; ++i) {
    Rng rng(derive_seed(stream, i));
    DatasetOptions opts = cfg.data;
    opts.n_train = cfg.shots;
    const Dataset d = sample_dataset(rng, Condition::standard(), opts);
    report.add({"eval-100shot", init_name, "standard", d.language.id, "accuracy",
                k_shot_eval(init, d, cfg.shots, cfg.inner, model), false});
  }
  return report;
}

// ---- configuration ------------------------------------------------------------

namespace {

struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw InvalidInput("config: bad value '" + v + "' for " + key);
  return out;
}

template <typename M>
Field num_field(const std::string& key, std::function<M&(ExperimentConfig&)> ref) {
  return {[ref](const ExperimentConfig& c) {
            auto& m = ref(const_cast<ExperimentConfig&>(c));
            if constexpr (std::is_floating_point_v<M>) return fmt_double(m);
            else return std::to_string(m);
          },
          [ref, key](ExperimentConfig& c, const std::string& v) { ref(c) = parse_number<M>(key, v); }};
}

Field str_field(std::function<std::string&(ExperimentConfig&)> ref) {
  return {[ref](const ExperimentConfig& c) { return ref(const_cast<ExperimentConfig&>(c)); },
          [ref](ExperimentConfig& c, const std::string& v) { ref(c) = v; }};
}

const std::map<std::string, Field>& fields() {
  using C = ExperimentConfig;
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["mode"] = str_field([](C& c) -> std::string& { return c.mode; });
    t["out"] = str_field([](C& c) -> std::string& { return c.out; });
    t["init"] = str_field([](C& c) -> std::string& { return c.init; });
    t["condition"] = str_field([](C& c) -> std::string& { return c.condition; });
    t["seed"] = num_field<std::uint64_t>("seed", [](C& c) -> std::uint64_t& { return c.seed; });
    t["gen.languages"] = num_field<std::size_t>("gen.languages", [](C& c) -> std::size_t& { return c.gen_languages; });
    t["model.embed_dim"] = num_field<int>("model.embed_dim", [](C& c) -> int& { return c.meta.model.embed_dim; });
    t["model.hidden_dim"] = num_field<int>("model.hidden_dim", [](C& c) -> int& { return c.meta.model.hidden_dim; });
    t["model.max_decode_len"] =
        num_field<int>("model.max_decode_len", [](C& c) -> int& { return c.meta.model.max_decode_len; });
    t["inner.steps"] = num_field<int>("inner.steps", [](C& c) -> int& { return c.meta.inner.steps; });
    t["inner.lr"] = num_field<double>("inner.lr", [](C& c) -> double& { return c.meta.inner.lr; });
    t["inner.batch_size"] =
        num_field<std::size_t>("inner.batch_size", [](C& c) -> std::size_t& { return c.meta.inner.batch_size; });
    t["meta.outer"] = {[](const C& c) { return std::string(c.meta.outer == OuterGradient::Exact ? "exact" : "first-order"); },
                       [](C& c, const std::string& v) {
                         if (v == "exact") c.meta.outer = OuterGradient::Exact;
                         else if (v == "first-order") c.meta.outer = OuterGradient::FirstOrder;
                         else throw InvalidInput("config: meta.outer must be first-order or exact, got '" + v + "'");
                       }};
    t["meta.fd_fallback"] = {[](const C& c) { return std::string(c.meta.fd_fallback ? "true" : "false"); },
                             [](C& c, const std::string& v) {
                               if (v != "true" && v != "false")
                                 throw InvalidInput("config: meta.fd_fallback must be true or false, got '" + v + "'");
                               c.meta.fd_fallback = v == "true";
                             }};
    t["meta.outer_lr"] = num_field<double>("meta.outer_lr", [](C& c) -> double& { return c.meta.outer_lr; });
    t["meta.n_train_languages"] = num_field<std::int64_t>(
        "meta.n_train_languages", [](C& c) -> std::int64_t& { return c.meta.n_train_languages; });
    t["meta.max_epochs"] = num_field<int>("meta.max_epochs", [](C& c) -> int& { return c.meta.max_epochs; });
    t["meta.n_holdout_languages"] = num_field<std::int64_t>(
        "meta.n_holdout_languages", [](C& c) -> std::int64_t& { return c.meta.n_holdout_languages; });
    t["meta.eval_every"] = num_field<std::int64_t>("meta.eval_every", [](C& c) -> std::int64_t& { return c.meta.eval_every; });
    t["meta.patience"] = num_field<int>("meta.patience", [](C& c) -> int& { return c.meta.patience; });
    t["meta.shots"] = num_field<std::size_t>("meta.shots", [](C& c) -> std::size_t& { return c.meta.shots; });
    t["data.n_test"] = num_field<std::size_t>("data.n_test", [](C& c) -> std::size_t& { return c.meta.data.n_test; });
    t["data.min_len"] = num_field<std::size_t>("data.min_len", [](C& c) -> std::size_t& { return c.meta.data.min_len; });
    t["data.max_len"] = num_field<std::size_t>("data.max_len", [](C& c) -> std::size_t& { return c.meta.data.max_len; });
    t["data.retry_cap"] = num_field<int>("data.retry_cap", [](C& c) -> int& { return c.meta.data.retry_cap; });
    t["analysis.n_languages"] =
        num_field<std::size_t>("analysis.n_languages", [](C& c) -> std::size_t& { return c.analysis.n_languages; });
    t["ease.step"] = num_field<std::size_t>("ease.step", [](C& c) -> std::size_t& { return c.analysis.ease.step; });
    t["ease.cap"] = num_field<std::size_t>("ease.cap", [](C& c) -> std::size_t& { return c.analysis.ease.cap; });
    t["ease.n_test"] = num_field<std::size_t>("ease.n_test", [](C& c) -> std::size_t& { return c.analysis.ease.n_test; });
    t["ease.criterion"] = num_field<double>("ease.criterion", [](C& c) -> double& { return c.analysis.ease.criterion; });
    t["ease.epoch_cap"] = num_field<int>("ease.epoch_cap", [](C& c) -> int& { return c.analysis.ease.epoch_cap; });
    t["ease.plateau_window"] =
        num_field<int>("ease.plateau_window", [](C& c) -> int& { return c.analysis.ease.plateau_window; });
    t["ease.plateau_tol"] = num_field<double>("ease.plateau_tol", [](C& c) -> double& { return c.analysis.ease.plateau_tol; });
    t["ease.check_every"] = num_field<int>("ease.check_every", [](C& c) -> int& { return c.analysis.ease.check_every; });
    t["ease.lr"] = num_field<double>("ease.lr", [](C& c) -> double& { return c.analysis.ease.lr; });
    t["ease.batch_size"] =
        num_field<std::size_t>("ease.batch_size", [](C& c) -> std::size_t& { return c.analysis.ease.batch_size; });
    return t;
  }();
  return table;
}

}  // namespace

std::map<std::string, std::string> ExperimentConfig::to_map() const {
  std::map<std::string, std::string> out;
  for (const auto& [k, f] : fields()) out[k] = f.get(*this);
  return out;
}

std::string ExperimentConfig::to_string() const {
  std::string out;
  for (const auto& [k, v] : to_map()) out += k + " = " + v + "\n";
  return out;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw InvalidInput("config: unknown key '" + key + "'");
  it->second.set(*this, value);
  // k-shot analyses adapt exactly as meta-training does
  analysis.inner = meta.inner;
  analysis.shots = meta.shots;
  analysis.data = meta.data;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidInput("config line " + std::to_string(lineno) + ": expected key = value");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

// ---- charts -----------------------------------------------------------------------

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string bar_chart_svg(const std::vector<SummaryRow>& rows, const std::string& title, const std::string& y_label) {
  std::vector<std::string> conditions, inits;
  for (const auto& r : rows) {
    if (std::find(conditions.begin(), conditions.end(), r.condition) == conditions.end()) conditions.push_back(r.condition);
    if (std::find(inits.begin(), inits.end(), r.init) == inits.end()) inits.push_back(r.init);
  }
  double ymax = 0.0;
  for (const auto& r : rows) ymax = std::max(ymax, r.mean + r.stddev);
  if (ymax <= 0.0) ymax = 1.0;

  const double left = 70, top = 40, plot_h = 260, group_w = std::max(90.0, 40.0 * static_cast<double>(inits.size()) + 30);
  const double width = left + group_w * static_cast<double>(std::max<std::size_t>(conditions.size(), 1)) + 140;
  const double height = top + plot_h + 70;
  static const char* palette[] = {"#3b6ea8", "#d9822b", "#5a9e4b", "#a34c8f", "#777777"};

  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" font-size=\"12\">\n", width, height);
  os << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"20\" font-size=\"14\">", left);
  os << buf << xml_escape(title) << "</text>\n";
  std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", left, top, left, top + plot_h);
  os << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", left, top + plot_h,
                width - 140, top + plot_h);
  os << buf;
  for (int t = 0; t <= 4; ++t) {
    const double v = ymax * t / 4.0, y = top + plot_h - plot_h * t / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>\n", left - 6, y + 4, v);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "<text transform=\"translate(16,%.1f) rotate(-90)\" text-anchor=\"middle\">", top + plot_h / 2);
  os << buf << xml_escape(y_label) << "</text>\n";

  for (std::size_t g = 0; g < conditions.size(); ++g) {
    const double gx = left + group_w * static_cast<double>(g) + 15;
    for (std::size_t b = 0; b < inits.size(); ++b) {
      for (const auto& r : rows) {
        if (r.condition != conditions[g] || r.init != inits[b]) continue;
        const double h = plot_h * r.mean / ymax, x = gx + 40.0 * static_cast<double>(b);
        std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"32\" height=\"%.1f\" fill=\"%s\"/>\n", x,
                      top + plot_h - h, h, palette[b % 5]);
        os << buf;
        const double e0 = top + plot_h - plot_h * std::max(0.0, r.mean - r.stddev) / ymax;
        const double e1 = top + plot_h - plot_h * (r.mean + r.stddev) / ymax;
        std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", x + 16, e0,
                      x + 16, e1);
        os << buf;
      }
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">", gx + 20.0 * static_cast<double>(inits.size()) - 4,
                  top + plot_h + 18);
    os << buf << xml_escape(conditions[g]) << "</text>\n";
  }
  for (std::size_t b = 0; b < inits.size(); ++b) {
    const double y = top + 20.0 * static_cast<double>(b);
    std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"12\" height=\"12\" fill=\"%s\"/>\n", width - 120, y, palette[b % 5]);
    os << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\">", width - 102, y + 10);
    os << buf << xml_escape(inits[b]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace otmeta
