#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "otmeta/harness.hpp"

namespace py = pybind11;
using namespace otmeta;

namespace {

Grammar grammar(const std::string& ranking, char epen_c, char epen_v) { return {Ranking::parse(ranking), epen_c, epen_v}; }

std::vector<Example> to_examples(const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<Example> out;
  out.reserve(pairs.size());
  for (const auto& [in, o] : pairs) out.push_back({in, o});
  return out;
}

std::vector<std::pair<std::string, std::string>> to_pairs(const std::vector<Example>& ex) {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(ex.size());
  for (const auto& e : ex) out.emplace_back(e.input, e.output);
  return out;
}

ModelConfig model_config(int embed_dim, int hidden_dim, int max_decode_len) {
  ModelConfig cfg;
  cfg.embed_dim = embed_dim;
  cfg.hidden_dim = hidden_dim;
  cfg.max_decode_len = max_decode_len;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_otmeta, m) {
  m.doc() = "Optimality Theory syllable languages, a seq2seq learner, and MAML";

  py::register_exception<GenerationError>(m, "GenerationError", PyExc_RuntimeError);
  py::register_exception<ad::CapabilityError>(m, "CapabilityError", PyExc_RuntimeError);

  // ---- phonology
  m.def("optimize", [](const std::string& input, const std::string& ranking, char epen_c, char epen_v) {
    return optimize(input, grammar(ranking, epen_c, epen_v));
  }, py::arg("input"), py::arg("ranking"), py::arg("epen_c") = 'z', py::arg("epen_v") = 'e',
        "Optimal surface form, e.g. optimize('un', 'NoCoda>>NoDeletion>>NoInsertion>>Onset') == '.u.ne.'");
  m.def("oracle_optimize", [](const std::string& input, const std::string& ranking, char epen_c, char epen_v) {
    return oracle_optimize(input, grammar(ranking, epen_c, epen_v));
  }, py::arg("input"), py::arg("ranking"), py::arg("epen_c") = 'z', py::arg("epen_v") = 'e',
        "Exhaustive-search reference for optimize.");
  m.def("violations", [](const std::string& input, const std::string& ranking, char epen_c, char epen_v) {
    const Grammar g = grammar(ranking, epen_c, epen_v);
    const auto e = evaluate(input, g);
    std::map<std::string, int> out;
    for (auto c : g.ranking.constraint_set().members()) out[std::string(constraint_name(c))] = e.profile[c];
    return out;
  }, py::arg("input"), py::arg("ranking"), py::arg("epen_c") = 'z', py::arg("epen_v") = 'e',
        "Violation counts of the optimal candidate.");
  m.def("constraint_sets", [] {
    std::vector<std::string> out;
    for (const auto& s : ConstraintSet::all()) out.push_back(s.name());
    return out;
  });
  m.def("rankings", [](const std::string& set) {
    std::vector<std::string> out;
    for (const auto& r : Ranking::all_for(ConstraintSet::from_name(set))) out.push_back(r.to_string());
    return out;
  }, py::arg("constraint_set") = "Onset/NoCoda");
  m.def("behavior_class", [](const std::string& ranking) { return behavior_class(Ranking::parse(ranking)); });
  m.def("num_classes", [](const std::string& set) { return typology(ConstraintSet::from_name(set)).num_classes(); },
        py::arg("constraint_set") = "Onset/NoCoda");
  m.def("skeleton", [](const std::string& s) { return skeleton(s); });

  // ---- languages and datasets
  py::class_<Language>(m, "Language")
      .def_readonly("id", &Language::id)
      .def_readonly("seed", &Language::seed)
      .def_readonly("behavior", &Language::behavior)
      .def_readonly("consonants", &Language::consonants)
      .def_readonly("vowels", &Language::vowels)
      .def_readonly("epen_c", &Language::epen_c)
      .def_readonly("epen_v", &Language::epen_v)
      .def_property_readonly("ranking", [](const Language& l) { return l.ranking.to_string(); })
      .def_property_readonly("constraint_set", [](const Language& l) { return l.constraint_set.name(); })
      .def_property_readonly("consistency", [](const Language& l) { return std::string(consistency_name(l.consistency)); })
      .def("surface", [](const Language& l, const std::string& in) { return l.surface(in); })
      .def("__repr__", [](const Language& l) { return "<Language " + l.id + " " + l.ranking.to_string() + ">"; });

  m.def("sample_language", [](std::uint64_t seed, const std::string& set, const std::string& consistency) {
    Rng rng(seed);
    LanguageSpec spec;
    spec.set = ConstraintSet::from_name(set);
    spec.consistency = consistency_from_name(consistency);
    return sample_language(rng, spec);
  }, py::arg("seed"), py::arg("constraint_set") = "Onset/NoCoda", py::arg("consistency") = "consistent");

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("language", &Dataset::language)
      .def_readonly("test_language", &Dataset::test_language)
      .def_readonly("seed", &Dataset::seed)
      .def_property_readonly("condition", [](const Dataset& d) { return d.condition.tag(); })
      .def_property_readonly("train", [](const Dataset& d) { return to_pairs(d.train); })
      .def_property_readonly("test", [](const Dataset& d) { return to_pairs(d.test); })
      .def("to_jsonl", [](const Dataset& d) { return dataset_to_jsonl(d); })
      .def("metadata", [](const Dataset& d) { return dataset_metadata(d); })
      .def("validate", [](const Dataset& d) { return validate_dataset(d); })
      .def_static("from_files", &dataset_from_files, py::arg("jsonl"), py::arg("metadata"))
      .def(py::self == py::self);

  m.def("sample_dataset", [](std::uint64_t seed, const std::string& condition, std::size_t n_train, std::size_t n_test) {
    Rng rng(seed);
    DatasetOptions opts;
    opts.n_train = n_train;
    opts.n_test = n_test;
    return sample_dataset(rng, Condition::parse(condition), opts);
  }, py::arg("seed"), py::arg("condition") = "standard", py::arg("n_train") = 100, py::arg("n_test") = 100);
  m.def("universals", [] {
    std::vector<std::string> out;
    for (const auto& u : enumerate_universals()) out.push_back(u.to_string());
    return out;
  }, "Implicational universals as 'A->x=>B->y' strings.");

  // ---- model
  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init(&model_config), py::arg("embed_dim") = 10, py::arg("hidden_dim") = 32,
           py::arg("max_decode_len") = ModelConfig{}.max_decode_len)
      .def_readonly("embed_dim", &ModelConfig::embed_dim)
      .def_readonly("hidden_dim", &ModelConfig::hidden_dim)
      .def_readonly("max_decode_len", &ModelConfig::max_decode_len)
      .def(py::self == py::self);

  py::class_<ParameterVector>(m, "Parameters")
      .def_property_readonly("names", [](const ParameterVector& p) {
        std::vector<std::string> out;
        for (const auto& b : p.blocks()) out.push_back(b.name);
        return out;
      })
      .def("__getitem__", [](const ParameterVector& p, const std::string& name) { return Eigen::MatrixXd(p[name]); })
      .def("__setitem__", [](ParameterVector& p, const std::string& name, const Eigen::MatrixXd& v) {
        Eigen::MatrixXd& dst = p[name];
        if (dst.rows() != v.rows() || dst.cols() != v.cols()) throw InvalidInput("shape mismatch for block " + name);
        dst = v;
      })
      .def("flatten", &ParameterVector::flatten)
      .def("unflatten", &ParameterVector::unflatten)
      .def_property_readonly("dimension", &ParameterVector::dimension)
      .def(py::self == py::self);

  m.def("init_params", [](const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    return init_params(cfg, rng);
  }, py::arg("config"), py::arg("seed"));
  m.def("loss", [](const std::vector<std::pair<std::string, std::string>>& batch, const ParameterVector& p,
                   const ModelConfig& cfg) { return loss_and_gradient(to_examples(batch), p, cfg).value; });
  m.def("loss_and_gradient", [](const std::vector<std::pair<std::string, std::string>>& batch, const ParameterVector& p,
                                const ModelConfig& cfg) {
    auto r = loss_and_gradient(to_examples(batch), p, cfg);
    return py::make_tuple(r.value, r.gradient);
  });
  m.def("greedy_decode", [](const std::vector<std::string>& inputs, const ParameterVector& p, const ModelConfig& cfg) {
    return greedy_decode(inputs, p, cfg);
  });
  m.def("exact_match_accuracy", [](const std::vector<std::pair<std::string, std::string>>& ex, const ParameterVector& p,
                                   const ModelConfig& cfg) { return exact_match_accuracy(to_examples(ex), p, cfg); });
  m.def("k_shot_eval", [](const ParameterVector& p, const Dataset& d, std::size_t k, const ModelConfig& cfg, int steps,
                          double lr) { return k_shot_eval(p, d, k, {steps, lr, 100}, cfg); },
        py::arg("params"), py::arg("dataset"), py::arg("k"), py::arg("config"), py::arg("inner_steps") = 1,
        py::arg("inner_lr") = 1.0);
  m.def("save_checkpoint", [](const ParameterVector& p, const ModelConfig& cfg, std::uint64_t seed,
                              const std::string& path) { save_checkpoint({cfg, seed, p, "python"}, path); });
  m.def("load_checkpoint", [](const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    return py::make_tuple(ck.params, ck.config, ck.seed);
  });

  // ---- meta-training and analyses
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_static("parse", &ExperimentConfig::parse)
      .def_static("load", &ExperimentConfig::load)
      .def("set", &ExperimentConfig::set)
      .def("to_string", &ExperimentConfig::to_string)
      .def("to_dict", &ExperimentConfig::to_map)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_property_readonly("model", [](const ExperimentConfig& c) { return c.meta.model; });

  m.def("meta_train", [](const ExperimentConfig& cfg) {
    MetaTrainResult r;
    {
      py::gil_scoped_release release;
      r = meta_train(cfg.meta, cfg.seed);
    }
    py::list log;
    for (const auto& e : r.log) log.append(py::make_tuple(e.languages_seen, e.holdout_accuracy, e.improved));
    return py::make_tuple(r.best_m0, r.best_score, log);
  }, "Returns (best_m0, best_score, [(languages_seen, holdout_accuracy, improved), ...]).");

  m.def("analyze", [](const std::string& mode, const ParameterVector& init, const std::string& label,
                      const ExperimentConfig& cfg) {
    const auto& mc = cfg.meta.model;
    EvalReport r;
    py::gil_scoped_release release;
    if (mode == "constraint-set") r = constraint_set_analysis(init, label, mc, cfg.analysis, cfg.seed);
    else if (mode == "consistent-ranking") r = consistent_ranking_analysis(init, label, mc, cfg.analysis, cfg.seed);
    else if (mode == "inconsistent-set") r = inconsistent_set_analysis(init, label, mc, cfg.analysis, cfg.seed);
    else if (mode == "eval-100shot") r = eval_100shot(init, label, mc, cfg.analysis, cfg.seed);
    else if (mode.rfind("pos-", 0) == 0) r = pos_analysis(init, label, pos_kind_from_name(mode.substr(4)), mc, cfg.analysis, cfg.seed);
    else throw InvalidInput("unknown analysis mode '" + mode + "'");
    return r.results_csv();
  }, py::arg("mode"), py::arg("init"), py::arg("label"), py::arg("config"),
        "Runs an analysis and returns the per-language results CSV.");
}
