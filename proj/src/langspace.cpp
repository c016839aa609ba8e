#include "otmeta/langspace.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"

namespace otmeta {

using json = nlohmann::json;

namespace {

std::string hex_id(std::uint64_t seed) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "L%016llx", static_cast<unsigned long long>(seed));
  return buf;
}

std::string draw_inventory(Rng& rng, std::string_view pool, std::size_t k) {
  std::vector<char> v(pool.begin(), pool.end());
  auto picked = rng.sample(std::move(v), k);
  std::string s(picked.begin(), picked.end());
  std::sort(s.begin(), s.end());
  return s;
}

std::size_t count_strings(std::size_t alphabet, std::size_t min_len, std::size_t max_len) {
  std::size_t total = 0;
  for (std::size_t len = min_len; len <= max_len; ++len) {
    std::size_t n = 1;
    for (std::size_t i = 0; i < len; ++i) n *= alphabet;
    total += n;
  }
  return total;
}

}  // namespace

std::string_view consistency_name(Consistency c) {
  switch (c) {
    case Consistency::Consistent: return "consistent";
    case Consistency::InconsistentRanking: return "inconsistent-ranking";
    case Consistency::InconsistentSet: return "inconsistent-set";
  }
  return "consistent";
}

Consistency consistency_from_name(std::string_view name) {
  for (auto c : {Consistency::Consistent, Consistency::InconsistentRanking, Consistency::InconsistentSet})
    if (consistency_name(c) == name) return c;
  throw InvalidInput("unknown consistency '" + std::string(name) + "'");
}

TemplateBehavior Language::behavior_for(const std::string& input_template) const {
  switch (consistency) {
    case Consistency::Consistent:
      return {constraint_set, behavior, ranking};
    case Consistency::InconsistentRanking: {
      Rng r(derive_seed(seed, hash_string("ranking:" + input_template)));
      const auto& ty = typology(constraint_set);
      const int k = static_cast<int>(r.index(ty.num_classes()));
      return {constraint_set, k, ty.representative(k)};
    }
    case Consistency::InconsistentSet: {
      Rng r(derive_seed(seed, hash_string("set:" + input_template)));
      const ConstraintSet s = ConstraintSet::all()[r.index(4)];
      const auto& ty = typology(s);
      const int k = static_cast<int>(r.index(ty.num_classes()));
      return {s, k, ty.representative(k)};
    }
  }
  return {constraint_set, behavior, ranking};
}

Grammar Language::grammar_for(std::string_view input) const {
  for (char c : input)
    if (!in_alphabet(c)) throw InvalidInput(std::string("symbol '") + c + "' is not in the phoneme alphabet");
  const auto b = consistency == Consistency::Consistent ? TemplateBehavior{constraint_set, behavior, ranking}
                                                        : behavior_for(skeleton(input));
  return Grammar{b.ranking, epen_c, epen_v};
}

std::string Language::surface(std::string_view input) const { return optimize(input, grammar_for(input)); }

Language sample_language(Rng& rng, const LanguageSpec& spec) {
  Language lang;
  lang.seed = rng.next_u64();
  lang.id = hex_id(lang.seed);
  lang.consistency = spec.consistency;
  lang.constraint_set = spec.set;
  const auto& ty = typology(spec.set);
  if (spec.allowed_classes.empty()) {
    lang.behavior = static_cast<int>(rng.index(ty.num_classes()));
  } else {
    lang.behavior = spec.allowed_classes[rng.index(spec.allowed_classes.size())];
  }
  lang.ranking = ty.representative(lang.behavior);
  lang.consonants = draw_inventory(rng, kConsonants, static_cast<std::size_t>(rng.uniform_int(2, 4)));
  lang.vowels = draw_inventory(rng, kVowels, static_cast<std::size_t>(rng.uniform_int(2, 4)));
  lang.epen_c = lang.consonants[rng.index(lang.consonants.size())];
  lang.epen_v = lang.vowels[rng.index(lang.vowels.size())];
  return lang;
}

std::string sample_input(const Language& lang, Rng& rng, std::size_t min_len, std::size_t max_len) {
  if (min_len < 1 || max_len < min_len) throw InvalidInput("sample_input requires 1 <= min_len <= max_len");
  const std::string inv = lang.inventory();
  const auto len = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(min_len), static_cast<std::int64_t>(max_len)));
  std::string s(len, '\0');
  for (auto& c : s) c = inv[rng.index(inv.size())];
  return s;
}

std::string sample_input_matching(const Language& lang, Rng& rng, std::string_view pattern) {
  std::string s;
  s.reserve(pattern.size());
  for (char p : pattern) {
    const std::string& pool = p == 'C' ? lang.consonants : lang.vowels;
    if (p != 'C' && p != 'V') throw InvalidInput("template must contain only C and V");
    s.push_back(pool[rng.index(pool.size())]);
  }
  return s;
}

// ---------------------------------------------------------------------------

std::vector<std::string> universal_template_universe() { return {"V", "C", "CV", "VC", "CC", "VV"}; }

std::string outcome_pattern(const std::string& input_template, const Grammar& g) {
  static constexpr std::string_view cs = "xn", vs = "uo";
  std::string input;
  std::size_t ci = 0, vi = 0;
  for (char p : input_template) input.push_back(p == 'C' ? cs[ci++ % cs.size()] : vs[vi++ % vs.size()]);
  return skeleton(optimize(input, g));
}

std::vector<Universal> enumerate_universals() {
  const auto& ty = typology(ConstraintSet::canonical());
  const auto universe = universal_template_universe();
  const std::size_t n_classes = ty.num_classes();
  // table[k][t] = output pattern of template t in class k
  std::vector<std::vector<std::string>> table(n_classes);
  for (std::size_t k = 0; k < n_classes; ++k)
    for (const auto& t : universe) table[k].push_back(outcome_pattern(t, Grammar{ty.representative(static_cast<int>(k)), 'z', 'e'}));

  std::vector<Universal> out;
  for (std::size_t a = 0; a < universe.size(); ++a) {
    std::set<std::string> outcomes;
    for (const auto& row : table) outcomes.insert(row[a]);
    for (const auto& o1 : outcomes) {
      if (o1.empty()) continue;
      std::vector<int> premise_classes;
      for (std::size_t k = 0; k < n_classes; ++k)
        if (table[k][a] == o1) premise_classes.push_back(static_cast<int>(k));
      if (premise_classes.size() == n_classes) continue;
      for (std::size_t b = 0; b < universe.size(); ++b) {
        if (b == a) continue;
        const std::string& o2 = table[static_cast<std::size_t>(premise_classes.front())][b];
        if (o2.empty()) continue;
        const bool determined = std::all_of(premise_classes.begin(), premise_classes.end(),
                                            [&](int k) { return table[static_cast<std::size_t>(k)][b] == o2; });
        if (!determined) continue;
        const bool everywhere = std::all_of(table.begin(), table.end(), [&](const auto& row) { return row[b] == o2; });
        if (everywhere) continue;
        out.push_back(Universal{{universe[a], o1}, {universe[b], o2}, premise_classes});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string Condition::tag() const {
  switch (kind) {
    case Kind::Standard: return "standard";
    case Kind::AltConstraints: return "alt-constraints";
    case Kind::InconsistentRanking: return "inconsistent-ranking";
    case Kind::InconsistentSet: return "inconsistent-set";
    case Kind::NewPhonemes: return "new-phonemes";
    case Kind::LengthHoldout: return "length-holdout(" + std::to_string(holdout_length) + ")";
    case Kind::Universal: return "universal(" + (universal ? universal->to_string() : std::string()) + ")";
  }
  return "standard";
}

Condition Condition::parse(std::string_view tag) {
  for (auto k : {Kind::Standard, Kind::AltConstraints, Kind::InconsistentRanking, Kind::InconsistentSet, Kind::NewPhonemes})
    if (Condition::of(k).tag() == tag) return Condition::of(k);
  auto inner = [&](std::string_view prefix) -> std::optional<std::string> {
    if (tag.size() > prefix.size() + 1 && tag.substr(0, prefix.size()) == prefix && tag.back() == ')')
      return std::string(tag.substr(prefix.size(), tag.size() - prefix.size() - 1));
    return std::nullopt;
  };
  if (auto k = inner("length-holdout(")) {
    try {
      return Condition::length_holdout(std::stoi(*k));
    } catch (const std::exception&) {
      throw InvalidInput("bad holdout length in '" + std::string(tag) + "'");
    }
  }
  if (auto u = inner("universal(")) {
    for (const auto& cand : enumerate_universals())
      if (cand.to_string() == *u) return Condition::implication(cand);
    throw InvalidInput("unknown implicational universal '" + *u + "'");
  }
  throw InvalidInput("unknown condition '" + std::string(tag) + "'");
}

// ---------------------------------------------------------------------------

namespace {

using Sampler = std::function<std::string(Rng&)>;

std::vector<Example> draw_split(const Language& gen, Rng& rng, const Sampler& sampler, std::size_t n, std::size_t pool,
                                const std::set<std::string>& forbidden, int retry_cap, const char* split) {
  std::vector<Example> out;
  out.reserve(n);
  std::set<std::string> used;
  const bool unique = pool >= n + forbidden.size();
  for (std::size_t i = 0; i < n; ++i) {
    int tries = 0;
    std::string input;
    while (true) {
      input = sampler(rng);
      if (!forbidden.count(input) && (!unique || !used.count(input))) break;
      if (++tries >= retry_cap)
        throw GenerationError(std::string("could not draw a disjoint ") + split + " input for language " + gen.id + " after " +
                              std::to_string(retry_cap) + " attempts");
    }
    used.insert(input);
    out.push_back({input, gen.surface(input)});
  }
  return out;
}

Language fresh_inventory_language(const Language& lang, Rng& rng) {
  Language t = lang;
  std::string cs, vs;
  for (char c : kConsonants)
    if (lang.consonants.find(c) == std::string::npos) cs.push_back(c);
  for (char c : kVowels)
    if (lang.vowels.find(c) == std::string::npos) vs.push_back(c);
  const auto nc = static_cast<std::size_t>(rng.uniform_int(2, 4));
  const auto nv = static_cast<std::size_t>(rng.uniform_int(2, 4));
  if (vs.size() < nv || cs.size() < nc) throw GenerationError("inventory too small for disjoint test phonemes");
  t.consonants = draw_inventory(rng, cs, nc);
  t.vowels = draw_inventory(rng, vs, nv);
  t.epen_c = t.consonants[rng.index(t.consonants.size())];
  t.epen_v = t.vowels[rng.index(t.vowels.size())];
  return t;
}

std::size_t template_pool(const Language& lang, std::string_view pattern) {
  std::size_t n = 1;
  for (char p : pattern) n *= p == 'C' ? lang.consonants.size() : lang.vowels.size();
  return n;
}

}  // namespace

Dataset make_dataset(const Language& lang, Rng& rng, const Condition& condition, const DatasetOptions& opts) {
  Dataset d;
  d.language = lang;
  d.test_language = lang;
  d.condition = condition;
  d.seed = rng.seed();
  const std::size_t alpha = lang.inventory().size();
  using K = Condition::Kind;

  Sampler train_sampler = [&](Rng& r) { return sample_input(lang, r, opts.min_len, opts.max_len); };
  Sampler test_sampler = train_sampler;
  std::size_t train_pool = count_strings(alpha, opts.min_len, opts.max_len);
  std::size_t test_pool = train_pool;
  bool shared = true;

  switch (condition.kind) {
    case K::Standard:
    case K::AltConstraints:
    case K::InconsistentRanking:
    case K::InconsistentSet:
      break;
    case K::NewPhonemes: {
      d.test_language = fresh_inventory_language(lang, rng);
      const Language& tl = d.test_language;
      test_sampler = [&tl, &opts](Rng& r) { return sample_input(tl, r, opts.min_len, opts.max_len); };
      test_pool = count_strings(tl.inventory().size(), opts.min_len, opts.max_len);
      shared = false;
      break;
    }
    case K::LengthHoldout: {
      const auto k = static_cast<std::size_t>(condition.holdout_length);
      if (k < 2 || k > kDefaultMaxInputLength) throw GenerationError("holdout length must be in [2, 8]");
      train_sampler = [&lang, k](Rng& r) { return sample_input(lang, r, 1, k - 1); };
      test_sampler = [&lang, k](Rng& r) { return sample_input(lang, r, k, k); };
      train_pool = count_strings(alpha, 1, k - 1);
      test_pool = count_strings(alpha, k, k);
      shared = false;
      break;
    }
    case K::Universal: {
      if (!condition.universal) throw GenerationError("universal condition without a dependency");
      const Universal& u = *condition.universal;
      const std::string& pt = u.premise.input_template;
      const std::string& ct = u.conclusion.input_template;
      std::string probe;
      for (char p : pt) probe.push_back(p == 'C' ? lang.consonants[0] : lang.vowels[0]);
      if (outcome_pattern(pt, lang.grammar_for(probe)) != u.premise.output_pattern)
        throw GenerationError("language " + lang.id + " does not exhibit premise " + u.premise.to_string());
      train_sampler = [&lang, pt](Rng& r) { return sample_input_matching(lang, r, pt); };
      test_sampler = [&lang, ct](Rng& r) { return sample_input_matching(lang, r, ct); };
      train_pool = template_pool(lang, pt);
      test_pool = template_pool(lang, ct);
      shared = false;
      break;
    }
  }

  if (shared && train_pool < opts.n_train + opts.n_test)
    throw GenerationError("language " + lang.id + " has only " + std::to_string(train_pool) + " distinct inputs; " +
                          std::to_string(opts.n_train + opts.n_test) + " needed");
  d.train = draw_split(d.language, rng, train_sampler, opts.n_train, train_pool, {}, opts.retry_cap, "train");
  std::set<std::string> forbidden;
  for (const auto& e : d.train) forbidden.insert(e.input);
  if (!shared) forbidden.clear();  // splits disjoint by construction
  d.test = draw_split(d.test_language, rng, test_sampler, opts.n_test, test_pool, forbidden, opts.retry_cap, "test");
  return d;
}

Dataset sample_dataset(Rng& rng, const Condition& condition, const DatasetOptions& opts, std::optional<ConstraintSet> set) {
  using K = Condition::Kind;
  LanguageSpec spec;
  switch (condition.kind) {
    case K::AltConstraints: {
      if (set) {
        spec.set = *set;
      } else {
        spec.set = ConstraintSet::all()[1 + rng.index(3)];
      }
      break;
    }
    case K::InconsistentRanking:
      spec.consistency = Consistency::InconsistentRanking;
      if (set) spec.set = *set;
      break;
    case K::InconsistentSet:
      spec.consistency = Consistency::InconsistentSet;
      break;
    case K::Universal:
      if (!condition.universal) throw GenerationError("universal condition without a dependency");
      spec.allowed_classes = condition.universal->premise_classes;
      break;
    default:
      if (set) spec.set = *set;
      break;
  }
  const Language lang = sample_language(rng, spec);
  Rng data_rng(derive_seed(lang.seed, hash_string(condition.tag())));
  return make_dataset(lang, data_rng, condition, opts);
}

std::vector<std::string> validate_dataset(const Dataset& d) {
  std::vector<std::string> problems;
  std::set<std::string> train_inputs;
  for (const auto& e : d.train) {
    train_inputs.insert(e.input);
    if (d.language.surface(e.input) != e.output) problems.push_back("train output mismatch for " + e.input);
  }
  for (const auto& e : d.test) {
    if (train_inputs.count(e.input)) problems.push_back("input in both splits: " + e.input);
    if (d.test_language.surface(e.input) != e.output) problems.push_back("test output mismatch for " + e.input);
  }
  if (d.condition.kind == Condition::Kind::Universal && d.condition.universal) {
    const auto& u = *d.condition.universal;
    for (const auto& e : d.train)
      if (skeleton(e.input) != u.premise.input_template) problems.push_back("train input off premise template: " + e.input);
    for (const auto& e : d.test)
      if (skeleton(e.input) != u.conclusion.input_template) problems.push_back("test input off conclusion template: " + e.input);
  }
  return problems;
}

// ---- file format ----------------------------------------------------------

namespace {

json language_json(const Language& l) {
  return json{{"id", l.id},
              {"seed", l.seed},
              {"consistency", consistency_name(l.consistency)},
              {"constraint_set", l.constraint_set.name()},
              {"behavior", l.behavior},
              {"ranking", l.ranking.to_string()},
              {"consonants", l.consonants},
              {"vowels", l.vowels},
              {"epen_c", std::string(1, l.epen_c)},
              {"epen_v", std::string(1, l.epen_v)}};
}

Language language_from_json(const json& j) {
  Language l;
  l.id = j.at("id").get<std::string>();
  l.seed = j.at("seed").get<std::uint64_t>();
  l.consistency = consistency_from_name(j.at("consistency").get<std::string>());
  l.constraint_set = ConstraintSet::from_name(j.at("constraint_set").get<std::string>());
  l.behavior = j.at("behavior").get<int>();
  l.ranking = Ranking::parse(j.at("ranking").get<std::string>());
  l.consonants = j.at("consonants").get<std::string>();
  l.vowels = j.at("vowels").get<std::string>();
  const auto ec = j.at("epen_c").get<std::string>();
  const auto ev = j.at("epen_v").get<std::string>();
  if (ec.size() != 1 || ev.size() != 1) throw InvalidInput("epenthetic segments must be single symbols");
  l.epen_c = ec[0];
  l.epen_v = ev[0];
  return l;
}

json example_json(const Example& e) { return json{{"input", e.input}, {"output", e.output}}; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string dataset_to_jsonl(const Dataset& d) {
  std::string out;
  for (const auto& e : d.train) out += example_json(e).dump() + "\n";
  for (const auto& e : d.test) out += example_json(e).dump() + "\n";
  return out;
}

std::string dataset_metadata(const Dataset& d) {
  json templates = json::object();
  if (d.language.consistency != Consistency::Consistent) {
    std::set<std::string> seen;
    for (const auto* split : {&d.train, &d.test})
      for (const auto& e : *split) seen.insert(skeleton(e.input));
    for (const auto& t : seen) {
      const auto b = d.language.behavior_for(t);
      templates[t] = json{{"constraint_set", b.set.name()}, {"class", b.klass}, {"ranking", b.ranking.to_string()}};
    }
  }
  int ties = 0;
  for (const auto& e : d.train) ties += evaluate(e.input, d.language.grammar_for(e.input)).tied;
  for (const auto& e : d.test) ties += evaluate(e.input, d.test_language.grammar_for(e.input)).tied;
  json j{{"id", d.language.id},
         {"condition", d.condition.tag()},
         {"seed", d.seed},
         {"n_train", d.train.size()},
         {"n_test", d.test.size()},
         {"language", language_json(d.language)},
         {"test_language", language_json(d.test_language)},
         {"templates", templates},
         {"ties", ties}};
  return j.dump(2) + "\n";
}

namespace {

Dataset parse_dataset(const std::string& jsonl, const std::string& metadata) {
  const json meta = json::parse(metadata);
  Dataset d;
  d.language = language_from_json(meta.at("language"));
  d.test_language = language_from_json(meta.at("test_language"));
  d.condition = Condition::parse(meta.at("condition").get<std::string>());
  d.seed = meta.at("seed").get<std::uint64_t>();
  const auto n_train = meta.at("n_train").get<std::size_t>();
  const auto n_test = meta.at("n_test").get<std::size_t>();
  std::istringstream in(jsonl);
  std::string line;
  std::vector<Example> all;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    all.push_back({j.at("input").get<std::string>(), j.at("output").get<std::string>()});
  }
  if (all.size() != n_train + n_test)
    throw InvalidInput("dataset has " + std::to_string(all.size()) + " lines, metadata declares " + std::to_string(n_train + n_test));
  d.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  d.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
  return d;
}

}  // namespace

Dataset dataset_from_files(const std::string& jsonl, const std::string& metadata) {
  try {
    return parse_dataset(jsonl, metadata);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed dataset: ") + e.what());
  }
}

void write_dataset(const Dataset& d, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  const fs::path stem = fs::path(directory) / d.language.id;
  std::ofstream(stem.string() + ".jsonl", std::ios::binary) << dataset_to_jsonl(d);
  std::ofstream(stem.string() + ".meta.json", std::ios::binary) << dataset_metadata(d);
}

Dataset read_dataset(const std::string& stem_path) {
  return dataset_from_files(slurp(stem_path + ".jsonl"), slurp(stem_path + ".meta.json"));
}

}  // namespace otmeta
