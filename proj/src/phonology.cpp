#include "otmeta/phonology.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace otmeta {

bool is_consonant(char c) { return c != '\0' && kConsonants.find(c) != std::string_view::npos; }
bool is_vowel(char c) { return c != '\0' && kVowels.find(c) != std::string_view::npos; }
bool in_alphabet(char c) { return is_consonant(c) || is_vowel(c); }

Klass klass_of(char c) {
  if (is_consonant(c)) return Klass::Consonant;
  if (is_vowel(c)) return Klass::Vowel;
  throw InvalidInput(std::string("symbol '") + c + "' is not in the phoneme alphabet");
}

std::string skeleton(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(c == kBoundary ? kBoundary : (klass_of(c) == Klass::Consonant ? 'C' : 'V'));
  return out;
}

namespace {

constexpr std::array<std::string_view, kNumConstraintKinds> kConstraintNames = {
    "Onset", "NoCoda", "NoInsertion", "NoDeletion", "NoOnset", "Coda"};

constexpr std::size_t idx(Constraint c) { return static_cast<std::size_t>(c); }

void validate_input(std::string_view input, char epen_c, char epen_v, std::size_t max_len) {
  if (input.size() > max_len)
    throw InvalidInput("input of length " + std::to_string(input.size()) + " exceeds maximum " +
                       std::to_string(max_len));
  for (char c : input) klass_of(c);
  if (!is_consonant(epen_c)) throw InvalidInput(std::string("epenthetic consonant '") + epen_c + "' is not a consonant");
  if (!is_vowel(epen_v)) throw InvalidInput(std::string("epenthetic vowel '") + epen_v + "' is not a vowel");
}

}  // namespace

std::string_view constraint_name(Constraint c) { return kConstraintNames[idx(c)]; }

Constraint constraint_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kConstraintNames.size(); ++i)
    if (kConstraintNames[i] == name) return static_cast<Constraint>(i);
  throw InvalidInput("unknown constraint '" + std::string(name) + "'");
}

std::array<ConstraintSet, 4> ConstraintSet::all() {
  return {ConstraintSet{Constraint::Onset, Constraint::NoCoda}, ConstraintSet{Constraint::NoOnset, Constraint::NoCoda},
          ConstraintSet{Constraint::Onset, Constraint::Coda}, ConstraintSet{Constraint::NoOnset, Constraint::Coda}};
}

bool ConstraintSet::contains(Constraint c) const {
  return c == onset_like || c == coda_like || c == Constraint::NoInsertion || c == Constraint::NoDeletion;
}

int ConstraintSet::index() const {
  return (onset_like == Constraint::NoOnset ? 1 : 0) + (coda_like == Constraint::Coda ? 2 : 0);
}

std::string ConstraintSet::name() const {
  return std::string(constraint_name(onset_like)) + "/" + std::string(constraint_name(coda_like));
}

ConstraintSet ConstraintSet::from_name(std::string_view name) {
  const auto slash = name.find('/');
  if (slash == std::string_view::npos) throw InvalidInput("constraint set must be written as A/B, got '" + std::string(name) + "'");
  ConstraintSet s{constraint_from_name(name.substr(0, slash)), constraint_from_name(name.substr(slash + 1))};
  if ((s.onset_like != Constraint::Onset && s.onset_like != Constraint::NoOnset) ||
      (s.coda_like != Constraint::NoCoda && s.coda_like != Constraint::Coda))
    throw InvalidInput("invalid constraint set '" + std::string(name) + "'");
  return s;
}

ConstraintSet Ranking::constraint_set() const {
  ConstraintSet s{};
  int onset = 0, coda = 0, ins = 0, del = 0;
  for (Constraint c : order) {
    switch (c) {
      case Constraint::Onset:
      case Constraint::NoOnset:
        s.onset_like = c;
        ++onset;
        break;
      case Constraint::NoCoda:
      case Constraint::Coda:
        s.coda_like = c;
        ++coda;
        break;
      case Constraint::NoInsertion: ++ins; break;
      case Constraint::NoDeletion: ++del; break;
    }
  }
  if (onset != 1 || coda != 1 || ins != 1 || del != 1) throw InvalidInput("ranking is not a valid constraint set order: " + to_string());
  return s;
}

std::vector<Ranking> Ranking::all_for(ConstraintSet set) {
  auto members = set.members();
  std::sort(members.begin(), members.end());
  std::vector<Ranking> out;
  do {
    out.push_back(Ranking{members});
  } while (std::next_permutation(members.begin(), members.end()));
  return out;
}

std::string Ranking::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) s += ">>";
    s += constraint_name(order[i]);
  }
  return s;
}

Ranking Ranking::parse(std::string_view text) {
  Ranking r;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto next = text.find(">>", pos);
    if ((i < 3) == (next == std::string_view::npos)) throw InvalidInput("ranking must list four constraints: '" + std::string(text) + "'");
    r.order[i] = constraint_from_name(text.substr(pos, next == std::string_view::npos ? text.npos : next - pos));
    pos = next + 2;
  }
  r.constraint_set();  // validates
  return r;
}

std::array<int, 4> ViolationProfile::ranked(const Ranking& r) const {
  return {(*this)[r.order[0]], (*this)[r.order[1]], (*this)[r.order[2]], (*this)[r.order[3]]};
}

int Candidate::insertions() const {
  int n = 0;
  for (const auto& s : syllables) {
    n += s.onset && s.onset->epenthetic();
    n += s.nucleus.epenthetic();
    n += s.coda && s.coda->epenthetic();
  }
  return n;
}

std::string Candidate::surface() const {
  if (syllables.empty()) return "";
  std::string out(1, kBoundary);
  for (const auto& s : syllables) {
    if (s.onset) out.push_back(s.onset->symbol);
    out.push_back(s.nucleus.symbol);
    if (s.coda) out.push_back(s.coda->symbol);
    out.push_back(kBoundary);
  }
  return out;
}

bool Candidate::well_formed(std::string_view input, char epen_c, char epen_v) const {
  std::vector<int> seen(input.size(), 0);
  int last_source = -1;
  auto check_slot = [&](const Slot& slot, Klass want, char epen) {
    if (slot.epenthetic()) return slot.symbol == epen;
    if (slot.source < 0 || static_cast<std::size_t>(slot.source) >= input.size()) return false;
    if (slot.source <= last_source) return false;  // order preserved
    last_source = slot.source;
    ++seen[static_cast<std::size_t>(slot.source)];
    return slot.symbol == input[static_cast<std::size_t>(slot.source)] && klass_of(slot.symbol) == want;
  };
  for (const auto& s : syllables) {
    bool any_input = false;
    if (s.onset) {
      if (!check_slot(*s.onset, Klass::Consonant, epen_c)) return false;
      any_input |= !s.onset->epenthetic();
    }
    if (!check_slot(s.nucleus, Klass::Vowel, epen_v)) return false;
    any_input |= !s.nucleus.epenthetic();
    if (s.coda) {
      if (!check_slot(*s.coda, Klass::Consonant, epen_c)) return false;
      any_input |= !s.coda->epenthetic();
    }
    if (!any_input) return false;
  }
  for (int d : deletions) {
    if (d < 0 || static_cast<std::size_t>(d) >= input.size()) return false;
    ++seen[static_cast<std::size_t>(d)];
  }
  return std::all_of(seen.begin(), seen.end(), [](int n) { return n == 1; });
}

// ---------------------------------------------------------------------------
// GEN: choose the set of parsed input segments, then every syllabification of
// the parsed string into (C)V(C) syllables with the permitted epenthesis.

namespace {

struct GenContext {
  std::vector<std::pair<char, int>> kept;  // (symbol, input index)
  char epen_c;
  char epen_v;
  std::vector<int> deletions;
  std::vector<Syllable> current;
  std::vector<Candidate>* out;
};

void syllabify(GenContext& ctx, std::size_t j) {
  if (j == ctx.kept.size()) {
    ctx.out->push_back(Candidate{ctx.current, ctx.deletions});
    return;
  }
  enum class Fill { None, Input, Epenthetic };
  for (Fill onset : {Fill::None, Fill::Input, Fill::Epenthetic}) {
    for (Fill nucleus : {Fill::Input, Fill::Epenthetic}) {
      for (Fill coda : {Fill::None, Fill::Input}) {
        if (onset == Fill::Epenthetic && nucleus != Fill::Input) continue;
        if (nucleus == Fill::Epenthetic && onset != Fill::Input && coda != Fill::Input) continue;
        std::size_t k = j;
        Syllable syl;
        bool ok = true;
        auto take = [&](Klass want) -> std::optional<Slot> {
          if (k >= ctx.kept.size() || klass_of(ctx.kept[k].first) != want) return std::nullopt;
          Slot s{ctx.kept[k].first, ctx.kept[k].second};
          ++k;
          return s;
        };
        if (onset == Fill::Input) {
          syl.onset = take(Klass::Consonant);
          ok = ok && syl.onset.has_value();
        } else if (onset == Fill::Epenthetic) {
          syl.onset = Slot{ctx.epen_c, kEpenthetic};
        }
        if (ok) {
          if (nucleus == Fill::Input) {
            auto n = take(Klass::Vowel);
            ok = n.has_value();
            if (ok) syl.nucleus = *n;
          } else {
            syl.nucleus = Slot{ctx.epen_v, kEpenthetic};
          }
        }
        if (ok && coda == Fill::Input) {
          syl.coda = take(Klass::Consonant);
          ok = syl.coda.has_value();
        }
        if (!ok) continue;
        ctx.current.push_back(syl);
        syllabify(ctx, k);
        ctx.current.pop_back();
      }
    }
  }
}

}  // namespace

std::vector<Candidate> gen_candidates(std::string_view input, char epen_c, char epen_v, std::size_t max_len) {
  validate_input(input, epen_c, epen_v, max_len);
  std::vector<Candidate> out;
  const std::size_t n = input.size();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    GenContext ctx{{}, epen_c, epen_v, {}, {}, &out};
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        ctx.kept.emplace_back(input[i], static_cast<int>(i));
      } else {
        ctx.deletions.push_back(static_cast<int>(i));
      }
    }
    syllabify(ctx, 0);
  }
  return out;
}

ViolationProfile violations(const Candidate& c, ConstraintSet set) {
  ViolationProfile p;
  for (const auto& s : c.syllables) {
    if (s.onset) {
      ++p[Constraint::NoOnset];
    } else {
      ++p[Constraint::Onset];
    }
    if (s.coda) {
      ++p[Constraint::NoCoda];
    } else {
      ++p[Constraint::Coda];
    }
  }
  p[Constraint::NoInsertion] = c.insertions();
  p[Constraint::NoDeletion] = static_cast<int>(c.deletions.size());
  for (std::size_t k = 0; k < kNumConstraintKinds; ++k)
    if (!set.contains(static_cast<Constraint>(k))) p.counts[k] = 0;
  return p;
}

// ---------------------------------------------------------------------------
// EVAL by dynamic programming. The parse is an automaton over input positions
// with states Boundary (between syllables), Onset (input onset taken, nucleus
// pending) and Nucleus (nucleus taken, coda or close pending). The table is
// filled right to left so that prepending a transition's string to the best
// suffix preserves the string tie-break order.

namespace {

struct Partial {
  std::array<int, kNumConstraintKinds> counts{};
  std::string text;  // surface without the leading boundary
  bool valid = false;
  bool tied = false;
};

struct RankKey {
  const Ranking* ranking;

  auto key(const Partial& p) const {
    auto c = [&](Constraint k) { return p.counts[idx(k)]; };
    return std::make_tuple(c(ranking->order[0]), c(ranking->order[1]), c(ranking->order[2]), c(ranking->order[3]),
                           c(Constraint::NoDeletion), c(Constraint::NoInsertion));
  }
};

void relax(Partial& best, const Partial& suffix, std::initializer_list<Constraint> add, std::string_view prefix,
           const RankKey& rk, const ConstraintSet& set) {
  if (!suffix.valid) return;
  Partial cand = suffix;
  for (Constraint k : add)
    if (set.contains(k)) ++cand.counts[idx(k)];
  cand.text.insert(0, prefix);
  if (!best.valid) {
    best = std::move(cand);
    return;
  }
  const auto kb = rk.key(best), kc = rk.key(cand);
  if (kc < kb || (kc == kb && cand.text < best.text)) {
    const bool tie = (kc == kb && cand.text != best.text) || (kc == kb && best.tied);
    cand.tied = tie || cand.tied;
    best = std::move(cand);
  } else if (kc == kb && cand.text != best.text) {
    best.tied = true;
  }
}

}  // namespace

Evaluation evaluate(std::string_view input, const Grammar& g, std::size_t max_len) {
  validate_input(input, g.epen_c, g.epen_v, max_len);
  const ConstraintSet set = g.ranking.constraint_set();
  const RankKey rk{&g.ranking};
  const std::size_t n = input.size();
  std::vector<Partial> boundary(n + 1), onset(n + 1), nucleus(n + 1);
  boundary[n].valid = true;
  const std::string ec(1, g.epen_c), ev(1, g.epen_v);
  using C = Constraint;

  for (std::size_t i = n + 1; i-- > 0;) {
    const bool has = i < n;
    const char s = has ? input[i] : '\0';
    const bool cons = has && is_consonant(s);
    const bool vow = has && is_vowel(s);
    const std::string sym = has ? std::string(1, s) : std::string();

    if (has) {
      Partial& b = boundary[i];
      relax(b, boundary[i + 1], {C::NoDeletion}, "", rk, set);
      if (cons) {
        relax(b, onset[i + 1], {C::NoOnset}, sym, rk, set);
        // epenthetic nucleus closed by this consonant as coda
        relax(b, boundary[i + 1], {C::Onset, C::NoInsertion, C::NoCoda}, ev + sym + ".", rk, set);
      }
      if (vow) {
        relax(b, nucleus[i + 1], {C::Onset}, sym, rk, set);
        relax(b, nucleus[i + 1], {C::NoOnset, C::NoInsertion}, ec + sym, rk, set);
      }
    }

    Partial& nu = nucleus[i];
    relax(nu, boundary[i], {C::Coda}, ".", rk, set);
    if (has) {
      relax(nu, nucleus[i + 1], {C::NoDeletion}, "", rk, set);
      if (cons) relax(nu, boundary[i + 1], {C::NoCoda}, sym + ".", rk, set);
    }

    Partial& on = onset[i];
    relax(on, nucleus[i], {C::NoInsertion}, ev, rk, set);
    if (has) {
      relax(on, onset[i + 1], {C::NoDeletion}, "", rk, set);
      if (vow) relax(on, nucleus[i + 1], {}, sym, rk, set);
    }
  }

  const Partial& best = boundary[0];
  Evaluation e;
  e.surface = best.text.empty() ? std::string() : "." + best.text;
  e.profile.counts = best.counts;
  e.tied = best.tied;
  return e;
}

std::string optimize(std::string_view input, const Grammar& g, std::size_t max_len) {
  return evaluate(input, g, max_len).surface;
}

Candidate oracle_optimal_candidate(std::string_view input, const Grammar& g, std::size_t max_len) {
  const ConstraintSet set = g.ranking.constraint_set();
  auto cands = gen_candidates(input, g.epen_c, g.epen_v, max_len);
  struct Scored {
    std::array<int, 4> ranked;
    int del;
    int ins;
    std::string surface;
    std::size_t index;
  };
  std::vector<Scored> scored;
  scored.reserve(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto p = violations(cands[i], set);
    scored.push_back({p.ranked(g.ranking), p[Constraint::NoDeletion], p[Constraint::NoInsertion], cands[i].surface(), i});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    return std::tie(a.ranked, a.del, a.ins, a.surface, a.index) < std::tie(b.ranked, b.del, b.ins, b.surface, b.index);
  });
  return cands[scored.front().index];
}

std::string oracle_optimize(std::string_view input, const Grammar& g, std::size_t max_len) {
  return oracle_optimal_candidate(input, g, max_len).surface();
}

// ---------------------------------------------------------------------------

std::vector<std::string> probe_inputs(std::size_t max_len) {
  static constexpr std::string_view alphabet = "zxneu";
  std::vector<std::string> out{""};
  std::vector<std::string> frontier{""};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    for (const auto& p : frontier)
      for (char c : alphabet) next.push_back(p + c);
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

Typology::Typology(ConstraintSet set) : set_(set) {
  const auto probes = probe_inputs(4);
  std::map<std::vector<std::string>, std::size_t> seen;
  for (const auto& r : Ranking::all_for(set)) {
    std::vector<std::string> outputs;
    outputs.reserve(probes.size());
    const Grammar g{r, 'z', 'e'};
    for (const auto& p : probes) outputs.push_back(optimize(p, g));
    auto [it, inserted] = seen.emplace(std::move(outputs), classes_.size());
    if (inserted) classes_.emplace_back();
    classes_[it->second].push_back(r);
  }
}

int Typology::class_of(const Ranking& r) const {
  for (std::size_t k = 0; k < classes_.size(); ++k)
    for (const auto& m : classes_[k])
      if (m == r) return static_cast<int>(k);
  throw InvalidInput("ranking " + r.to_string() + " is not over constraint set " + set_.name());
}

const Typology& typology(ConstraintSet set) {
  static std::once_flag once;
  static std::array<std::unique_ptr<Typology>, 4> cache;
  std::call_once(once, [] {
    for (const auto& s : ConstraintSet::all()) cache[static_cast<std::size_t>(s.index())] = std::make_unique<Typology>(s);
  });
  return *cache[static_cast<std::size_t>(set.index())];
}

int behavior_class(const Ranking& r) { return typology(r.constraint_set()).class_of(r); }

}  // namespace otmeta
