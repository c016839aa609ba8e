#pragma once

// Optimality-Theory engine for basic CV syllable theory: candidate
// generation, violation counting, ranked evaluation and the typology of
// ranking behaviours.

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace otmeta {

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Klass { Consonant, Vowel };

/// Global alphabet: 20 consonants and 10 vowels, one character each.
inline constexpr std::string_view kConsonants = "bcdfghjklmnpqrstvwxz";
inline constexpr std::string_view kVowels = "aeiouyAEIO";
inline constexpr char kBoundary = '.';

struct Phoneme {
  char symbol;
  Klass klass;
};

bool is_consonant(char c);
bool is_vowel(char c);
bool in_alphabet(char c);
/// Throws InvalidInput for symbols outside the alphabet.
Klass klass_of(char c);

/// C/V skeleton of a phoneme string ("kep" -> "CVC"). Boundaries map to '.'.
std::string skeleton(std::string_view s);

enum class Constraint : int { Onset = 0, NoCoda, NoInsertion, NoDeletion, NoOnset, Coda };
inline constexpr std::size_t kNumConstraintKinds = 6;

std::string_view constraint_name(Constraint c);
Constraint constraint_from_name(std::string_view name);

/// NoInsertion and NoDeletion plus one member of {Onset, NoOnset} and one of
/// {NoCoda, Coda}.
struct ConstraintSet {
  Constraint onset_like = Constraint::Onset;
  Constraint coda_like = Constraint::NoCoda;

  static ConstraintSet canonical() { return {}; }
  /// All four output-constraint combinations; canonical first.
  static std::array<ConstraintSet, 4> all();

  std::array<Constraint, 4> members() const {
    return {onset_like, coda_like, Constraint::NoInsertion, Constraint::NoDeletion};
  }
  bool contains(Constraint c) const;
  bool is_canonical() const { return onset_like == Constraint::Onset && coda_like == Constraint::NoCoda; }
  /// Index in all(): 0 = Onset/NoCoda, 1 = NoOnset/NoCoda, 2 = Onset/Coda, 3 = NoOnset/Coda.
  int index() const;
  std::string name() const;
  static ConstraintSet from_name(std::string_view name);

  friend bool operator==(const ConstraintSet&, const ConstraintSet&) = default;
};

/// Total order over the four constraints of a set, highest-ranked first.
struct Ranking {
  std::array<Constraint, 4> order{Constraint::Onset, Constraint::NoCoda, Constraint::NoInsertion,
                                  Constraint::NoDeletion};

  ConstraintSet constraint_set() const;
  /// All 24 permutations of the set's members, in lexicographic enum order.
  static std::vector<Ranking> all_for(ConstraintSet set);
  std::string to_string() const;  // "NoCoda>>NoDeletion>>NoInsertion>>Onset"
  static Ranking parse(std::string_view text);

  friend bool operator==(const Ranking&, const Ranking&) = default;
};

struct ViolationProfile {
  std::array<int, kNumConstraintKinds> counts{};

  int operator[](Constraint c) const { return counts[static_cast<std::size_t>(c)]; }
  int& operator[](Constraint c) { return counts[static_cast<std::size_t>(c)]; }
  /// Counts in ranking order, for lexicographic comparison.
  std::array<int, 4> ranked(const Ranking& r) const;

  friend bool operator==(const ViolationProfile&, const ViolationProfile&) = default;
};

/// -1 marks an epenthetic slot.
inline constexpr int kEpenthetic = -1;

struct Slot {
  char symbol = '\0';
  int source = kEpenthetic;

  bool epenthetic() const { return source == kEpenthetic; }
  friend bool operator==(const Slot&, const Slot&) = default;
};

struct Syllable {
  std::optional<Slot> onset;
  Slot nucleus;
  std::optional<Slot> coda;

  friend bool operator==(const Syllable&, const Syllable&) = default;
};

struct Candidate {
  std::vector<Syllable> syllables;
  std::vector<int> deletions;  // sorted input indices left unparsed

  int insertions() const;
  /// ".ke.pa." style rendering; the empty parse renders as "".
  std::string surface() const;
  /// Checks the structural invariants against the input it parses.
  bool well_formed(std::string_view input, char epen_c, char epen_v) const;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// A ranked constraint set with its epenthetic segments; everything the
/// evaluator needs to map an input to its surface form.
struct Grammar {
  Ranking ranking;
  char epen_c = 'z';
  char epen_v = 'e';
};

inline constexpr std::size_t kDefaultMaxInputLength = 8;

/// Full candidate set. Throws InvalidInput on unknown symbols, overlong input,
/// or epenthetic segments of the wrong class.
std::vector<Candidate> gen_candidates(std::string_view input, char epen_c, char epen_v,
                                      std::size_t max_len = kDefaultMaxInputLength);

/// Counts for every constraint kind; members outside `set` are zeroed.
ViolationProfile violations(const Candidate& c, ConstraintSet set);

struct Evaluation {
  std::string surface;
  ViolationProfile profile;
  bool tied = false;  // another surface had the same ranked profile
};

/// Lexicographic minimum under the ranking, ties broken by fewer deletions,
/// fewer insertions, then the smaller surface string. Dynamic programme over
/// input positions.
Evaluation evaluate(std::string_view input, const Grammar& g, std::size_t max_len = kDefaultMaxInputLength);
std::string optimize(std::string_view input, const Grammar& g, std::size_t max_len = kDefaultMaxInputLength);

/// Exhaustive reference: enumerate gen_candidates and sort.
Candidate oracle_optimal_candidate(std::string_view input, const Grammar& g,
                                   std::size_t max_len = kDefaultMaxInputLength);
std::string oracle_optimize(std::string_view input, const Grammar& g, std::size_t max_len = kDefaultMaxInputLength);

/// Equivalence classes of the 24 rankings of a constraint set, where two
/// rankings are equivalent iff they agree on every probe input (alphabet
/// {z,x,n,e,u}, lengths 0..4, epenthesis z/e).
class Typology {
 public:
  explicit Typology(ConstraintSet set);

  ConstraintSet constraint_set() const { return set_; }
  std::size_t num_classes() const { return classes_.size(); }
  int class_of(const Ranking& r) const;
  const std::vector<Ranking>& members(int klass) const { return classes_.at(static_cast<std::size_t>(klass)); }
  /// First member in enumeration order; used when a class must be realised.
  const Ranking& representative(int klass) const { return members(klass).front(); }

 private:
  ConstraintSet set_;
  std::vector<std::vector<Ranking>> classes_;
};

/// Cached per constraint set; safe to call concurrently.
const Typology& typology(ConstraintSet set);

/// Class id of a ranking within its own constraint set.
int behavior_class(const Ranking& r);

/// Probe inputs used to define equivalence between rankings.
std::vector<std::string> probe_inputs(std::size_t max_len = 4);

}  // namespace otmeta
