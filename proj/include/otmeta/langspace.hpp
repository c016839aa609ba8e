#pragma once

// Sampling languages from the typology, building datasets for every
// experimental condition, and their on-disk format.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "otmeta/phonology.hpp"
#include "otmeta/rng.hpp"

namespace otmeta {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Consistency { Consistent, InconsistentRanking, InconsistentSet };

std::string_view consistency_name(Consistency c);
Consistency consistency_from_name(std::string_view name);

/// Behaviour assigned to one input template of an inconsistent language.
struct TemplateBehavior {
  ConstraintSet set;
  int klass = 0;
  Ranking ranking;

  friend bool operator==(const TemplateBehavior&, const TemplateBehavior&) = default;
};

struct Language {
  std::string id;
  std::uint64_t seed = 0;
  Consistency consistency = Consistency::Consistent;
  ConstraintSet constraint_set;  // for InconsistentSet: unused, drawn per template
  int behavior = 0;              // class id within constraint_set's typology
  Ranking ranking;               // representative of `behavior`
  std::string consonants;
  std::string vowels;
  char epen_c = 'z';
  char epen_v = 'e';

  std::string inventory() const { return consonants + vowels; }
  bool owns(char c) const { return inventory().find(c) != std::string::npos; }
  /// Behaviour governing inputs with this C/V skeleton. For inconsistent
  /// languages this is a deterministic function of (seed, template).
  TemplateBehavior behavior_for(const std::string& input_template) const;
  Grammar grammar_for(std::string_view input) const;
  /// The language's output for an input.
  std::string surface(std::string_view input) const;

  friend bool operator==(const Language&, const Language&) = default;
};

/// Options for sample_language beyond the default consistent Onset/NoCoda
/// draw.
struct LanguageSpec {
  ConstraintSet set = ConstraintSet::canonical();
  Consistency consistency = Consistency::Consistent;
  /// Restrict the uniform class draw to these ids (empty: all classes).
  std::vector<int> allowed_classes;
};

Language sample_language(Rng& rng, const LanguageSpec& spec = {});

std::string sample_input(const Language& lang, Rng& rng, std::size_t min_len = 1, std::size_t max_len = 5);
/// Input whose skeleton equals `pattern` ("VC" etc.).
std::string sample_input_matching(const Language& lang, Rng& rng, std::string_view pattern);

// ---------------------------------------------------------------------------

struct Mapping {
  std::string input_template;  // "VC"
  std::string output_pattern;  // ".CVC."

  std::string to_string() const { return input_template + "->" + output_pattern; }
  friend bool operator==(const Mapping&, const Mapping&) = default;
  friend auto operator<=>(const Mapping&, const Mapping&) = default;
};

/// premise present => conclusion present, in every canonical behaviour class.
struct Universal {
  Mapping premise;
  Mapping conclusion;
  std::vector<int> premise_classes;  // classes exhibiting the premise

  std::string to_string() const { return premise.to_string() + "=>" + conclusion.to_string(); }
  friend bool operator==(const Universal&, const Universal&) = default;
};

/// Templates V, C, CV, VC, CC, VV.
std::vector<std::string> universal_template_universe();
/// Output pattern of a template under a grammar (skeleton of the surface).
std::string outcome_pattern(const std::string& input_template, const Grammar& g);
/// Implicational dependencies over the template universe. Mappings whose
/// output is empty are excluded, as are premises or conclusions that hold in
/// every class.
std::vector<Universal> enumerate_universals();

// ---------------------------------------------------------------------------

struct Condition {
  enum class Kind { Standard, AltConstraints, InconsistentRanking, InconsistentSet, NewPhonemes, LengthHoldout, Universal };
  Kind kind = Kind::Standard;
  int holdout_length = 0;       // LengthHoldout
  std::optional<Universal> universal;

  static Condition standard() { return {}; }
  static Condition length_holdout(int k) { return {Kind::LengthHoldout, k, std::nullopt}; }
  static Condition implication(Universal u) { return {Kind::Universal, 0, std::move(u)}; }
  static Condition of(Kind k) { return {k, 0, std::nullopt}; }

  /// "standard", "length-holdout(5)", "universal(VC->.CVC.=>V->.CV.)", ...
  std::string tag() const;
  static Condition parse(std::string_view tag);

  friend bool operator==(const Condition&, const Condition&) = default;
};

struct Example {
  std::string input;
  std::string output;

  friend bool operator==(const Example&, const Example&) = default;
};

struct Dataset {
  Language language;
  /// Generator of the test half; differs from `language` only for new-phonemes.
  Language test_language;
  Condition condition;
  std::vector<Example> train;
  std::vector<Example> test;
  std::uint64_t seed = 0;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct DatasetOptions {
  std::size_t n_train = 100;
  std::size_t n_test = 100;
  std::size_t min_len = 1;
  std::size_t max_len = 5;
  int retry_cap = 1000;
};

/// Builds train/test splits under `condition`. The language must already
/// carry the condition's constraint set and consistency. Throws
/// GenerationError when disjoint splits cannot be drawn.
Dataset make_dataset(const Language& lang, Rng& rng, const Condition& condition, const DatasetOptions& opts = {});

/// Draws a language suited to the condition (alternate set, inconsistency,
/// premise-bearing class) and builds its dataset.
Dataset sample_dataset(Rng& rng, const Condition& condition, const DatasetOptions& opts = {},
                       std::optional<ConstraintSet> set = std::nullopt);

/// Re-derives every output with the dataset's generators; empty when valid.
std::vector<std::string> validate_dataset(const Dataset& d);

// ---- file format ----------------------------------------------------------

/// Train examples then test examples, one {"input","output"} object per line.
std::string dataset_to_jsonl(const Dataset& d);
/// Sidecar metadata (JSON text).
std::string dataset_metadata(const Dataset& d);
Dataset dataset_from_files(const std::string& jsonl, const std::string& metadata);

void write_dataset(const Dataset& d, const std::string& directory);
/// Reads `<stem>.jsonl` and `<stem>.meta.json`.
Dataset read_dataset(const std::string& stem_path);

}  // namespace otmeta
