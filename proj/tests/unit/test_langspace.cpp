#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <string>

#include "../support/oracles.hpp"
#include "otmeta/langspace.hpp"

using namespace otmeta;

namespace {

std::set<char> symbols_of(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(Langspace, ClassFrequenciesAreUniform) {
  Rng rng(2024);
  const int n = 8000;
  std::map<int, int> counts;
  for (int i = 0; i < n; ++i) ++counts[sample_language(rng).behavior];
  ASSERT_EQ(counts.size(), 8u);
  const double p = 1.0 / 8.0, sigma = std::sqrt(n * p * (1 - p));
  for (const auto& [k, c] : counts) EXPECT_LT(std::abs(c - n * p), 4 * sigma) << "class " << k;
}

TEST(Langspace, InventoriesAndEpenthesis) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const Language l = sample_language(rng);
    EXPECT_GE(l.consonants.size(), 2u);
    EXPECT_LE(l.consonants.size(), 4u);
    EXPECT_GE(l.vowels.size(), 2u);
    EXPECT_LE(l.vowels.size(), 4u);
    EXPECT_EQ(symbols_of(l.consonants).size(), l.consonants.size());
    for (char c : l.consonants) EXPECT_TRUE(is_consonant(c));
    for (char v : l.vowels) EXPECT_TRUE(is_vowel(v));
    EXPECT_NE(l.consonants.find(l.epen_c), std::string::npos);
    EXPECT_NE(l.vowels.find(l.epen_v), std::string::npos);
  }
}

TEST(Langspace, SamplingIsDeterministic) {
  Rng a(99), b(99);
  EXPECT_EQ(sample_language(a), sample_language(b));
  Rng c(3), d(3);
  EXPECT_EQ(sample_dataset(c, Condition::standard()), sample_dataset(d, Condition::standard()));
}

TEST(Langspace, InputLengthsAreUniform) {
  Rng rng(17);
  const Language l = sample_language(rng);
  const int n = 10000;
  std::map<std::size_t, int> hist;
  for (int i = 0; i < n; ++i) {
    const auto s = sample_input(l, rng);
    ASSERT_GE(s.size(), 1u);
    ASSERT_LE(s.size(), 5u);
    for (char ch : s) ASSERT_TRUE(l.owns(ch));
    ++hist[s.size()];
  }
  const double p = 0.2, sigma = std::sqrt(n * p * (1 - p));
  for (const auto& [len, c] : hist) EXPECT_LT(std::abs(c - n * p), 4 * sigma) << "length " << len;
  const auto one = sample_input(l, rng, 1, 1);
  EXPECT_EQ(one.size(), 1u);
}

TEST(Langspace, StandardDatasetIsValidAndDisjoint) {
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    const Dataset d = sample_dataset(rng, Condition::standard());
    EXPECT_EQ(d.train.size(), 100u);
    EXPECT_EQ(d.test.size(), 100u);
    EXPECT_TRUE(validate_dataset(d).empty());
    std::set<std::string> train;
    for (const auto& e : d.train) {
      train.insert(e.input);
      EXPECT_EQ(e.output, optimize(e.input, d.language.grammar_for(e.input)));
    }
    for (const auto& e : d.test) EXPECT_FALSE(train.count(e.input)) << e.input;
  }
}

TEST(Langspace, LengthHoldout) {
  Rng rng(12);
  for (int k : {5, 6}) {
    const Dataset d = sample_dataset(rng, Condition::length_holdout(k));
    for (const auto& e : d.train) EXPECT_LE(e.input.size(), static_cast<std::size_t>(k - 1));
    for (const auto& e : d.test) EXPECT_EQ(e.input.size(), static_cast<std::size_t>(k));
  }
  Rng bad(1);
  const Language l = sample_language(bad);
  EXPECT_THROW(make_dataset(l, bad, Condition::length_holdout(1)), GenerationError);
}

TEST(Langspace, NewPhonemesAreDisjoint) {
  Rng rng(21);
  for (int i = 0; i < 10; ++i) {
    const Dataset d = sample_dataset(rng, Condition::of(Condition::Kind::NewPhonemes));
    std::set<char> seen;
    for (const auto& e : d.train)
      for (char ch : e.input + e.output) seen.insert(ch);
    for (const auto& e : d.test)
      for (char ch : e.input + e.output)
        if (ch != kBoundary) EXPECT_FALSE(seen.count(ch)) << e.input << " -> " << e.output;
    EXPECT_EQ(d.test_language.behavior, d.language.behavior);
    EXPECT_TRUE(validate_dataset(d).empty());
  }
}

TEST(Langspace, InconsistentRankingCanDeleteVVV) {
  Rng rng(4);
  bool found = false;
  for (int i = 0; i < 200 && !found; ++i) {
    LanguageSpec spec;
    spec.consistency = Consistency::InconsistentRanking;
    const Language l = sample_language(rng, spec);
    found = l.surface(check::realise("VVV", l.consonants, l.vowels)).empty();
  }
  EXPECT_TRUE(found);
}

TEST(Langspace, InconsistentLanguagesVaryByTemplate) {
  Rng rng(6);
  LanguageSpec spec;
  spec.consistency = Consistency::InconsistentSet;
  const Language l = sample_language(rng, spec);
  std::set<int> sets;
  for (const std::string t : {"V", "C", "CV", "VC", "CC", "VV", "CVC", "VCV", "CCV", "VVC"})
    sets.insert(l.behavior_for(t).set.index());
  EXPECT_GT(sets.size(), 1u);
  EXPECT_EQ(l.behavior_for("CVC"), l.behavior_for("CVC"));
}

TEST(Langspace, UniversalsMatchBruteForce) {
  const auto expected = check::brute_universals();
  std::set<std::string> got;
  for (const auto& u : enumerate_universals()) got.insert(u.to_string());
  EXPECT_EQ(got, expected);
  EXPECT_EQ(got.size(), 24u);
  EXPECT_TRUE(got.count("VC->.CVC.=>V->.CV."));
}

TEST(Langspace, UniversalDatasetTemplates) {
  Universal target;
  for (const auto& u : enumerate_universals())
    if (u.to_string() == "VC->.CVC.=>V->.CV.") target = u;
  Rng rng(31);
  const Dataset d = sample_dataset(rng, Condition::implication(target));
  ASSERT_FALSE(d.train.empty());
  ASSERT_FALSE(d.test.empty());
  for (const auto& e : d.train) {
    EXPECT_EQ(skeleton(e.input), "VC");
    EXPECT_EQ(skeleton(e.output), ".CVC.");
  }
  for (const auto& e : d.test) {
    EXPECT_EQ(skeleton(e.input), "V");
    EXPECT_EQ(skeleton(e.output), ".CV.");
  }
}

TEST(Langspace, ConditionTagsRoundTrip) {
  std::vector<Condition> conds = {Condition::standard(), Condition::of(Condition::Kind::AltConstraints),
                                  Condition::of(Condition::Kind::InconsistentRanking),
                                  Condition::of(Condition::Kind::InconsistentSet),
                                  Condition::of(Condition::Kind::NewPhonemes), Condition::length_holdout(6)};
  for (const auto& u : enumerate_universals()) conds.push_back(Condition::implication(u));
  for (const auto& c : conds) EXPECT_EQ(Condition::parse(c.tag()), c) << c.tag();
  EXPECT_THROW(Condition::parse("nonsense"), InvalidInput);
}

TEST(Langspace, DatasetFilesRoundTrip) {
  Rng rng(77);
  for (auto cond : {Condition::standard(), Condition::of(Condition::Kind::InconsistentSet),
                    Condition::of(Condition::Kind::NewPhonemes)}) {
    const Dataset d = sample_dataset(rng, cond);
    const Dataset back = dataset_from_files(dataset_to_jsonl(d), dataset_metadata(d));
    EXPECT_EQ(back, d) << cond.tag();
    EXPECT_EQ(dataset_to_jsonl(back), dataset_to_jsonl(d));
  }
}
