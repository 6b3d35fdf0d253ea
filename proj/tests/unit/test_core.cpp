#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "synthref/core.hpp"
#include "synthref/hashing.hpp"

using namespace synthref;

namespace {

ReferenceProvenance prov_for(int n) {
  ReferenceProvenance p;
  p.model = "m";
  p.template_hashes = {"h"};
  for (int i = 1; i <= n; ++i) p.generation_order.push_back(i);
  return p;
}

std::vector<ScoredReference> refs_for(int n) {
  std::vector<ScoredReference> r;
  for (int i = n; i >= 1; --i) r.push_back({i, "text " + std::to_string(i)});
  return r;
}

Dataset toy() {
  Dataset d;
  d.name = "toy";
  d.contexts = {{DatasetKind::summarization, "d1", "article one"},
                {DatasetKind::summarization, "d2", "article two"}};
  d.candidates = {{"d1", {"A", "a1"}}, {"d1", {"B", "b1"}}, {"d2", {"A", "a2"}},
                  {"d2", {"B", "b2"}}};
  d.annotations = {{"d1", "A", "coherence", 3.0}, {"d1", "B", "coherence", 4.0},
                   {"d2", "A", "coherence", 2.5}, {"d2", "B", "coherence", 1.0}};
  return d;
}

}  // namespace

TEST(ReferenceSet, SortsAndExposesByScore) {
  auto set = SyntheticReferenceSet::make("c", "coherence", refs_for(5), prov_for(5));
  EXPECT_EQ(set.n(), 5);
  for (int i = 1; i <= 5; ++i) {
    EXPECT_EQ(set.references()[i - 1].score, i);
    EXPECT_EQ(set.text_for(i), "text " + std::to_string(i));
  }
}

TEST(ReferenceSet, RejectsGapsDuplicatesEmptyText) {
  auto gap = refs_for(5);
  gap[0].score = 7;
  EXPECT_THROW(SyntheticReferenceSet::make("c", "d", gap, prov_for(5)), ValidationError);

  auto dup = refs_for(5);
  dup[0].score = 4;
  EXPECT_THROW(SyntheticReferenceSet::make("c", "d", dup, prov_for(5)), ValidationError);

  auto empty = refs_for(5);
  empty[2].text.clear();
  EXPECT_THROW(SyntheticReferenceSet::make("c", "d", empty, prov_for(5)), ValidationError);

  auto bad_order = prov_for(5);
  bad_order.generation_order = {1, 5, 3, 3, 4};
  EXPECT_THROW(SyntheticReferenceSet::make("c", "d", refs_for(5), bad_order), ValidationError);

  EXPECT_THROW(SyntheticReferenceSet::make("c", "d", refs_for(1), prov_for(1)), ValidationError);
}

TEST(ReferenceSet, AcceptedSetsPassTheirOwnRecheck) {
  for (int n = 2; n <= 12; ++n) {
    auto set = SyntheticReferenceSet::make("c", "d", refs_for(n), prov_for(n));
    EXPECT_TRUE(SyntheticReferenceSet::check(set.n(), set.references(), set.provenance()).empty())
        << "n=" << n;
  }
}

TEST(ComparisonDistribution, LogWeightsAlwaysValid) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 10000; ++i) {
    auto d = ComparisonDistribution::from_log_weights(u(rng), u(rng), u(rng));
    ASSERT_TRUE(d.valid());
    ASSERT_NEAR(d.p_better() + d.p_worse() + d.p_similar(), 1.0, 1e-9);
  }
}

TEST(ComparisonDistribution, RejectsInvalidInputs) {
  EXPECT_THROW(ComparisonDistribution::from_log_weights(NAN, 0, 0), ValidationError);
  EXPECT_THROW(ComparisonDistribution::from_log_weights(INFINITY, 0, 0), ValidationError);
  EXPECT_THROW(ComparisonDistribution::from_probabilities(0.5, 0.5, 0.5), ValidationError);
  EXPECT_THROW(ComparisonDistribution::from_probabilities(1.5, -0.5, 0.0), ValidationError);
  EXPECT_THROW(ComparisonDistribution::from_counts(0, 0, 0), ValidationError);
  auto c = ComparisonDistribution::from_counts(7, 2, 1);
  EXPECT_DOUBLE_EQ(c.p_better(), 0.7);
  EXPECT_DOUBLE_EQ(c.p_worse(), 0.2);
}

TEST(ValidateDataset, WellFormedToyIsClean) {
  EXPECT_TRUE(validate_dataset(toy()).ok());
  EXPECT_TRUE(validate_dataset(toy(), {"coherence"}).ok());
}

TEST(ValidateDataset, DuplicateCandidateKeyReportedOnce) {
  auto d = toy();
  d.candidates.push_back({"d1", {"A", "another"}});
  auto r = validate_dataset(d);
  ASSERT_EQ(r.issues.size(), 1u);
  EXPECT_NE(r.issues[0].message.find("duplicate"), std::string::npos);
}

TEST(ValidateDataset, EmptyCandidateNamesSystem) {
  auto d = toy();
  d.candidates[1].output.text.clear();
  auto r = validate_dataset(d);
  ASSERT_EQ(r.issues.size(), 1u);
  EXPECT_NE((r.issues[0].locator + r.issues[0].message).find("B"), std::string::npos);
}

TEST(ValidateDataset, ReportsEveryViolation) {
  auto d = toy();
  d.contexts.push_back({DatasetKind::summarization, "d1", "dup"});
  d.contexts.push_back({DatasetKind::summarization, "d3", ""});
  d.candidates.push_back({"nowhere", {"C", "c"}});
  d.annotations.push_back({"d1", "A", "coherence", NAN});
  d.annotations.push_back({"d1", "A", "fluency", 2.0});
  d.annotations.push_back({"d2", "Z", "coherence", 2.0});
  auto r = validate_dataset(d, {"coherence"});
  // duplicate context, empty text, unknown context, duplicate annotation key
  // (NaN row), non-finite score, unconfigured dimension, orphan annotation.
  EXPECT_GE(r.issues.size(), 7u);
}

TEST(Hashing, KnownDigestAndSeedDerivation) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(derive_seed(1, "x"), derive_seed(1, "x"));
  EXPECT_NE(derive_seed(1, "x"), derive_seed(2, "x"));
  EXPECT_NE(derive_seed(1, "x"), derive_seed(1, "y"));
  EXPECT_GE(unit_interval(~0ULL), 0.0);
  EXPECT_LT(unit_interval(~0ULL), 1.0);
  EXPECT_EQ(unit_interval(0), 0.0);
}

TEST(DatasetKind, RoundTrips) {
  for (auto k : {DatasetKind::summarization, DatasetKind::dialog, DatasetKind::story}) {
    EXPECT_EQ(dataset_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(dataset_kind_from_string("poetry"), ValidationError);
}
