#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "synthref/mock_backend.hpp"
#include "synthref/scorer.hpp"

using namespace synthref;

namespace {

const PromptRegistry& registry() {
  static const PromptRegistry r =
      PromptRegistry::load_shipped_with_variants(testing_support::asset_dir());
  return r;
}

const EvaluationContext kCtx{DatasetKind::summarization, "doc-1", "Article text."};
const QualityDimension kDim{"fluency", "the quality of individual sentences."};

SyntheticReferenceSet refset(int n = 5) {
  std::vector<ScoredReference> refs;
  ReferenceProvenance p;
  p.model = "mock";
  p.template_hashes = {"a", "b"};
  for (int i = 1; i <= n; ++i) {
    refs.push_back({i, "reference level " + std::to_string(i)});
    p.generation_order.push_back(i);
  }
  return SyntheticReferenceSet::make(kCtx.id, kDim.name, refs, p);
}

std::vector<ReferenceJudgment> uniform(int n, double b, double w, double s) {
  std::vector<ReferenceJudgment> out;
  for (int i = 1; i <= n; ++i) out.push_back({i, ComparisonDistribution::from_probabilities(b, w, s)});
  return out;
}

void set_probs(MockBackend& m, double pb, double pw, double ps) {
  auto lg = [](double p) { return p > 0 ? std::log(p) : -1000.0; };
  m.set_default_logprob(" Better", lg(pb));
  m.set_default_logprob(" Worse", lg(pw));
  m.set_default_logprob(" Similar", lg(ps));
}

ScorerOptions opts(ScoreVariant v, int n_samples = 100, std::uint64_t seed = 1) {
  ScorerOptions o;
  o.variant = v;
  o.n_samples = n_samples;
  o.sampling.seed = seed;
  return o;
}

}  // namespace

TEST(DirectScore, ExactExamples) {
  EXPECT_EQ(direct_score(uniform(5, 0, 0, 1), 5), 0.0);
  EXPECT_EQ(direct_score(uniform(5, 1, 0, 0), 5), 15.0);
  auto one_worse = uniform(5, 0, 0, 1);
  one_worse[4] = {5, ComparisonDistribution::from_probabilities(0, 1, 0)};
  EXPECT_EQ(direct_score(one_worse, 5), -5.0);
  EXPECT_EQ(direct_score(uniform(5, 0.5, 0.25, 0.25), 5), 3.75);
}

TEST(DirectScore, CoverageErrors) {
  auto j = uniform(5, 1, 0, 0);
  EXPECT_THROW(direct_score(std::span(j).first(4), 5), ValidationError);
  j[1].score = 1;
  EXPECT_THROW(direct_score(j, 5), ValidationError);
  j[1].score = 6;
  EXPECT_THROW(direct_score(j, 5), ValidationError);
}

TEST(DirectScore, PropertiesUnderRandomDraws) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-8, 8);
  std::uniform_int_distribution<int> nd(2, 10);
  for (int t = 0; t < 2000; ++t) {
    const int n = nd(rng);
    std::vector<ReferenceJudgment> j, swapped, shifted;
    for (int i = 1; i <= n; ++i) {
      auto d = ComparisonDistribution::from_log_weights(u(rng), u(rng), u(rng));
      j.push_back({i, d});
      swapped.push_back(
          {i, ComparisonDistribution::from_probabilities(d.p_worse(), d.p_better(), d.p_similar())});
      // Move half the Similar mass elsewhere while keeping p_better - p_worse.
      const double m = d.p_similar() / 2;
      shifted.push_back({i, ComparisonDistribution::from_probabilities(
                                d.p_better() + m / 2, d.p_worse() + m / 2, d.p_similar() - m)});
    }
    const double s = direct_score(j, n);
    ASSERT_LE(std::abs(s), direct_score_bound(n) + 1e-12);
    ASSERT_NEAR(direct_score(swapped, n), -s, 1e-12);
    ASSERT_NEAR(direct_score(shifted, n), s, 1e-12);

    // Monotone response at one rung.
    const int k = std::uniform_int_distribution<int>(0, n - 1)(rng);
    const auto& d = j[k].distribution;
    if (d.p_worse() > 1e-6) {
      auto up = j;
      const double e = d.p_worse() / 2;
      up[k].distribution = ComparisonDistribution::from_probabilities(d.p_better() + e,
                                                                      d.p_worse() - e, d.p_similar());
      ASSERT_GT(direct_score(up, n), s);
    }
  }
}

TEST(DirectScore, RatingScaleEndpoints) {
  EXPECT_DOUBLE_EQ(to_rating_scale(-15, 5), 1.0);
  EXPECT_DOUBLE_EQ(to_rating_scale(15, 5), 5.0);
  EXPECT_DOUBLE_EQ(to_rating_scale(0, 5), 3.0);
}

TEST(Softmax, ClosedFormsAndShift) {
  auto d = distribution_from_logprobs(-1, -1, -1);
  EXPECT_NEAR(d.p_better(), 1.0 / 3, 1e-12);
  EXPECT_NEAR(d.p_similar(), 1.0 / 3, 1e-12);
  d = distribution_from_logprobs(0, -std::log(2.0), -std::log(2.0));
  EXPECT_NEAR(d.p_better(), 0.5, 1e-12);
  EXPECT_NEAR(d.p_worse(), 0.25, 1e-12);
  EXPECT_NEAR(d.p_similar(), 0.25, 1e-12);
  for (double c : {-20.0, -3.5, 0.0, 7.0}) {
    auto e = distribution_from_logprobs(-1 + c, -2 + c, -4 + c);
    auto f = distribution_from_logprobs(-1, -2, -4);
    EXPECT_NEAR(e.p_better(), f.p_better(), 1e-12);
    EXPECT_NEAR(e.p_worse(), f.p_worse(), 1e-12);
  }
  // Floor: -inf-like values are clamped at -30.
  auto g = distribution_from_logprobs(-1e9, -1e9, 0);
  EXPECT_NEAR(g.p_better(), std::exp(-30.0) / (1 + 2 * std::exp(-30.0)), 1e-20);
}

TEST(Scorer, ComparisonPromptLayoutAndContinuations) {
  MockBackend m;
  set_probs(m, 0.5, 0.25, 0.25);
  Scorer s(registry(), m, opts(ScoreVariant::bws_prob));
  auto d = s.comparison_distribution(kCtx, kDim, "REF-TEXT", "CAND-TEXT");
  EXPECT_NEAR(d.p_better(), 0.5, 1e-12);
  const auto call = m.calls().at(0);
  EXPECT_EQ(call.candidates, (std::vector<std::string>{" Better", " Worse", " Similar"}));
  const auto& p = call.prompt;
  EXPECT_LT(p.find("Reference Summary:"), p.find("REF-TEXT"));
  EXPECT_LT(p.find("REF-TEXT"), p.find("Target Summary:"));
  EXPECT_LT(p.find("Target Summary:"), p.find("CAND-TEXT"));
  EXPECT_THROW(s.comparison_distribution(kCtx, kDim, "", "x"), ValidationError);
}

TEST(Scorer, AllSimilarGivesZero) {
  MockBackend m;
  set_probs(m, 0, 0, 1);
  Scorer s(registry(), m, opts(ScoreVariant::bws_prob));
  for (const char* cand : {"a", "bb", "something else"}) {
    EXPECT_NEAR(s.score_candidate(kCtx, kDim, refset(), cand).final, 0.0, 1e-9);
  }
}

TEST(Scorer, SwappingBetterWorseNegates) {
  MockBackend a("mock", 1), b("mock", 1);
  // Per-prompt random log-probs, with b the mirror of a.
  a.set_scorer([](const std::string& prompt, const std::string& cand) -> std::optional<double> {
    return -1.0 - static_cast<double>((std::hash<std::string>{}(prompt + cand)) % 1000) / 250.0;
  });
  b.set_scorer([](const std::string& prompt, const std::string& cand) -> std::optional<double> {
    std::string mirrored = cand == " Better" ? " Worse" : cand == " Worse" ? " Better" : cand;
    return -1.0 -
           static_cast<double>((std::hash<std::string>{}(prompt + mirrored)) % 1000) / 250.0;
  });
  Scorer sa(registry(), a, opts(ScoreVariant::bws_prob));
  Scorer sb(registry(), b, opts(ScoreVariant::bws_prob));
  const double x = sa.score_candidate(kCtx, kDim, refset(), "cand").final;
  const double y = sb.score_candidate(kCtx, kDim, refset(), "cand").final;
  EXPECT_NE(x, 0.0);
  EXPECT_NEAR(x, -y, 1e-12);
}

TEST(Scorer, BreakdownShape) {
  MockBackend m;
  Scorer s(registry(), m, opts(ScoreVariant::bws_prob));
  const auto b = s.score_candidate(kCtx, kDim, refset(), "cand");
  ASSERT_EQ(b.per_reference.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(b.per_reference[i].score, i + 1);
  EXPECT_LE(std::abs(b.final), 15.0);
  EXPECT_EQ(m.call_count(), 5u);
}

TEST(Scorer, MismatchedRefsetRejected) {
  MockBackend m;
  Scorer s(registry(), m, opts(ScoreVariant::bws_prob));
  QualityDimension other{"coherence", "x"};
  EXPECT_THROW(s.score_candidate(kCtx, other, refset(), "c"), ValidationError);
}

TEST(Scorer, PerReferenceFailureAbortsCandidate) {
  MockBackend m;
  int calls = 0;
  m.set_scorer([&](const std::string&, const std::string&) -> std::optional<double> {
    if (++calls > 6) return NAN;  // third reference fails
    return -1.0;
  });
  Scorer s(registry(), m, opts(ScoreVariant::bws_prob));
  EXPECT_THROW(s.score_candidate(kCtx, kDim, refset(), "c"), ProtocolError);
}

TEST(Scorer, CapabilityErrorWithoutContinuationScoring) {
  MockBackend m;
  m.set_continuation_scoring(false);
  Scorer bws(registry(), m, opts(ScoreVariant::bws_prob));
  EXPECT_THROW(bws.score_candidate(kCtx, kDim, refset(), "c"), CapabilityError);
  // The sampled variant still works.
  Scorer sampled(registry(), m, opts(ScoreVariant::sampled, 10));
  EXPECT_NO_THROW(sampled.score_candidate(kCtx, kDim, refset(), "c"));
}

TEST(Scorer, SampledConvergesToProbability) {
  MockBackend m;
  set_probs(m, 0.7, 0.2, 0.1);
  const double exact =
      Scorer(registry(), m, opts(ScoreVariant::bws_prob)).score_candidate(kCtx, kDim, refset(), "c").final;
  EXPECT_NEAR(exact, 15 * 0.5, 1e-9);
  const auto b = Scorer(registry(), m, opts(ScoreVariant::sampled, 1000, 8))
                     .score_candidate(kCtx, kDim, refset(), "c");
  EXPECT_NEAR(b.final, exact, 0.5);
  for (const auto& j : b.per_reference) {
    const double total = j.distribution.p_better() + j.distribution.p_worse() +
                         j.distribution.p_similar();
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Scorer, SampledDeterministicWithSeed) {
  MockBackend m;
  set_probs(m, 0.4, 0.4, 0.2);
  auto run = [&](std::uint64_t seed) {
    return Scorer(registry(), m, opts(ScoreVariant::sampled, 50, seed))
        .score_candidate(kCtx, kDim, refset(), "c")
        .final;
  };
  EXPECT_EQ(run(3), run(3));
}

TEST(Scorer, YesNoVariant) {
  MockBackend m;
  // p(Yes | better) = 0.8, p(Yes | worse) = 0.2 after Yes/No normalization.
  m.set_scorer([](const std::string& prompt, const std::string& cand) -> std::optional<double> {
    const bool better = prompt.find("have better fluency") != std::string::npos;
    const bool worse = prompt.find("have worse fluency") != std::string::npos;
    EXPECT_TRUE(better != worse);
    const double yes = better ? 0.8 : 0.2;
    return std::log(cand == " Yes" ? yes : 1 - yes);
  });
  Scorer s(registry(), m, opts(ScoreVariant::yesno_prob));
  const auto b = s.score_candidate(kCtx, kDim, refset(), "c");
  ASSERT_EQ(b.per_reference.size(), 5u);
  for (const auto& j : b.per_reference) {
    EXPECT_NEAR(j.distribution.p_better(), 0.8, 1e-12);
    EXPECT_NEAR(j.distribution.p_worse(), 0.2, 1e-12);
    EXPECT_EQ(j.distribution.p_similar(), 0.0);
  }
  EXPECT_NEAR(b.final, 15 * 0.6, 1e-9);
  EXPECT_EQ(m.call_count(), 10u);
}

TEST(Geval, ExpectedRating) {
  MockBackend m;
  Scorer s(registry(), m, opts(ScoreVariant::geval_baseline));
  for (int k = 1; k <= 5; ++k) m.set_default_logprob(" " + std::to_string(k), -1.0);
  EXPECT_NEAR(s.geval_score(kCtx, kDim, "c"), 3.0, 1e-12);
  for (int k = 1; k <= 4; ++k) m.set_default_logprob(" " + std::to_string(k), -1e6);
  m.set_default_logprob(" 5", 0.0);
  EXPECT_NEAR(s.geval_score(kCtx, kDim, "c"), 5.0, 1e-9);
  for (int k = 1; k <= 5; ++k) m.set_default_logprob(" " + std::to_string(k), -1e6);
  m.set_default_logprob(" 2", 0.0);
  EXPECT_NEAR(s.geval_score(kCtx, kDim, "c"), 2.0, 1e-11);
  const auto b = s.score_candidate(kCtx, kDim, refset(), "c");
  EXPECT_TRUE(b.per_reference.empty());
  EXPECT_NEAR(b.final, 2.0, 1e-11);
}

TEST(Variant, NamesRoundTrip) {
  for (auto v : {ScoreVariant::bws_prob, ScoreVariant::yesno_prob, ScoreVariant::sampled,
                 ScoreVariant::geval_baseline}) {
    EXPECT_EQ(score_variant_from_string(to_string(v)), v);
  }
  EXPECT_THROW(score_variant_from_string("magic"), ValidationError);
}

TEST(Variant, InlineTemplateSelectable) {
  MockBackend m;
  auto o = opts(ScoreVariant::bws_prob);
  o.bws_template_variant = "inline";
  Scorer s(registry(), m, o);
  EXPECT_NE(s.render_bws(kCtx, kDim, "r", "c"), Scorer(registry(), m, opts(ScoreVariant::bws_prob))
                                                     .render_bws(kCtx, kDim, "r", "c"));
}
