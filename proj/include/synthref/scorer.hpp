#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synthref/backend.hpp"
#include "synthref/core.hpp"
#include "synthref/prompts.hpp"

namespace synthref {

enum class ScoreVariant { bws_prob, yesno_prob, sampled, geval_baseline };

std::string_view to_string(ScoreVariant variant);
ScoreVariant score_variant_from_string(std::string_view name);

inline constexpr std::string_view kBetter = "Better";
inline constexpr std::string_view kWorse = "Worse";
inline constexpr std::string_view kSimilar = "Similar";

struct ReferenceJudgment {
  int score = 0;
  ComparisonDistribution distribution;
};

struct ScoreBreakdown {
  ScoreVariant variant = ScoreVariant::bws_prob;
  double final = 0.0;
  std::vector<ReferenceJudgment> per_reference;  // empty for geval_baseline
};

/// Largest attainable |s| for a ladder of n rungs with a zero Similar weight:
/// n(n+1)/2.
double direct_score_bound(int n);

/// s = sum_i i * (p_better(i) - p_worse(i) + similar_weight * p_similar(i)).
/// Scores must cover 1..n exactly; throws ValidationError otherwise.
double direct_score(std::span<const ReferenceJudgment> judgments, int n,
                    double similar_weight = 0.0);

/// Affine map of s from [-n(n+1)/2, n(n+1)/2] onto [1, n]. For thresholding
/// displays only; correlation code consumes raw scores.
double to_rating_scale(double s, int n);

/// Softmax over summed log-probs after clamping each at kLogProbFloor.
ComparisonDistribution distribution_from_logprobs(double better, double worse, double similar);

struct ScorerOptions {
  ScoreVariant variant = ScoreVariant::bws_prob;
  int n_samples = 100;
  double similar_weight = 0.0;
  SamplingParams sampling;
  // Template variant used for the Better/Worse/Similar prompt.
  std::string bws_template_variant = "default";
};

class Scorer {
 public:
  Scorer(const PromptRegistry& prompts, Backend& backend, ScorerOptions options);

  /// Softmax over the summed log-probs of " Better", " Worse", " Similar"
  /// after the predict_bws prompt.
  ComparisonDistribution comparison_distribution(const EvaluationContext& ctx,
                                                 const QualityDimension& dim,
                                                 const std::string& reference,
                                                 const std::string& candidate) const;

  /// Judges the candidate against every rung with the configured variant and
  /// reduces with direct_score. A failure at any rung aborts the candidate.
  ScoreBreakdown score_candidate(const EvaluationContext& ctx, const QualityDimension& dim,
                                 const SyntheticReferenceSet& refs,
                                 const std::string& candidate) const;

  /// Expected rating sum_k k * p(k) over the continuations " 1" .. " 5" of
  /// the direct-score template.
  double geval_score(const EvaluationContext& ctx, const QualityDimension& dim,
                     const std::string& candidate) const;

  std::string render_bws(const EvaluationContext& ctx, const QualityDimension& dim,
                         const std::string& reference, const std::string& candidate) const;
  std::string render_yesno(const EvaluationContext& ctx, const QualityDimension& dim,
                           const std::string& reference, const std::string& candidate,
                           std::string_view direction) const;

  const ScorerOptions& options() const { return options_; }

 private:
  ComparisonDistribution sampled_distribution(const std::string& prompt, int score) const;
  ComparisonDistribution yesno_distribution(const EvaluationContext& ctx,
                                            const QualityDimension& dim,
                                            const std::string& reference,
                                            const std::string& candidate) const;
  double yes_probability(const std::string& prompt) const;

  const PromptRegistry& prompts_;
  Backend& backend_;
  ScorerOptions options_;
};

}  // namespace synthref
