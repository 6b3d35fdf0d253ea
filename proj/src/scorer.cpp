#include "synthref/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "synthref/hashing.hpp"

namespace synthref {

std::string_view to_string(ScoreVariant variant) {
  switch (variant) {
    case ScoreVariant::bws_prob:
      return "bws_prob";
    case ScoreVariant::yesno_prob:
      return "yesno_prob";
    case ScoreVariant::sampled:
      return "sampled";
    case ScoreVariant::geval_baseline:
      return "geval_baseline";
  }
  return "unknown";
}

ScoreVariant score_variant_from_string(std::string_view name) {
  for (auto v : {ScoreVariant::bws_prob, ScoreVariant::yesno_prob, ScoreVariant::sampled,
                 ScoreVariant::geval_baseline}) {
    if (to_string(v) == name) return v;
  }
  throw ValidationError("unknown score variant: " + std::string(name));
}

double direct_score_bound(int n) { return n * (n + 1) / 2.0; }

double direct_score(std::span<const ReferenceJudgment> judgments, int n, double similar_weight) {
  if (n < 2) throw ValidationError("ladder size must be >= 2");
  std::vector<bool> seen(static_cast<std::size_t>(n) + 1, false);
  for (const auto& j : judgments) {
    if (j.score < 1 || j.score > n) {
      throw ValidationError("reference score " + std::to_string(j.score) + " outside 1.." +
                            std::to_string(n));
    }
    if (seen[static_cast<std::size_t>(j.score)]) {
      throw ValidationError("duplicate reference score " + std::to_string(j.score));
    }
    seen[static_cast<std::size_t>(j.score)] = true;
  }
  if (static_cast<int>(judgments.size()) != n) {
    for (int i = 1; i <= n; ++i) {
      if (!seen[static_cast<std::size_t>(i)]) {
        throw ValidationError("missing reference score " + std::to_string(i));
      }
    }
  }
  double s = 0.0;
  for (const auto& j : judgments) {
    const auto& d = j.distribution;
    s += j.score * (d.p_better() - d.p_worse() + similar_weight * d.p_similar());
  }
  return s;
}

double to_rating_scale(double s, int n) {
  const double bound = direct_score_bound(n);
  return 1.0 + (n - 1) * (s + bound) / (2.0 * bound);
}

ComparisonDistribution distribution_from_logprobs(double better, double worse, double similar) {
  return ComparisonDistribution::from_log_weights(
      std::max(better, kLogProbFloor), std::max(worse, kLogProbFloor),
      std::max(similar, kLogProbFloor));
}

Scorer::Scorer(const PromptRegistry& prompts, Backend& backend, ScorerOptions options)
    : prompts_(prompts), backend_(backend), options_(std::move(options)) {
  if (options_.variant == ScoreVariant::sampled && options_.n_samples < 1) {
    throw ValidationError("n_samples must be >= 1");
  }
}

std::string Scorer::render_bws(const EvaluationContext& ctx, const QualityDimension& dim,
                               const std::string& reference, const std::string& candidate) const {
  const TemplateId id{ctx.kind, PromptPurpose::predict_bws, options_.bws_template_variant};
  return prompts_.render_from(id, {
                                      {"col", dim.name},
                                      {"col_title", dim.title()},
                                      {"col_description", dim.description},
                                      {std::string(context_placeholder(ctx.kind)), ctx.text},
                                      {"icl_summary", reference},
                                      {"target_summary", candidate},
                                  });
}

std::string Scorer::render_yesno(const EvaluationContext& ctx, const QualityDimension& dim,
                                 const std::string& reference, const std::string& candidate,
                                 std::string_view direction) const {
  const TemplateId id{ctx.kind, PromptPurpose::predict_yesno};
  return prompts_.render_from(
      id, {
              {"prediction", "have " + std::string(direction) + " " + dim.name},
              {std::string(context_placeholder(ctx.kind)), ctx.text},
              {"icl_summary", reference},
              {"target_summary", candidate},
          });
}

ComparisonDistribution Scorer::comparison_distribution(const EvaluationContext& ctx,
                                                       const QualityDimension& dim,
                                                       const std::string& reference,
                                                       const std::string& candidate) const {
  if (reference.empty() || candidate.empty()) {
    throw ValidationError("comparison needs non-empty reference and candidate");
  }
  const auto scores = backend_.score_continuations(
      {render_bws(ctx, dim, reference, candidate),
       {render_continuation(kBetter), render_continuation(kWorse),
        render_continuation(kSimilar)}});
  return distribution_from_logprobs(scores[0].logprob, scores[1].logprob, scores[2].logprob);
}

ComparisonDistribution Scorer::sampled_distribution(const std::string& prompt, int score) const {
  ChoiceSampleRequest req;
  req.prompt = prompt;
  req.choices = {std::string(kBetter), std::string(kWorse), std::string(kSimilar)};
  req.n = options_.n_samples;
  req.sampling = options_.sampling;
  if (options_.sampling.seed) {
    req.sampling.seed = derive_seed(*options_.sampling.seed, "rung:" + std::to_string(score));
  }
  const auto hist = backend_.sample_choice(req);
  return ComparisonDistribution::from_counts(hist.count(kBetter), hist.count(kWorse),
                                             hist.count(kSimilar));
}

double Scorer::yes_probability(const std::string& prompt) const {
  const auto scores =
      backend_.score_continuations({prompt, {render_continuation("Yes"), render_continuation("No")}});
  const double yes = std::max(scores[0].logprob, kLogProbFloor);
  const double no = std::max(scores[1].logprob, kLogProbFloor);
  const double top = std::max(yes, no);
  const double ey = std::exp(yes - top);
  return ey / (ey + std::exp(no - top));
}

ComparisonDistribution Scorer::yesno_distribution(const EvaluationContext& ctx,
                                                  const QualityDimension& dim,
                                                  const std::string& reference,
                                                  const std::string& candidate) const {
  const double yes_better = yes_probability(render_yesno(ctx, dim, reference, candidate, "better"));
  const double yes_worse = yes_probability(render_yesno(ctx, dim, reference, candidate, "worse"));
  const double z = yes_better + yes_worse;
  return ComparisonDistribution::from_probabilities(yes_better / z, yes_worse / z, 0.0);
}

ScoreBreakdown Scorer::score_candidate(const EvaluationContext& ctx, const QualityDimension& dim,
                                       const SyntheticReferenceSet& refs,
                                       const std::string& candidate) const {
  if (refs.context_id() != ctx.id || refs.dimension() != dim.name) {
    throw ValidationError("reference set (" + refs.context_id() + ", " + refs.dimension() +
                          ") does not match (" + ctx.id + ", " + dim.name + ")");
  }
  ScoreBreakdown out;
  out.variant = options_.variant;
  if (options_.variant == ScoreVariant::geval_baseline) {
    out.final = geval_score(ctx, dim, candidate);
    return out;
  }
  for (const auto& ref : refs.references()) {
    switch (options_.variant) {
      case ScoreVariant::bws_prob:
        out.per_reference.push_back(
            {ref.score, comparison_distribution(ctx, dim, ref.text, candidate)});
        break;
      case ScoreVariant::sampled:
        out.per_reference.push_back(
            {ref.score, sampled_distribution(render_bws(ctx, dim, ref.text, candidate), ref.score)});
        break;
      case ScoreVariant::yesno_prob:
        out.per_reference.push_back({ref.score, yesno_distribution(ctx, dim, ref.text, candidate)});
        break;
      case ScoreVariant::geval_baseline:
        break;
    }
  }
  out.final = direct_score(out.per_reference, refs.n(), options_.similar_weight);
  return out;
}

double Scorer::geval_score(const EvaluationContext& ctx, const QualityDimension& dim,
                           const std::string& candidate) const {
  const TemplateId id{ctx.kind, PromptPurpose::direct_score};
  const std::string prompt =
      prompts_.render_from(id, {
                                   {"col", dim.name},
                                   {"col_title", dim.title()},
                                   {"col_description", dim.description},
                                   {std::string(context_placeholder(ctx.kind)), ctx.text},
                                   {"target_summary", candidate},
                               });
  std::vector<std::string> continuations;
  for (int k = 1; k <= 5; ++k) continuations.push_back(render_continuation(std::to_string(k)));
  const auto scores = backend_.score_continuations({prompt, continuations});

  double top = kLogProbFloor;
  for (const auto& s : scores) top = std::max(top, std::max(s.logprob, kLogProbFloor));
  double z = 0.0;
  double expected = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const double w = std::exp(std::max(scores[k].logprob, kLogProbFloor) - top);
    z += w;
    expected += static_cast<double>(k + 1) * w;
  }
  return expected / z;
}

}  // namespace synthref
