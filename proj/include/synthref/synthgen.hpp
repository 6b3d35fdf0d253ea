#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "synthref/backend.hpp"
#include "synthref/core.hpp"
#include "synthref/prompts.hpp"

namespace synthref {

struct PlanStep {
  int score = 0;
  std::optional<std::pair<int, int>> parents;  // (lower score, higher score)

  bool operator==(const PlanStep&) const = default;
};

/// Order in which a ladder's rungs are generated. The extremes come first;
/// each later rung is the midpoint of two rungs that already exist.
struct GenerationPlan {
  int n = 0;
  std::vector<PlanStep> order;

  std::vector<int> scores() const;
};

/// Extremes 1 and n, then recursive midpoint bisection visited depth-first,
/// lower half before upper half: n=5 -> [1, 5, 3, 2, 4];
/// n=9 -> [1, 9, 5, 3, 2, 4, 7, 6, 8]. Throws ValidationError for n < 2.
GenerationPlan make_plan(int n);

/// Empty iff the plan satisfies its invariants.
std::vector<std::string> check_plan(const GenerationPlan& plan);

enum class Extreme { worst, best };

struct GenerationSettings {
  int max_new_tokens = 512;
  SamplingParams sampling;
};

class ReferenceGenerator {
 public:
  ReferenceGenerator(const PromptRegistry& prompts, Backend& backend, GenerationSettings settings);

  std::string gen_extreme(const EvaluationContext& ctx, const QualityDimension& dim,
                          Extreme which) const;
  std::string gen_intermediate(const EvaluationContext& ctx, const QualityDimension& dim,
                               const std::string& worse, const std::string& better) const;

  /// n generate calls in make_plan(n) order. Any failure propagates; nothing
  /// partial is returned.
  SyntheticReferenceSet build_reference_set(const EvaluationContext& ctx,
                                            const QualityDimension& dim, int n) const;

  std::string render_extreme(const EvaluationContext& ctx, const QualityDimension& dim,
                             Extreme which) const;
  std::string render_intermediate(const EvaluationContext& ctx, const QualityDimension& dim,
                                  const std::string& worse, const std::string& better) const;

 private:
  std::string call(const std::string& prompt, std::optional<std::uint64_t> seed) const;

  const PromptRegistry& prompts_;
  Backend& backend_;
  GenerationSettings settings_;
};

/// Release rows, one per rung, ordered by score. Fields: dataset, context_id,
/// dimension, score, n, text, model, template_hash, seed, sampling.
std::vector<nlohmann::json> to_release_rows(const SyntheticReferenceSet& set,
                                            const std::string& dataset);

/// Inverse of to_release_rows; throws SchemaError or ValidationError.
SyntheticReferenceSet from_release_rows(const std::vector<nlohmann::json>& rows);

}  // namespace synthref
