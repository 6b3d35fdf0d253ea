#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synthref/errors.hpp"

namespace synthref {

enum class DatasetKind { summarization, dialog, story };

std::string_view to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(std::string_view name);

/// One source item: a news article, a conversation transcript, or a story idea.
struct EvaluationContext {
  DatasetKind kind = DatasetKind::summarization;
  std::string id;
  std::string text;
};

struct QualityDimension {
  std::string name;
  std::string description;

  /// Display form used in prompts ("coherence" -> "Coherence").
  std::string title() const;
};

struct CandidateText {
  std::string system_id;
  std::string text;
};

/// A machine output tied to the context it responds to.
struct Candidate {
  std::string context_id;
  CandidateText output;
};

struct HumanAnnotation {
  std::string context_id;
  std::string system_id;
  std::string dimension;
  double score = 0.0;
};

/// Everything an adapter produces for one benchmark.
struct Dataset {
  std::string name;
  DatasetKind kind = DatasetKind::summarization;
  std::vector<EvaluationContext> contexts;
  std::vector<Candidate> candidates;
  std::vector<HumanAnnotation> annotations;

  const EvaluationContext* find_context(std::string_view context_id) const;
};

struct SamplingParams {
  double temperature = 1.0;
  double top_p = 0.95;
  std::optional<std::uint64_t> seed;

  bool operator==(const SamplingParams&) const = default;
};

struct ReferenceProvenance {
  std::string model;
  // One digest per template used; extreme first, then recursive.
  std::vector<std::string> template_hashes;
  std::vector<int> generation_order;
  SamplingParams sampling;
  int max_new_tokens = 0;
};

struct ScoredReference {
  int score = 0;
  std::string text;
};

/// Ladder of n synthetic references with scores 1..n. Only constructible in a
/// valid state; see make().
class SyntheticReferenceSet {
 public:
  /// Throws ValidationError on any invariant violation. References may come
  /// in any order; they are stored sorted by score.
  static SyntheticReferenceSet make(std::string context_id, std::string dimension,
                                    std::vector<ScoredReference> references,
                                    ReferenceProvenance provenance);

  /// Issues in a would-be set; empty iff make() accepts the same inputs.
  static std::vector<std::string> check(int n, const std::vector<ScoredReference>& references,
                                        const ReferenceProvenance& provenance);

  const std::string& context_id() const { return context_id_; }
  const std::string& dimension() const { return dimension_; }
  int n() const { return static_cast<int>(references_.size()); }
  const std::vector<ScoredReference>& references() const { return references_; }
  const ReferenceProvenance& provenance() const { return provenance_; }
  const std::string& text_for(int score) const;

 private:
  SyntheticReferenceSet() = default;

  std::string context_id_;
  std::string dimension_;
  std::vector<ScoredReference> references_;
  ReferenceProvenance provenance_;
};

/// Normalized probabilities over {Better, Worse, Similar}.
class ComparisonDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  /// Softmax over finite log-weights; always yields a valid distribution.
  static ComparisonDistribution from_log_weights(double better, double worse, double similar);
  /// Throws ValidationError unless each value is in [0,1] and they sum to 1.
  static ComparisonDistribution from_probabilities(double better, double worse, double similar);
  /// Empirical frequencies; total must be positive.
  static ComparisonDistribution from_counts(std::uint64_t better, std::uint64_t worse,
                                            std::uint64_t similar);

  double p_better() const { return better_; }
  double p_worse() const { return worse_; }
  double p_similar() const { return similar_; }

  bool valid() const;

 private:
  ComparisonDistribution(double b, double w, double s) : better_(b), worse_(w), similar_(s) {}

  double better_;
  double worse_;
  double similar_;
};

struct MetaEvalRecord {
  std::string context_id;
  std::string system_id;
  std::string dimension;
  double prediction = 0.0;
  double human_score = 0.0;
};

struct ValidationIssue {
  std::string locator;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
};

/// Checks every core invariant over an ingested dataset. Never throws on bad
/// data. When `allowed_dimensions` is non-empty, annotation dimensions must be
/// drawn from it.
ValidationReport validate_dataset(const Dataset& dataset,
                                  const std::vector<std::string>& allowed_dimensions = {});

}  // namespace synthref
