#include "synthref/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

namespace synthref {

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::summarization:
      return "summarization";
    case DatasetKind::dialog:
      return "dialog";
    case DatasetKind::story:
      return "story";
  }
  return "unknown";
}

DatasetKind dataset_kind_from_string(std::string_view name) {
  if (name == "summarization") return DatasetKind::summarization;
  if (name == "dialog") return DatasetKind::dialog;
  if (name == "story") return DatasetKind::story;
  throw ValidationError("unknown dataset kind: " + std::string(name));
}

std::string QualityDimension::title() const {
  std::string out = name;
  if (!out.empty()) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

const EvaluationContext* Dataset::find_context(std::string_view context_id) const {
  for (const auto& ctx : contexts) {
    if (ctx.id == context_id) return &ctx;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// SyntheticReferenceSet

std::vector<std::string> SyntheticReferenceSet::check(int n,
                                                      const std::vector<ScoredReference>& references,
                                                      const ReferenceProvenance& provenance) {
  std::vector<std::string> issues;
  if (n < 2) {
    issues.push_back("n must be at least 2, got " + std::to_string(n));
  }
  if (static_cast<int>(references.size()) != n) {
    issues.push_back("expected " + std::to_string(n) + " references, got " +
                     std::to_string(references.size()));
  }
  std::set<int> seen;
  for (const auto& ref : references) {
    if (ref.score < 1 || ref.score > n) {
      issues.push_back("score " + std::to_string(ref.score) + " outside 1.." + std::to_string(n));
    } else if (!seen.insert(ref.score).second) {
      issues.push_back("duplicate score " + std::to_string(ref.score));
    }
    if (ref.text.empty()) {
      issues.push_back("reference with score " + std::to_string(ref.score) + " has empty text");
    }
  }
  for (int s = 1; s <= n; ++s) {
    if (!seen.contains(s) && static_cast<int>(references.size()) == n) {
      issues.push_back("missing score " + std::to_string(s));
    }
  }
  std::vector<int> order = provenance.generation_order;
  std::sort(order.begin(), order.end());
  bool permutation = static_cast<int>(order.size()) == n;
  for (int i = 0; permutation && i < n; ++i) {
    permutation = order[i] == i + 1;
  }
  if (!permutation) {
    issues.push_back("generation order is not a permutation of 1.." + std::to_string(n));
  }
  return issues;
}

SyntheticReferenceSet SyntheticReferenceSet::make(std::string context_id, std::string dimension,
                                                  std::vector<ScoredReference> references,
                                                  ReferenceProvenance provenance) {
  const int n = static_cast<int>(references.size());
  auto issues = check(n, references, provenance);
  if (context_id.empty()) issues.push_back("empty context_id");
  if (dimension.empty()) issues.push_back("empty dimension");
  if (!issues.empty()) {
    std::string msg = "invalid reference set for (" + context_id + ", " + dimension + "):";
    for (const auto& issue : issues) msg += " " + issue + ";";
    throw ValidationError(msg);
  }
  std::sort(references.begin(), references.end(),
            [](const ScoredReference& a, const ScoredReference& b) { return a.score < b.score; });
  SyntheticReferenceSet set;
  set.context_id_ = std::move(context_id);
  set.dimension_ = std::move(dimension);
  set.references_ = std::move(references);
  set.provenance_ = std::move(provenance);
  return set;
}

const std::string& SyntheticReferenceSet::text_for(int score) const {
  if (score < 1 || score > n()) {
    throw ValidationError("no reference with score " + std::to_string(score));
  }
  return references_[static_cast<std::size_t>(score - 1)].text;
}

// ---------------------------------------------------------------------------
// ComparisonDistribution

ComparisonDistribution ComparisonDistribution::from_log_weights(double better, double worse,
                                                                double similar) {
  if (!std::isfinite(better) || !std::isfinite(worse) || !std::isfinite(similar)) {
    throw ValidationError("log-weights must be finite");
  }
  const double top = std::max({better, worse, similar});
  const double eb = std::exp(better - top);
  const double ew = std::exp(worse - top);
  const double es = std::exp(similar - top);
  const double z = eb + ew + es;
  return {eb / z, ew / z, es / z};
}

ComparisonDistribution ComparisonDistribution::from_probabilities(double better, double worse,
                                                                  double similar) {
  ComparisonDistribution d(better, worse, similar);
  if (!d.valid()) {
    throw ValidationError("not a probability distribution over {Better, Worse, Similar}");
  }
  return d;
}

ComparisonDistribution ComparisonDistribution::from_counts(std::uint64_t better,
                                                           std::uint64_t worse,
                                                           std::uint64_t similar) {
  const std::uint64_t total = better + worse + similar;
  if (total == 0) throw ValidationError("histogram is empty");
  const auto t = static_cast<double>(total);
  return {static_cast<double>(better) / t, static_cast<double>(worse) / t,
          static_cast<double>(similar) / t};
}

bool ComparisonDistribution::valid() const {
  for (double p : {better_, worse_, similar_}) {
    if (!(p >= 0.0 && p <= 1.0)) return false;
  }
  return std::abs(better_ + worse_ + similar_ - 1.0) <= kSumTolerance;
}

// ---------------------------------------------------------------------------
// validate_dataset

ValidationReport validate_dataset(const Dataset& dataset,
                                  const std::vector<std::string>& allowed_dimensions) {
  ValidationReport report;
  auto add = [&](std::string locator, std::string message) {
    report.issues.push_back({std::move(locator), std::move(message)});
  };

  std::set<std::string> context_ids;
  for (std::size_t i = 0; i < dataset.contexts.size(); ++i) {
    const auto& ctx = dataset.contexts[i];
    const std::string loc = "context[" + std::to_string(i) + "] id=" + ctx.id;
    if (ctx.id.empty()) add(loc, "empty context_id");
    if (ctx.text.empty()) add(loc, "empty context_text");
    if (!context_ids.insert(ctx.id).second) add(loc, "duplicate context_id");
  }

  std::set<std::pair<std::string, std::string>> candidate_keys;
  for (std::size_t i = 0; i < dataset.candidates.size(); ++i) {
    const auto& cand = dataset.candidates[i];
    const std::string loc = "candidate[" + std::to_string(i) + "] context_id=" + cand.context_id +
                            " system_id=" + cand.output.system_id;
    if (cand.output.text.empty()) add(loc, "empty candidate text");
    if (!context_ids.contains(cand.context_id)) add(loc, "unknown context_id");
    if (!candidate_keys.insert({cand.context_id, cand.output.system_id}).second) {
      add(loc, "duplicate (context_id, system_id) key");
    }
  }

  const std::set<std::string> allowed(allowed_dimensions.begin(), allowed_dimensions.end());
  std::set<std::tuple<std::string, std::string, std::string>> annotation_keys;
  for (std::size_t i = 0; i < dataset.annotations.size(); ++i) {
    const auto& ann = dataset.annotations[i];
    const std::string loc = "annotation[" + std::to_string(i) + "] context_id=" + ann.context_id +
                            " system_id=" + ann.system_id + " dimension=" + ann.dimension;
    if (!std::isfinite(ann.score)) add(loc, "non-finite human score");
    if (!allowed.empty() && !allowed.contains(ann.dimension)) add(loc, "unconfigured dimension");
    if (!candidate_keys.contains({ann.context_id, ann.system_id})) {
      add(loc, "annotation without matching candidate");
    }
    if (!annotation_keys.insert({ann.context_id, ann.system_id, ann.dimension}).second) {
      add(loc, "duplicate (context_id, system_id, dimension) key");
    }
  }
  return report;
}

}  // namespace synthref
