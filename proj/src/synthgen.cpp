#include "synthref/synthgen.hpp"

#include <algorithm>
#include <iostream>
#include <set>

#include "synthref/hashing.hpp"

namespace synthref {

using json = nlohmann::json;

std::vector<int> GenerationPlan::scores() const {
  std::vector<int> out;
  out.reserve(order.size());
  for (const auto& step : order) out.push_back(step.score);
  return out;
}

namespace {

void bisect(int lo, int hi, std::vector<PlanStep>& out) {
  if (hi - lo < 2) return;
  const int mid = lo + (hi - lo) / 2;
  out.push_back({mid, std::make_pair(lo, hi)});
  bisect(lo, mid, out);
  bisect(mid, hi, out);
}

}  // namespace

GenerationPlan make_plan(int n) {
  if (n < 2) throw ValidationError("ladder size must be >= 2, got " + std::to_string(n));
  GenerationPlan plan{n, {{1, std::nullopt}, {n, std::nullopt}}};
  bisect(1, n, plan.order);
  return plan;
}

std::vector<std::string> check_plan(const GenerationPlan& plan) {
  std::vector<std::string> issues;
  if (plan.n < 2) issues.push_back("n < 2");
  if (plan.order.size() < 2 || plan.order[0] != PlanStep{1, std::nullopt} ||
      plan.order[1] != PlanStep{plan.n, std::nullopt}) {
    issues.push_back("plan must start with the two extremes and no parents");
  }
  std::set<int> done;
  for (std::size_t i = 0; i < plan.order.size(); ++i) {
    const auto& step = plan.order[i];
    if (i >= 2) {
      if (!step.parents) {
        issues.push_back("intermediate " + std::to_string(step.score) + " has no parents");
      } else if (!done.contains(step.parents->first) || !done.contains(step.parents->second)) {
        issues.push_back("intermediate " + std::to_string(step.score) +
                         " precedes one of its parents");
      } else if (!(step.parents->first < step.score && step.score < step.parents->second)) {
        issues.push_back("intermediate " + std::to_string(step.score) +
                         " is not between its parents");
      }
    }
    if (!done.insert(step.score).second) {
      issues.push_back("score " + std::to_string(step.score) + " repeated");
    }
  }
  if (static_cast<int>(done.size()) != plan.n || (!done.empty() && (*done.begin() != 1 ||
                                                                     *done.rbegin() != plan.n))) {
    issues.push_back("plan does not cover 1..n exactly");
  }
  return issues;
}

ReferenceGenerator::ReferenceGenerator(const PromptRegistry& prompts, Backend& backend,
                                       GenerationSettings settings)
    : prompts_(prompts), backend_(backend), settings_(settings) {}

std::string ReferenceGenerator::render_extreme(const EvaluationContext& ctx,
                                               const QualityDimension& dim,
                                               Extreme which) const {
  const TemplateId id{ctx.kind, PromptPurpose::extreme};
  return prompts_.render_from(id, {
                                      {"worst_best", which == Extreme::worst ? "worst" : "best"},
                                      {"col_title", dim.title()},
                                      {"col_description", dim.description},
                                      {std::string(context_placeholder(ctx.kind)), ctx.text},
                                  });
}

std::string ReferenceGenerator::render_intermediate(const EvaluationContext& ctx,
                                                    const QualityDimension& dim,
                                                    const std::string& worse,
                                                    const std::string& better) const {
  const TemplateId id{ctx.kind, PromptPurpose::recursive};
  return prompts_.render_from(id, {
                                      {"col_title", dim.title()},
                                      {"col_description", dim.description},
                                      {"worse_summary", worse},
                                      {"better_summary", better},
                                      {std::string(context_placeholder(ctx.kind)), ctx.text},
                                  });
}

std::string ReferenceGenerator::call(const std::string& prompt,
                                     std::optional<std::uint64_t> seed) const {
  GenerationRequest req;
  req.prompt = prompt;
  req.max_new_tokens = settings_.max_new_tokens;
  req.sampling = settings_.sampling;
  req.sampling.seed = seed;
  return backend_.generate(req);
}

std::string ReferenceGenerator::gen_extreme(const EvaluationContext& ctx,
                                            const QualityDimension& dim, Extreme which) const {
  return call(render_extreme(ctx, dim, which), settings_.sampling.seed);
}

std::string ReferenceGenerator::gen_intermediate(const EvaluationContext& ctx,
                                                 const QualityDimension& dim,
                                                 const std::string& worse,
                                                 const std::string& better) const {
  if (worse.empty() || better.empty()) {
    throw ValidationError("intermediate generation needs non-empty parent texts");
  }
  return call(render_intermediate(ctx, dim, worse, better), settings_.sampling.seed);
}

SyntheticReferenceSet ReferenceGenerator::build_reference_set(const EvaluationContext& ctx,
                                                              const QualityDimension& dim,
                                                              int n) const {
  const GenerationPlan plan = make_plan(n);
  std::vector<std::string> texts(static_cast<std::size_t>(n) + 1);
  auto seed_for = [&](int score) -> std::optional<std::uint64_t> {
    if (!settings_.sampling.seed) return std::nullopt;
    return derive_seed(*settings_.sampling.seed, "rung:" + std::to_string(score));
  };

  for (const auto& step : plan.order) {
    std::string text;
    if (!step.parents) {
      const Extreme which = step.score == 1 ? Extreme::worst : Extreme::best;
      text = call(render_extreme(ctx, dim, which), seed_for(step.score));
    } else {
      const auto& worse = texts[static_cast<std::size_t>(step.parents->first)];
      const auto& better = texts[static_cast<std::size_t>(step.parents->second)];
      text = call(render_intermediate(ctx, dim, worse, better), seed_for(step.score));
      if (text == worse || text == better) {
        std::cerr << "warning: rung " << step.score << " for (" << ctx.id << ", " << dim.name
                  << ") repeats a parent text\n";
      }
    }
    texts[static_cast<std::size_t>(step.score)] = std::move(text);
  }

  std::vector<ScoredReference> refs;
  for (int s = 1; s <= n; ++s) refs.push_back({s, texts[static_cast<std::size_t>(s)]});

  ReferenceProvenance prov;
  prov.model = backend_.descriptor().model_name;
  prov.template_hashes.push_back(prompts_.template_hash({ctx.kind, PromptPurpose::extreme}));
  if (n > 2) {
    prov.template_hashes.push_back(prompts_.template_hash({ctx.kind, PromptPurpose::recursive}));
  }
  prov.generation_order = plan.scores();
  prov.sampling = settings_.sampling;
  prov.max_new_tokens = settings_.max_new_tokens;
  return SyntheticReferenceSet::make(ctx.id, dim.name, std::move(refs), std::move(prov));
}

// ---------------------------------------------------------------------------
// Release format

std::vector<json> to_release_rows(const SyntheticReferenceSet& set, const std::string& dataset) {
  const auto& prov = set.provenance();
  std::vector<json> rows;
  for (const auto& ref : set.references()) {
    const bool extreme = ref.score == 1 || ref.score == set.n();
    json row;
    row["dataset"] = dataset;
    row["context_id"] = set.context_id();
    row["dimension"] = set.dimension();
    row["score"] = ref.score;
    row["n"] = set.n();
    row["text"] = ref.text;
    row["model"] = prov.model;
    row["template_hash"] = extreme ? prov.template_hashes.at(0) : prov.template_hashes.at(1);
    row["seed"] = prov.sampling.seed ? json(*prov.sampling.seed) : json(nullptr);
    row["sampling"] = {{"temperature", prov.sampling.temperature},
                       {"top_p", prov.sampling.top_p},
                       {"max_new_tokens", prov.max_new_tokens}};
    rows.push_back(std::move(row));
  }
  return rows;
}

SyntheticReferenceSet from_release_rows(const std::vector<json>& rows) {
  if (rows.empty()) throw SchemaError("empty reference set");
  try {
    const auto& first = rows.front();
    const std::string context_id = first.at("context_id").get<std::string>();
    const std::string dimension = first.at("dimension").get<std::string>();
    const int n = first.at("n").get<int>();

    ReferenceProvenance prov;
    prov.model = first.at("model").get<std::string>();
    if (!first.at("seed").is_null()) prov.sampling.seed = first.at("seed").get<std::uint64_t>();
    const auto& sampling = first.at("sampling");
    prov.sampling.temperature = sampling.at("temperature").get<double>();
    prov.sampling.top_p = sampling.at("top_p").get<double>();
    prov.max_new_tokens = sampling.at("max_new_tokens").get<int>();

    std::vector<ScoredReference> refs;
    std::string extreme_hash;
    std::string recursive_hash;
    for (const auto& row : rows) {
      if (row.at("context_id") != context_id || row.at("dimension") != dimension ||
          row.at("n").get<int>() != n) {
        throw SchemaError("rows of one reference set disagree on context, dimension or n");
      }
      const int score = row.at("score").get<int>();
      const std::string hash = row.at("template_hash").get<std::string>();
      if (score == 1 || score == n) {
        extreme_hash = hash;
      } else {
        recursive_hash = hash;
      }
      refs.push_back({score, row.at("text").get<std::string>()});
    }
    prov.template_hashes.push_back(extreme_hash);
    if (n > 2) prov.template_hashes.push_back(recursive_hash);
    prov.generation_order = make_plan(n).scores();
    return SyntheticReferenceSet::make(context_id, dimension, std::move(refs), std::move(prov));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed reference row: ") + e.what());
  }
}

}  // namespace synthref
