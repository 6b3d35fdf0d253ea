#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "synthref/backend.hpp"
#include "synthref/config.hpp"
#include "synthref/core.hpp"
#include "synthref/prompts.hpp"

namespace synthref {

struct ItemFailure {
  std::string item;
  std::string error;
};

struct CommandResult {
  std::size_t items = 0;
  std::vector<ItemFailure> failures;
  std::vector<std::filesystem::path> outputs;

  int exit_code() const { return failures.empty() ? 0 : 1; }
};

std::unique_ptr<Backend> make_backend(const RunConfig& config);

Dataset load_dataset(const RunConfig& config);

/// Dimension definitions for the dataset, narrowed to config.dimensions when
/// that list is non-empty (in the listed order).
DimensionSet resolve_dimensions(const RunConfig& config, const Dataset& dataset);

/// Runs f(0..count-1) on up to `workers` threads. f must not throw.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& f);

// Output file names under config.out.
inline constexpr const char* kReferencesFile = "references.jsonl";
inline constexpr const char* kGenerateFailuresFile = "generate_failures.jsonl";
inline constexpr const char* kScoresFile = "scores.jsonl";
inline constexpr const char* kScoreFailuresFile = "score_failures.jsonl";
inline constexpr const char* kMetaevalJson = "metaeval.json";
inline constexpr const char* kMetaevalCsv = "metaeval.csv";
inline constexpr const char* kAxisCsv = "axis_corr.csv";
inline constexpr const char* kAxisText = "axis_corr.txt";

// Per-item randomness. A reference set's seed is derive_seed(seed, digest of
// its cache key); a score item's is derive_seed(seed, "score" + its key
// fields). Neither depends on execution order.

/// One reference set per (context, dimension), served from the cache when
/// present. Writes the release JSONL export and, on failures, a manifest.
CommandResult cmd_generate(const RunConfig& config, Backend& backend, std::ostream& log);

/// One score row per (context, system, dimension) from the exported
/// references.
CommandResult cmd_score(const RunConfig& config, Backend& backend, std::ostream& log);

/// Joins score rows with human annotations and reports every configured
/// level for every dimension.
CommandResult cmd_metaeval(const RunConfig& config, std::ostream& log);

/// Sample-level correlations between human annotation axes.
CommandResult cmd_axis_corr(const RunConfig& config, std::ostream& log);

CommandResult cmd_validate(const RunConfig& config, std::ostream& log);

}  // namespace synthref
