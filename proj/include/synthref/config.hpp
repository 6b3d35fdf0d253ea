#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "synthref/backend.hpp"
#include "synthref/correlation.hpp"
#include "synthref/http_backend.hpp"
#include "synthref/metaeval.hpp"
#include "synthref/scorer.hpp"

namespace synthref {

struct RunConfig {
  // backend
  BackendKind backend = BackendKind::mock;
  std::string model = "mock";
  std::optional<std::string> endpoint;
  ApiStyle api_style = ApiStyle::completions;
  std::string api_key_env = "OPENAI_API_KEY";
  int concurrency = 1;
  std::optional<std::filesystem::path> mock_table;

  // dataset: summeval | topicalchat | hanna | canonical
  std::string dataset = "summeval";
  std::filesystem::path dataset_path;
  std::optional<std::filesystem::path> contexts_path;  // canonical only
  std::optional<std::filesystem::path> dimensions_file;
  std::vector<std::string> dimensions;  // empty: every shipped dimension
  bool allow_missing_text = false;
  std::optional<int> annotator;
  std::optional<std::filesystem::path> asset_dir;

  // method
  int n = 5;
  ScoreVariant variant = ScoreVariant::bws_prob;
  int n_samples = 100;
  double similar_weight = 0.0;
  std::optional<std::uint64_t> seed = 0;
  double temperature = 1.0;
  double top_p = 0.95;
  int max_new_tokens = 512;

  // io
  std::filesystem::path cache_dir = ".synthref-cache";
  std::filesystem::path out = "synthref-out";

  // meta-evaluation
  std::vector<Level> levels = {Level::sample};
  CorrelationKind correlation = CorrelationKind::spearman;
  bool impute_zero = false;

  /// Throws ConfigError on a violated invariant.
  void check() const;
};

/// Sets one key from a parsed value; throws ConfigError on unknown keys or
/// mistyped values. Shared by the file loader and flag overrides.
void apply_setting(RunConfig& config, std::string_view key, const nlohmann::json& value);

/// `key = value` lines. Values: "strings", integers, reals, true/false and
/// single-line [lists]. `#` starts a comment. `[section]` headers are
/// accepted and ignored, so keys must be unique across the file.
std::map<std::string, nlohmann::json> parse_config_text(std::string_view text);

RunConfig load_config(const std::filesystem::path& path);

}  // namespace synthref
