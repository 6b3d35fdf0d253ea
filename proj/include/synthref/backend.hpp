#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synthref/core.hpp"
#include "synthref/errors.hpp"

namespace synthref {

/// Summed log-probabilities below this are clamped before any softmax.
inline constexpr double kLogProbFloor = -30.0;

/// Attempts for a generation that comes back empty or whitespace-only.
inline constexpr int kEmptyGenerationAttempts = 3;

/// The single place where a choice word becomes the continuation string that
/// is scored or matched: one leading space ("Better" -> " Better").
std::string render_continuation(std::string_view choice);

struct GenerationRequest {
  std::string prompt;
  int max_new_tokens = 256;
  SamplingParams sampling;
};

struct ContinuationScoreRequest {
  std::string prompt;
  std::vector<std::string> candidates;
};

struct ContinuationScore {
  std::string candidate;
  double logprob = 0.0;
};

struct ChoiceSampleRequest {
  std::string prompt;
  std::vector<std::string> choices;
  int n = 1;
  SamplingParams sampling;
};

/// Counts in the order of the request's choices.
struct ChoiceHistogram {
  std::vector<std::string> choices;
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const;
  std::uint64_t count(std::string_view choice) const;
};

enum class BackendKind { openai_compatible_http, mock };

struct BackendDescriptor {
  BackendKind kind = BackendKind::mock;
  std::string model_name;
  std::optional<std::string> endpoint;
  int concurrency_limit = 1;

  /// Throws ConfigError when the endpoint rule or the limit is violated.
  void check() const;
};

/// Uniform access to a language model. Implementations override the do_*
/// hooks; the public entry points validate requests and enforce the
/// non-empty-generation rule. Every implementation must tolerate concurrent
/// calls up to the descriptor's concurrency limit.
class Backend {
 public:
  virtual ~Backend() = default;

  /// Trimmed completion, never empty. Retries blank output with seed+1, +2.
  std::string generate(const GenerationRequest& req);

  /// Summed teacher-forced log-probability of each candidate given the
  /// prompt, in request order.
  std::vector<ContinuationScore> score_continuations(const ContinuationScoreRequest& req);

  /// Draws n constrained choices.
  ChoiceHistogram sample_choice(const ChoiceSampleRequest& req);

  virtual const BackendDescriptor& descriptor() const = 0;
  virtual bool supports_continuation_scoring() const { return true; }

 protected:
  virtual std::string do_generate(const GenerationRequest& req) = 0;
  virtual std::vector<double> do_score_continuations(const ContinuationScoreRequest& req) = 0;
  virtual ChoiceHistogram do_sample_choice(const ChoiceSampleRequest& req) = 0;
};

std::string trim(std::string_view text);

}  // namespace synthref
