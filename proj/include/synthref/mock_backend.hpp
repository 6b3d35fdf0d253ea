#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthref/backend.hpp"

namespace synthref {

/// Deterministic in-process backend. Every answer is a pure function of the
/// request and the configured seed, resolved in this order:
///   1. exact table entries keyed by SHA-256 of the prompt,
///   2. a user-installed generator / scorer callback,
///   3. `default_logprobs` keyed by candidate (scoring only),
///   4. a hash-derived fallback.
///
/// sample_choice draws from the softmax of the scores the mock would give the
/// rendered choices, so sampled and probability-based scoring agree in the
/// limit.
class MockBackend : public Backend {
 public:
  enum class CallKind { generate, score, sample };

  struct Call {
    CallKind kind;
    std::string prompt;
    std::vector<std::string> candidates;
    std::optional<std::uint64_t> seed;
    int n = 0;
  };

  using Generator = std::function<std::optional<std::string>(const GenerationRequest&)>;
  using Scorer =
      std::function<std::optional<double>(const std::string& prompt, const std::string& candidate)>;

  explicit MockBackend(std::string model_name = "mock", std::uint64_t seed = 0,
                       int concurrency_limit = 1);

  /// Table file layout:
  ///   {"model": str, "seed": int,
  ///    "completions": {prompt_sha256: text},
  ///    "logprobs": {prompt_sha256: {candidate: value}},
  ///    "default_logprobs": {candidate: value}}
  static MockBackend from_json(const nlohmann::json& table, int concurrency_limit = 1);
  static MockBackend from_file(const std::filesystem::path& path, int concurrency_limit = 1);

  MockBackend(const MockBackend& other);
  MockBackend& operator=(const MockBackend&) = delete;

  void set_completion(const std::string& prompt, std::string text);
  void set_logprob(const std::string& prompt, const std::string& candidate, double value);
  void set_default_logprob(const std::string& candidate, double value);
  void set_generator(Generator generator) { generator_ = std::move(generator); }
  void set_scorer(Scorer scorer) { scorer_ = std::move(scorer); }
  void set_continuation_scoring(bool enabled) { scoring_enabled_ = enabled; }

  /// After this many further generate calls succeed, every generate call
  /// throws TransportError. Simulates an interrupted run.
  void fail_generation_after(std::size_t calls);

  std::vector<Call> calls() const;
  std::size_t call_count() const;
  void clear_calls();

  std::uint64_t seed() const { return seed_; }

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  bool supports_continuation_scoring() const override { return scoring_enabled_; }

 protected:
  std::string do_generate(const GenerationRequest& req) override;
  std::vector<double> do_score_continuations(const ContinuationScoreRequest& req) override;
  ChoiceHistogram do_sample_choice(const ChoiceSampleRequest& req) override;

 private:
  double score_one(const std::string& prompt, const std::string& candidate) const;
  void record(Call call);

  BackendDescriptor descriptor_;
  std::uint64_t seed_;
  std::map<std::string, std::string> completions_;
  std::map<std::string, std::map<std::string, double>> logprobs_;
  std::map<std::string, double> default_logprobs_;
  Generator generator_;
  Scorer scorer_;
  bool scoring_enabled_ = true;
  std::optional<std::size_t> generation_budget_;

  mutable std::mutex mu_;
  std::vector<Call> calls_;
};

}  // namespace synthref
