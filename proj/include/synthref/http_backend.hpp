#pragma once

#include <chrono>
#include <string>

#include <json.hpp>

#include "synthref/backend.hpp"

namespace synthref {

enum class ApiStyle {
  // /completions; continuation scoring via echo=true + logprobs.
  completions,
  // /chat/completions; continuation scoring reads the top-k list of a single
  // generated token, so only a candidate's first token is scored.
  chat,
};

struct HttpBackendOptions {
  BackendDescriptor descriptor;  // endpoint is the API base, e.g. http://host:8000/v1
  ApiStyle api_style = ApiStyle::completions;
  std::string api_key_env;  // name of the environment variable holding the key
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::seconds timeout{120};
  int top_logprobs = 20;
  int sample_batch = 64;
  int sample_max_tokens = 4;
};

/// Backend speaking the OpenAI-compatible REST protocol. Transport failures
/// and 5xx responses are retried with exponential backoff; any other non-2xx
/// status is a ProtocolError. The API key never travels through config or
/// flags, only the named environment variable.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options);

  const BackendDescriptor& descriptor() const override { return options_.descriptor; }

 protected:
  std::string do_generate(const GenerationRequest& req) override;
  std::vector<double> do_score_continuations(const ContinuationScoreRequest& req) override;
  ChoiceHistogram do_sample_choice(const ChoiceSampleRequest& req) override;

 private:
  nlohmann::json post(const std::string& route, const nlohmann::json& body) const;
  nlohmann::json base_body(const std::string& prompt) const;
  double score_echo(const std::string& prompt, const std::string& candidate) const;
  std::vector<double> score_top_k(const ContinuationScoreRequest& req) const;

  HttpBackendOptions options_;
  std::string origin_;  // scheme://host[:port]
  std::string prefix_;  // path prefix such as /v1
};

/// Number of Unicode code points in UTF-8 text; OpenAI-style text_offset
/// values count code points, not bytes.
std::size_t utf8_length(std::string_view text);

}  // namespace synthref
