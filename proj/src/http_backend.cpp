#include "synthref/http_backend.hpp"

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

namespace synthref {

using json = nlohmann::json;

std::size_t utf8_length(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

namespace {

std::string choice_text(const json& choice, ApiStyle style) {
  if (style == ApiStyle::chat) {
    const auto& message = choice.at("message");
    const auto& content = message.at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  }
  return choice.at("text").get<std::string>();
}

const json& first_choice(const json& response) {
  const auto& choices = response.at("choices");
  if (!choices.is_array() || choices.empty()) throw ProtocolError("response has no choices");
  return choices.front();
}

// Longest choice that the (trimmed) text equals or starts with.
std::optional<std::size_t> match_choice(const std::string& text,
                                        const std::vector<std::string>& choices) {
  const std::string t = trim(text);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    const auto& c = choices[i];
    if (t.rfind(c, 0) == 0 && (!best || c.size() > choices[*best].size())) best = i;
  }
  return best;
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
  options_.descriptor.kind = BackendKind::openai_compatible_http;
  options_.descriptor.check();
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  const std::string& endpoint = *options_.descriptor.endpoint;
  if (!std::regex_match(endpoint, m, kUrl)) {
    throw ConfigError("endpoint is not an http(s) URL: " + endpoint);
  }
  origin_ = m[1].str();
  prefix_ = m[2].matched ? m[2].str() : std::string();
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  if (options_.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
}

json HttpBackend::post(const std::string& route, const json& body) const {
  httplib::Headers headers;
  if (!options_.api_key_env.empty()) {
    if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  const std::string path = prefix_ + route;
  const std::string payload = body.dump();

  std::vector<std::string> attempts;
  auto delay = options_.initial_backoff;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    httplib::Client client(origin_);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);
    auto res = client.Post(path, headers, payload, "application/json");
    std::string failure;
    if (!res) {
      failure = "attempt " + std::to_string(attempt) + ": " + httplib::to_string(res.error());
    } else if (res->status >= 500) {
      failure = "attempt " + std::to_string(attempt) + ": HTTP " + std::to_string(res->status);
    } else if (res->status < 200 || res->status >= 300) {
      throw ProtocolError("POST " + path + " returned HTTP " + std::to_string(res->status) + ": " +
                          res->body.substr(0, 512));
    } else {
      try {
        return json::parse(res->body);
      } catch (const json::exception& e) {
        throw ProtocolError("POST " + path + " returned malformed JSON: " + e.what());
      }
    }
    attempts.push_back(failure);
    if (attempt < options_.max_attempts) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  throw TransportError("POST " + path + " failed after " + std::to_string(options_.max_attempts) +
                           " attempts",
                       std::move(attempts));
}

json HttpBackend::base_body(const std::string& prompt) const {
  json body{{"model", options_.descriptor.model_name}};
  if (options_.api_style == ApiStyle::chat) {
    body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  } else {
    body["prompt"] = prompt;
  }
  return body;
}

std::string HttpBackend::do_generate(const GenerationRequest& req) {
  json body = base_body(req.prompt);
  body["max_tokens"] = req.max_new_tokens;
  body["temperature"] = req.sampling.temperature;
  body["top_p"] = req.sampling.top_p;
  if (req.sampling.seed) body["seed"] = *req.sampling.seed;
  const std::string route =
      options_.api_style == ApiStyle::chat ? "/chat/completions" : "/completions";
  try {
    return choice_text(first_choice(post(route, body)), options_.api_style);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("unexpected completion shape: ") + e.what());
  }
}

double HttpBackend::score_echo(const std::string& prompt, const std::string& candidate) const {
  const std::string full = prompt + candidate;
  json body = base_body(full);
  body["max_tokens"] = 1;
  body["echo"] = true;
  body["logprobs"] = 1;
  body["temperature"] = 0.0;
  const json response = post("/completions", body);
  try {
    const auto& lp = first_choice(response).at("logprobs");
    const auto& tokens = lp.at("tokens");
    const auto& token_logprobs = lp.at("token_logprobs");
    if (tokens.size() != token_logprobs.size()) {
      throw ProtocolError("tokens and token_logprobs differ in length");
    }
    const std::size_t begin = utf8_length(prompt);
    const std::size_t end = utf8_length(full);
    const bool has_offsets = lp.contains("text_offset") && lp["text_offset"].is_array();

    double sum = 0.0;
    std::size_t used = 0;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
      const std::size_t start =
          has_offsets ? lp["text_offset"].at(k).get<std::size_t>() : offset;
      offset += utf8_length(tokens[k].get<std::string>());
      if (start < begin || start >= end) continue;
      const auto& v = token_logprobs[k];
      if (!v.is_number()) {
        throw ProtocolError("missing log-probability for a token of candidate '" + candidate + "'");
      }
      sum += v.get<double>();
      ++used;
    }
    if (used == 0) {
      throw ProtocolError("no echoed tokens cover candidate '" + candidate + "'");
    }
    return sum;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("unexpected logprobs shape: ") + e.what());
  }
}

std::vector<double> HttpBackend::score_top_k(const ContinuationScoreRequest& req) const {
  json body = base_body(req.prompt);
  body["max_tokens"] = 1;
  body["logprobs"] = true;
  body["top_logprobs"] = options_.top_logprobs;
  body["temperature"] = 0.0;
  const json response = post("/chat/completions", body);

  std::vector<std::pair<std::string, double>> top;
  try {
    const auto& content = first_choice(response).at("logprobs").at("content");
    if (!content.is_array() || content.empty()) throw ProtocolError("no token logprobs returned");
    for (const auto& entry : content.front().at("top_logprobs")) {
      top.emplace_back(entry.at("token").get<std::string>(), entry.at("logprob").get<double>());
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("unexpected top_logprobs shape: ") + e.what());
  }

  std::vector<double> out;
  for (const auto& candidate : req.candidates) {
    const std::string want = trim(candidate);
    // Longest top-k token that is a prefix of the candidate stands in for
    // its first token; spacing variants of that token are pooled.
    std::string best;
    for (const auto& [token, _] : top) {
      const std::string t = trim(token);
      if (!t.empty() && want.rfind(t, 0) == 0 && t.size() > best.size()) best = t;
    }
    if (best.empty()) {
      throw ProtocolError("first token of candidate '" + candidate + "' is absent from the top-" +
                          std::to_string(options_.top_logprobs) + " list");
    }
    double pooled = 0.0;
    for (const auto& [token, logprob] : top) {
      if (trim(token) == best) pooled += std::exp(logprob);
    }
    out.push_back(std::log(pooled));
  }
  return out;
}

std::vector<double> HttpBackend::do_score_continuations(const ContinuationScoreRequest& req) {
  if (options_.api_style == ApiStyle::chat) return score_top_k(req);
  std::vector<double> out;
  out.reserve(req.candidates.size());
  for (const auto& candidate : req.candidates) out.push_back(score_echo(req.prompt, candidate));
  return out;
}

ChoiceHistogram HttpBackend::do_sample_choice(const ChoiceSampleRequest& req) {
  ChoiceHistogram hist{req.choices, std::vector<std::uint64_t>(req.choices.size(), 0)};
  const std::string route =
      options_.api_style == ApiStyle::chat ? "/chat/completions" : "/completions";
  int remaining = req.n;
  std::uint64_t batch_index = 0;
  while (remaining > 0) {
    const int batch = std::min(remaining, std::max(1, options_.sample_batch));
    json body = base_body(req.prompt);
    body["n"] = batch;
    body["max_tokens"] = options_.sample_max_tokens;
    body["temperature"] = req.sampling.temperature;
    body["top_p"] = req.sampling.top_p;
    body["guided_choice"] = req.choices;
    if (req.sampling.seed) body["seed"] = *req.sampling.seed + batch_index;
    const json response = post(route, body);
    try {
      const auto& choices = response.at("choices");
      if (!choices.is_array() || static_cast<int>(choices.size()) != batch) {
        throw ProtocolError("expected " + std::to_string(batch) + " samples");
      }
      for (const auto& c : choices) {
        const std::string text = choice_text(c, options_.api_style);
        auto k = match_choice(text, req.choices);
        if (!k) throw ProtocolError("sample '" + text + "' is not one of the allowed choices");
        ++hist.counts[*k];
      }
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("unexpected sampling response: ") + e.what());
    }
    remaining -= batch;
    ++batch_index;
  }
  return hist;
}

}  // namespace synthref
