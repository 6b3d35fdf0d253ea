#include "synthref/backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace synthref {

std::string render_continuation(std::string_view choice) {
  return " " + std::string(choice);
}

std::string trim(std::string_view text) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && is_space(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

std::uint64_t ChoiceHistogram::total() const {
  std::uint64_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

std::uint64_t ChoiceHistogram::count(std::string_view choice) const {
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (choices[i] == choice) return counts[i];
  }
  return 0;
}

void BackendDescriptor::check() const {
  const bool http = kind == BackendKind::openai_compatible_http;
  if (http && (!endpoint || endpoint->empty())) {
    throw ConfigError("http backend requires an endpoint");
  }
  if (!http && endpoint) {
    throw ConfigError("endpoint is only valid for the http backend");
  }
  if (concurrency_limit < 1) {
    throw ConfigError("concurrency_limit must be >= 1");
  }
}

namespace {

void require_distinct(const std::vector<std::string>& items, const char* what) {
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (item.empty()) throw ValidationError(std::string(what) + " must be non-empty");
    if (!seen.insert(item).second) {
      throw ValidationError(std::string(what) + " must be pairwise distinct: '" + item + "'");
    }
  }
}

}  // namespace

std::string Backend::generate(const GenerationRequest& req) {
  if (req.max_new_tokens < 1) throw ValidationError("max_new_tokens must be >= 1");
  GenerationRequest attempt = req;
  for (int i = 0; i < kEmptyGenerationAttempts; ++i) {
    if (req.sampling.seed) attempt.sampling.seed = *req.sampling.seed + static_cast<std::uint64_t>(i);
    std::string text = trim(do_generate(attempt));
    if (!text.empty()) return text;
  }
  throw DegenerateOutputError("empty completion after " +
                              std::to_string(kEmptyGenerationAttempts) + " attempts");
}

std::vector<ContinuationScore> Backend::score_continuations(const ContinuationScoreRequest& req) {
  if (req.candidates.empty()) throw ValidationError("candidates must be non-empty");
  require_distinct(req.candidates, "candidates");
  if (!supports_continuation_scoring()) {
    throw CapabilityError("backend '" + descriptor().model_name +
                          "' cannot score continuations; use the sampled variant");
  }
  const auto values = do_score_continuations(req);
  if (values.size() != req.candidates.size()) {
    throw ProtocolError("backend returned " + std::to_string(values.size()) + " scores for " +
                        std::to_string(req.candidates.size()) + " candidates");
  }
  std::vector<ContinuationScore> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ProtocolError("non-finite log-probability for candidate '" + req.candidates[i] + "'");
    }
    out.push_back({req.candidates[i], values[i]});
  }
  return out;
}

ChoiceHistogram Backend::sample_choice(const ChoiceSampleRequest& req) {
  if (req.n < 1) throw ValidationError("n must be >= 1");
  if (req.choices.empty()) throw ValidationError("choices must be non-empty");
  require_distinct(req.choices, "choices");
  auto hist = do_sample_choice(req);
  if (hist.choices != req.choices || hist.counts.size() != req.choices.size()) {
    throw ProtocolError("histogram does not match the requested choices");
  }
  if (hist.total() != static_cast<std::uint64_t>(req.n)) {
    throw ProtocolError("histogram totals " + std::to_string(hist.total()) + ", expected " +
                        std::to_string(req.n));
  }
  return hist;
}

}  // namespace synthref
