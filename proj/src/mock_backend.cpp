#include "synthref/mock_backend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "synthref/hashing.hpp"

namespace synthref {

MockBackend::MockBackend(std::string model_name, std::uint64_t seed, int concurrency_limit)
    : seed_(seed) {
  descriptor_.kind = BackendKind::mock;
  descriptor_.model_name = std::move(model_name);
  descriptor_.concurrency_limit = concurrency_limit;
  descriptor_.check();
}

MockBackend::MockBackend(const MockBackend& other)
    : Backend(),
      descriptor_(other.descriptor_),
      seed_(other.seed_),
      completions_(other.completions_),
      logprobs_(other.logprobs_),
      default_logprobs_(other.default_logprobs_),
      generator_(other.generator_),
      scorer_(other.scorer_),
      scoring_enabled_(other.scoring_enabled_),
      generation_budget_(other.generation_budget_) {}

MockBackend MockBackend::from_json(const nlohmann::json& table, int concurrency_limit) {
  MockBackend mock(table.value("model", std::string("mock")), table.value("seed", std::uint64_t{0}),
                   concurrency_limit);
  if (auto it = table.find("completions"); it != table.end()) {
    for (const auto& [hash, text] : it->items()) {
      mock.completions_[hash] = text.get<std::string>();
    }
  }
  if (auto it = table.find("logprobs"); it != table.end()) {
    for (const auto& [hash, entries] : it->items()) {
      for (const auto& [candidate, value] : entries.items()) {
        mock.logprobs_[hash][candidate] = value.get<double>();
      }
    }
  }
  if (auto it = table.find("default_logprobs"); it != table.end()) {
    for (const auto& [candidate, value] : it->items()) {
      mock.default_logprobs_[candidate] = value.get<double>();
    }
  }
  return mock;
}

MockBackend MockBackend::from_file(const std::filesystem::path& path, int concurrency_limit) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock table " + path.string());
  nlohmann::json table;
  try {
    in >> table;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed mock table " + path.string() + ": " + e.what());
  }
  return from_json(table, concurrency_limit);
}

void MockBackend::set_completion(const std::string& prompt, std::string text) {
  completions_[sha256_hex(prompt)] = std::move(text);
}

void MockBackend::set_logprob(const std::string& prompt, const std::string& candidate,
                              double value) {
  logprobs_[sha256_hex(prompt)][candidate] = value;
}

void MockBackend::set_default_logprob(const std::string& candidate, double value) {
  default_logprobs_[candidate] = value;
}

void MockBackend::fail_generation_after(std::size_t calls) {
  std::lock_guard lock(mu_);
  generation_budget_ = calls;
}

std::vector<MockBackend::Call> MockBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::size_t MockBackend::call_count() const {
  std::lock_guard lock(mu_);
  return calls_.size();
}

void MockBackend::clear_calls() {
  std::lock_guard lock(mu_);
  calls_.clear();
}

void MockBackend::record(Call call) {
  std::lock_guard lock(mu_);
  calls_.push_back(std::move(call));
}

std::string MockBackend::do_generate(const GenerationRequest& req) {
  {
    std::lock_guard lock(mu_);
    if (generation_budget_) {
      if (*generation_budget_ == 0) {
        throw TransportError("mock: simulated transport failure", {"attempt 1: refused"});
      }
      --*generation_budget_;
    }
  }
  record({CallKind::generate, req.prompt, {}, req.sampling.seed, 1});

  const std::string hash = sha256_hex(req.prompt);
  if (auto it = completions_.find(hash); it != completions_.end()) return it->second;
  if (generator_) {
    if (auto text = generator_(req)) return *text;
  }
  const std::uint64_t seed = req.sampling.seed.value_or(seed_);
  return "mock completion " + sha256_hex(std::to_string(seed) + ":" + req.prompt).substr(0, 16);
}

double MockBackend::score_one(const std::string& prompt, const std::string& candidate) const {
  const std::string hash = sha256_hex(prompt);
  if (auto it = logprobs_.find(hash); it != logprobs_.end()) {
    if (auto jt = it->second.find(candidate); jt != it->second.end()) return jt->second;
  }
  if (scorer_) {
    if (auto value = scorer_(prompt, candidate)) return *value;
  }
  if (auto it = default_logprobs_.find(candidate); it != default_logprobs_.end()) {
    return it->second;
  }
  // Fallback in [-5, -1], fixed by (seed, prompt, candidate).
  const auto bits = derive_seed(seed_, hash + "\x1f" + candidate);
  return -1.0 - 4.0 * unit_interval(bits);
}

std::vector<double> MockBackend::do_score_continuations(const ContinuationScoreRequest& req) {
  record({CallKind::score, req.prompt, req.candidates, std::nullopt, 0});
  std::vector<double> out;
  out.reserve(req.candidates.size());
  for (const auto& candidate : req.candidates) out.push_back(score_one(req.prompt, candidate));
  return out;
}

ChoiceHistogram MockBackend::do_sample_choice(const ChoiceSampleRequest& req) {
  record({CallKind::sample, req.prompt, req.choices, req.sampling.seed, req.n});

  std::vector<double> weights;
  weights.reserve(req.choices.size());
  for (const auto& choice : req.choices) {
    weights.push_back(std::max(score_one(req.prompt, render_continuation(choice)), kLogProbFloor));
  }
  const double top = *std::max_element(weights.begin(), weights.end());
  double z = 0.0;
  for (auto& w : weights) {
    w = std::exp(w - top);
    z += w;
  }
  std::vector<double> cdf;
  double acc = 0.0;
  for (double w : weights) {
    acc += w / z;
    cdf.push_back(acc);
  }

  const std::uint64_t seed = req.sampling.seed.value_or(seed_);
  std::mt19937_64 rng(derive_seed(seed, sha256_hex(req.prompt)));
  ChoiceHistogram hist{req.choices, std::vector<std::uint64_t>(req.choices.size(), 0)};
  for (int i = 0; i < req.n; ++i) {
    const double u = unit_interval(rng());
    std::size_t k = 0;
    while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
    ++hist.counts[k];
  }
  return hist;
}

}  // namespace synthref
