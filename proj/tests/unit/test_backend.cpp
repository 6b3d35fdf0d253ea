#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <thread>

#include "support.hpp"
#include "synthref/hashing.hpp"
#include "synthref/mock_backend.hpp"

using namespace synthref;

namespace {

GenerationRequest gen(const std::string& prompt, std::optional<std::uint64_t> seed = 3) {
  GenerationRequest r;
  r.prompt = prompt;
  r.sampling.seed = seed;
  return r;
}

ChoiceSampleRequest sample(const std::string& prompt, int n, std::uint64_t seed = 5) {
  ChoiceSampleRequest r;
  r.prompt = prompt;
  r.choices = {"Better", "Worse", "Similar"};
  r.n = n;
  r.sampling.seed = seed;
  return r;
}

// Log-weights whose softmax is (pb, pw, ps).
void set_probs(MockBackend& m, double pb, double pw, double ps) {
  m.set_default_logprob(" Better", std::log(pb));
  m.set_default_logprob(" Worse", std::log(pw));
  m.set_default_logprob(" Similar", ps > 0 ? std::log(ps) : -1000.0);
}

}  // namespace

TEST(RenderContinuation, AddsOneLeadingSpace) {
  EXPECT_EQ(render_continuation("Better"), " Better");
  EXPECT_EQ(render_continuation("5"), " 5");
}

TEST(MockGenerate, EchoesTable) {
  MockBackend m;
  m.set_completion("P", "S");
  EXPECT_EQ(m.generate(gen("P")), "S");
}

TEST(MockGenerate, SameSeedSameOutput) {
  MockBackend a("mock", 9), b("mock", 9);
  EXPECT_EQ(a.generate(gen("prompt")), b.generate(gen("prompt")));
  EXPECT_EQ(a.generate(gen("prompt", 1)), a.generate(gen("prompt", 1)));
  EXPECT_NE(a.generate(gen("prompt", 1)), a.generate(gen("prompt", 2)));
}

TEST(MockGenerate, TrimsAndRetriesBlankOutputWithIncrementedSeed) {
  MockBackend m;
  m.set_generator([](const GenerationRequest& r) -> std::optional<std::string> {
    if (*r.sampling.seed < 12) return std::string("   \n");
    return std::string("  ok  ");
  });
  EXPECT_EQ(m.generate(gen("p", 10)), "ok");
  const auto calls = m.calls();
  ASSERT_EQ(calls.size(), 3u);
  EXPECT_EQ(*calls[0].seed, 10u);
  EXPECT_EQ(*calls[1].seed, 11u);
  EXPECT_EQ(*calls[2].seed, 12u);
}

TEST(MockGenerate, DegenerateAfterThreeBlankAttempts) {
  MockBackend m;
  m.set_completion("p", " ");
  EXPECT_THROW(m.generate(gen("p")), DegenerateOutputError);
  EXPECT_EQ(m.call_count(), 3u);
}

TEST(MockGenerate, RejectsZeroTokenBudget) {
  MockBackend m;
  auto r = gen("p");
  r.max_new_tokens = 0;
  EXPECT_THROW(m.generate(r), ValidationError);
}

TEST(MockGenerate, SimulatedTransportFailureCarriesAttempts) {
  MockBackend m;
  m.fail_generation_after(1);
  EXPECT_NO_THROW(m.generate(gen("a")));
  try {
    m.generate(gen("b"));
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_FALSE(e.attempts().empty());
  }
}

TEST(MockScore, TableValuesInRequestOrder) {
  MockBackend m;
  m.set_logprob("P", "Worse", -1.0);
  m.set_logprob("P", "Better", -2.0);
  m.set_logprob("P", "Similar", -3.0);
  auto out = m.score_continuations({"P", {"Worse", "Better", "Similar"}});
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].logprob, -1.0);
  EXPECT_EQ(out[1].logprob, -2.0);
  EXPECT_EQ(out[2].logprob, -3.0);
  EXPECT_EQ(out[1].candidate, "Better");
}

TEST(MockScore, SingleCandidateShape) {
  MockBackend m;
  auto out = m.score_continuations({"P", {"anything"}});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(std::isfinite(out[0].logprob));
}

TEST(MockScore, PermutationPreservesPerCandidateValues) {
  MockBackend m("mock", 4);
  std::vector<std::string> cands{" a", " b", " c", " d", " e"};
  auto base = m.score_continuations({"Q", cands});
  std::mt19937 rng(1);
  for (int t = 0; t < 20; ++t) {
    auto perm = cands;
    std::shuffle(perm.begin(), perm.end(), rng);
    auto out = m.score_continuations({"Q", perm});
    for (std::size_t i = 0; i < perm.size(); ++i) {
      auto it = std::find_if(base.begin(), base.end(),
                             [&](const ContinuationScore& s) { return s.candidate == perm[i]; });
      EXPECT_EQ(out[i].candidate, perm[i]);
      EXPECT_EQ(out[i].logprob, it->logprob);
    }
  }
}

TEST(MockScore, ContractErrors) {
  MockBackend m;
  EXPECT_THROW(m.score_continuations({"P", {}}), ValidationError);
  EXPECT_THROW(m.score_continuations({"P", {"a", "a"}}), ValidationError);
  EXPECT_THROW(m.score_continuations({"P", {""}}), ValidationError);
  m.set_continuation_scoring(false);
  try {
    m.score_continuations({"P", {"a"}});
    FAIL() << "expected CapabilityError";
  } catch (const CapabilityError& e) {
    EXPECT_NE(std::string(e.what()).find("sampled"), std::string::npos);
  }
}

TEST(MockScore, NonFiniteValueIsProtocolError) {
  MockBackend m;
  m.set_logprob("P", "x", NAN);
  EXPECT_THROW(m.score_continuations({"P", {"x"}}), ProtocolError);
}

TEST(MockScore, PureFunctionOfRequestAndSeed) {
  MockBackend a("mock", 77), b("mock", 77);
  auto x = a.score_continuations({"prompt", {" Better", " Worse"}});
  auto y = b.score_continuations({"prompt", {" Better", " Worse"}});
  EXPECT_EQ(x[0].logprob, y[0].logprob);
  EXPECT_EQ(x[1].logprob, y[1].logprob);
}

TEST(MockSample, DegenerateMockAlwaysBetter) {
  MockBackend m;
  m.set_default_logprob(" Better", 0.0);
  m.set_default_logprob(" Worse", -1000.0);
  m.set_default_logprob(" Similar", -1000.0);
  auto h = m.sample_choice(sample("P", 10));
  EXPECT_EQ(h.count("Better"), 10u);
  EXPECT_EQ(h.count("Worse"), 0u);
  EXPECT_EQ(h.count("Similar"), 0u);
}

TEST(MockSample, TotalsMatchN) {
  MockBackend m;
  set_probs(m, 0.5, 0.5, 0.0);
  for (int n : {1, 2, 7, 100, 1001}) {
    auto h = m.sample_choice(sample("P", n));
    EXPECT_EQ(h.total(), static_cast<std::uint64_t>(n));
    EXPECT_EQ(h.counts.size(), 3u);
  }
}

TEST(MockSample, BinomialThreeSigma) {
  // Over many seeds: pooled frequencies match the softmax, and single runs
  // leave the 3-sigma band about as rarely as a true binomial does.
  MockBackend m;
  set_probs(m, 0.7, 0.2, 0.1);
  const int n = 1000, seeds = 300;
  const double p[] = {0.7, 0.2, 0.1};
  double pooled[3] = {0, 0, 0};
  int outside = 0;
  for (int s = 0; s < seeds; ++s) {
    auto h = m.sample_choice(sample("P", n, static_cast<std::uint64_t>(s)));
    for (int k = 0; k < 3; ++k) {
      pooled[k] += static_cast<double>(h.counts[k]);
      if (std::abs(static_cast<double>(h.counts[k]) - n * p[k]) >
          3 * std::sqrt(n * p[k] * (1 - p[k]))) {
        ++outside;
      }
    }
  }
  for (int k = 0; k < 3; ++k) {
    const double total = static_cast<double>(n) * seeds;
    EXPECT_LE(std::abs(pooled[k] - total * p[k]), 3 * std::sqrt(total * p[k] * (1 - p[k])))
        << k;
  }
  EXPECT_LE(outside, 9);  // expected about 2.4 of 900
}

TEST(MockSample, DeterministicGivenSeed) {
  MockBackend m;
  set_probs(m, 0.4, 0.4, 0.2);
  EXPECT_EQ(m.sample_choice(sample("P", 50, 1)).counts, m.sample_choice(sample("P", 50, 1)).counts);
}

TEST(MockSample, ContractErrors) {
  MockBackend m;
  auto r = sample("P", 0);
  EXPECT_THROW(m.sample_choice(r), ValidationError);
  r = sample("P", 3);
  r.choices = {"A", "A"};
  EXPECT_THROW(m.sample_choice(r), ValidationError);
}

TEST(MockBackend, ConcurrentCallsMatchSerial) {
  MockBackend m("mock", 13, 8);
  std::vector<std::string> serial;
  for (int i = 0; i < 64; ++i) serial.push_back(m.generate(gen("p" + std::to_string(i))));
  std::vector<std::string> parallel(64);
  std::vector<std::thread> pool;
  for (int t = 0; t < 8; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < 64; i += 8) parallel[i] = m.generate(gen("p" + std::to_string(i)));
    });
  }
  for (auto& th : pool) th.join();
  EXPECT_EQ(serial, parallel);
}

TEST(MockBackend, LoadsTableFile) {
  testing_support::ScratchDir dir("mock");
  nlohmann::json table = {
      {"model", "table-model"},
      {"seed", 4},
      {"completions", {{sha256_hex("P"), "from file"}}},
      {"logprobs", {{sha256_hex("P"), {{" Better", -0.5}}}}},
      {"default_logprobs", {{" Worse", -7.0}}}};
  testing_support::spit(dir / "t.json", table.dump());
  auto m = MockBackend::from_file(dir / "t.json");
  EXPECT_EQ(m.descriptor().model_name, "table-model");
  EXPECT_EQ(m.generate(gen("P")), "from file");
  auto s = m.score_continuations({"P", {" Better", " Worse"}});
  EXPECT_EQ(s[0].logprob, -0.5);
  EXPECT_EQ(s[1].logprob, -7.0);
}

TEST(BackendDescriptor, EndpointIffHttp) {
  BackendDescriptor d{BackendKind::mock, "m", std::nullopt, 1};
  EXPECT_NO_THROW(d.check());
  d.endpoint = "http://x";
  EXPECT_THROW(d.check(), ConfigError);
  d.kind = BackendKind::openai_compatible_http;
  EXPECT_NO_THROW(d.check());
  d.endpoint.reset();
  EXPECT_THROW(d.check(), ConfigError);
  d.endpoint = "http://x";
  d.concurrency_limit = 0;
  EXPECT_THROW(d.check(), ConfigError);
}
