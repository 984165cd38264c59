#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "icbo/emulated.hpp"
#include "icbo/errors.hpp"
#include "icbo/surrogates.hpp"
#include "support.hpp"

using namespace icbo;

namespace {

PromptContext golden_context() {
  const auto fx = golden_fixture();
  return PromptContext{fx.model_card, fx.data_card, ""};
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

SearchSpace line_space() {
  return SearchSpace({HyperparamDef{"x", ParamKind::continuous, Transform::linear, 0.0, 1.0}});
}

Trajectory line_history(std::size_t n) {
  Trajectory t(line_space());
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    t.append(Configuration{{x}}, x);
  }
  return t;
}

PromptContext line_context() {
  const auto space = line_space();
  return PromptContext{ModelCard::for_space("Model", TaskKind::regression, "error", space),
                       DataCard{100, 1, 1, 0, std::nullopt, std::nullopt}, ""};
}

} // namespace

TEST(DiscSurrogate, ConstantResponder) {
  const auto fx = golden_fixture();
  LlmClient client(support::constant_mock("## 0.5 ##"));
  Rng rng(1);
  const auto p = predict(fx.query, fx.traj, DiscSurrogateConfig{}, golden_context(), client, rng);
  EXPECT_EQ(p.mean, 0.5);
  EXPECT_EQ(p.std, 0.0);
  EXPECT_EQ(p.n_accepted, 10u);
  EXPECT_EQ(p.samples.size(), 10u);
}

TEST(DiscSurrogate, AlternatingResponderSampleStd) {
  const auto fx = golden_fixture();
  LlmClient client(support::responder_mock([](const CompletionRequest &r, std::size_t, Rng &) {
    return std::string(r.index % 2 ? "## 0.6 ##" : "## 0.4 ##");
  }));
  Rng rng(2);
  const auto p = predict(fx.query, fx.traj, DiscSurrogateConfig{}, golden_context(), client, rng);
  // Five 0.4s and five 0.6s: sum of squares 10 * 0.01, divided by n - 1 = 9.
  const double expected = std::sqrt(10.0 * 0.01 / 9.0);
  EXPECT_NEAR(p.mean, 0.5, 1e-15);
  EXPECT_NEAR(p.std, expected, 1e-12);
  EXPECT_NEAR(p.std, 0.10540925533894598, 1e-12);
}

TEST(DiscSurrogate, ShuffleReachesThePrompt) {
  // Answers with the score of whichever example is listed first.
  const auto space = line_space();
  auto first_listed = [space](const CompletionRequest &r, std::size_t, Rng &) {
    const auto h = read_prompt_history(r.prompt, space);
    return "## " + format_number(h.values.front()) + " ##";
  };
  const auto traj = line_history(8);
  const Configuration q{{0.3}};
  LlmClient client(support::responder_mock(first_listed));
  Rng r1(3), r2(3);
  DiscSurrogateConfig plain;
  plain.shuffle = false;
  const auto fixed = predict(q, traj, plain, line_context(), client, r1);
  const auto shuffled = predict(q, traj, DiscSurrogateConfig{}, line_context(), client, r2);
  EXPECT_EQ(fixed.std, 0.0);
  EXPECT_EQ(fixed.mean, traj[0].score);
  EXPECT_NE(fixed.samples, shuffled.samples);
  EXPECT_GT(shuffled.std, 0.0);
}

TEST(DiscSurrogate, DeterministicMockWithoutShuffleIsOverconfident) {
  const auto space = line_space();
  EmulatedResponder::Options opts;
  opts.regression_noise = 0.0;
  EmulatedResponder em(space, opts);
  LlmClient client(support::responder_mock(
      [em](const CompletionRequest &r, std::size_t c, Rng &rng) { return em(r, c, rng); }));
  DiscSurrogateConfig plain;
  plain.shuffle = false;
  Rng rng(4);
  const auto p = predict(Configuration{{0.42}}, line_history(6), plain, line_context(), client, rng);
  EXPECT_NEAR(p.std, 0.0, 1e-12);
}

TEST(DiscSurrogate, AggregationIndependentOfArrivalOrder) {
  const auto fx = golden_fixture();
  auto jittery = [](const CompletionRequest &r, std::size_t, Rng &rng) {
    std::this_thread::sleep_for(std::chrono::microseconds(rng.below(3000)));
    return "## " + format_number(0.1 * static_cast<double>(r.index)) + " ##";
  };
  LlmClient serial(support::responder_mock(jittery), 1);
  LlmClient parallel(support::responder_mock(jittery), 8);
  Rng r1(5), r2(5);
  const auto a = predict(fx.query, fx.traj, DiscSurrogateConfig{}, golden_context(), serial, r1);
  const auto b = predict(fx.query, fx.traj, DiscSurrogateConfig{}, golden_context(), parallel, r2);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std, b.std);
}

TEST(DiscSurrogate, ResamplesUnparseableAnswers) {
  const auto fx = golden_fixture();
  auto make = [] {
    auto calls = std::make_shared<std::atomic<int>>(0);
    return support::responder_mock([calls](const CompletionRequest &r, std::size_t, Rng &) {
      const int k = (*calls)++;
      if (k < 10 && r.index >= 3) return std::string("I am not sure");
      return std::string("## 0.25 ##");
    });
  };
  LlmClient client(make(), 1);
  Rng rng(6);
  const auto p = predict(fx.query, fx.traj, DiscSurrogateConfig{}, golden_context(), client, rng);
  EXPECT_EQ(p.n_accepted, 10u);

  LlmClient strict_client(make(), 1);
  DiscSurrogateConfig strict;
  strict.max_resample = 0;
  Rng rng2(6);
  EXPECT_THROW(predict(fx.query, fx.traj, strict, golden_context(), strict_client, rng2),
               SurrogateFailure);
}

TEST(DiscSurrogate, DropsAfterResampleBudget) {
  const auto fx = golden_fixture();
  // The first `good` requests answer; every later one, resamples included, does not.
  auto run = [&](std::size_t good, std::size_t *calls) {
    auto counter = std::make_shared<std::atomic<int>>(0);
    LlmClient client(
        support::responder_mock([counter, good](const CompletionRequest &, std::size_t, Rng &) {
          const auto k = static_cast<std::size_t>((*counter)++);
          return std::string(k < good ? "## 0.1 ##" : "nothing");
        }),
        1);
    Rng rng(7);
    struct Guard {
      std::shared_ptr<std::atomic<int>> c;
      std::size_t *out;
      ~Guard() { *out = static_cast<std::size_t>(c->load()); }
    } guard{counter, calls};
    return predict(fx.query, fx.traj, DiscSurrogateConfig{}, golden_context(), client, rng);
  };
  std::size_t calls = 0;
  const auto p = run(6, &calls);
  EXPECT_EQ(p.n_accepted, 6u);
  EXPECT_EQ(calls, 10u + 3u * 4u);
  EXPECT_THROW(run(4, &calls), SurrogateFailure);
  EXPECT_EQ(calls, 10u + 3u * 6u);
}

TEST(DiscSurrogate, FailuresAndPreconditions) {
  const auto fx = golden_fixture();
  LlmClient garbage(support::constant_mock("no idea"));
  Rng rng(8);
  EXPECT_THROW(predict(fx.query, fx.traj, DiscSurrogateConfig{}, golden_context(), garbage, rng),
               SurrogateFailure);
  DiscSurrogateConfig one;
  one.k_samples = 1;
  EXPECT_THROW(one.validate(), ValidationError);
  LlmClient down(support::responder_mock([](const CompletionRequest &, std::size_t, Rng &) -> std::string {
    throw TransportError("down", "d");
  }));
  EXPECT_THROW(predict(fx.query, fx.traj, DiscSurrogateConfig{}, golden_context(), down, rng),
               TransportError);
  EXPECT_EQ(min_accepted(10), 5u);
  EXPECT_EQ(min_accepted(7), 4u);
}

TEST(ExpectedImprovement, Examples) {
  SurrogatePrediction p;
  p.mean = 0.3;
  p.std = 1.0;
  EXPECT_NEAR(expected_improvement(p, 0.3), normal_pdf(0.0), 1e-15);
  EXPECT_NEAR(expected_improvement(p, 0.3), 0.3989423, 1e-7);
  p.mean = 10.3;
  p.std = 1e-12;
  EXPECT_NEAR(expected_improvement(p, 0.3), 0.0, 1e-300);
  p.mean = 0.1;
  p.std = 0.0;
  EXPECT_DOUBLE_EQ(expected_improvement(p, 0.3), 0.2);
}

TEST(ExpectedImprovement, MatchesMonteCarlo) {
  SurrogatePrediction p;
  p.mean = 0.2;
  p.std = 0.1;
  Rng rng(9);
  const int n = 1000000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += std::max(0.3 - rng.normal(0.2, 0.1), 0.0);
  EXPECT_NEAR(expected_improvement(p, 0.3), acc / n, 1e-3);
}

TEST(ExpectedImprovement, Monotonicity) {
  Rng rng(10);
  for (int t = 0; t < 2000; ++t) {
    SurrogatePrediction a, b;
    const double best = rng.normal();
    a.std = b.std = std::exp(rng.normal());
    a.mean = rng.normal(best, 2.0);
    b.mean = a.mean + rng.uniform(1e-3, 1.0);
    EXPECT_GE(expected_improvement(a, best), expected_improvement(b, best));
    SurrogatePrediction c, d;
    c.mean = d.mean = best + rng.uniform(0.0, 2.0);
    c.std = std::exp(rng.normal());
    d.std = c.std * rng.uniform(1.01, 3.0);
    EXPECT_LE(expected_improvement(c, best), expected_improvement(d, best));
  }
}

TEST(ExpectedImprovement, EmpiricalPlugIn) {
  SurrogatePrediction p;
  p.samples = {0.1, 0.2, 0.5};
  p.mean = 0.8 / 3.0;
  EXPECT_NEAR(expected_improvement_empirical(p, 0.3), (0.2 + 0.1 + 0.0) / 3.0, 1e-15);
  EXPECT_EQ(acquisition(p, 0.3, EiMode::empirical), expected_improvement_empirical(p, 0.3));
  EXPECT_EQ(acquisition(p, 0.3, EiMode::gaussian), expected_improvement(p, 0.3));
}

TEST(GenSurrogate, ConstantAndCounting) {
  const auto fx = golden_fixture();
  LlmClient ones(support::constant_mock("## 1 ##"));
  Rng rng(11);
  const auto a = score(fx.query, fx.traj, GenSurrogateConfig{}, golden_context(), ones, rng);
  EXPECT_EQ(a.p_good, 1.0);
  EXPECT_EQ(a.n_accepted, 10u);
  LlmClient counted(support::responder_mock([](const CompletionRequest &r, std::size_t, Rng &) {
    return std::string(r.index < 3 ? "## 1 ##" : "## 0 ##");
  }));
  const auto b = score(fx.query, fx.traj, GenSurrogateConfig{}, golden_context(), counted, rng);
  EXPECT_DOUBLE_EQ(b.p_good, 0.3);
}

TEST(GenSurrogate, ThresholdRuleRankingKendallTauOne) {
  // Sample k answers 1 iff the query lies below threshold (k + 0.5) / K, so
  // p_good decreases with x; ranking must match sorting by x.
  const std::size_t K = 20;
  const auto space = line_space();
  auto rule = [space, K](const CompletionRequest &r, std::size_t, Rng &) {
    const auto h = read_prompt_history(r.prompt, space);
    const double t = (static_cast<double>(r.index) + 0.5) / static_cast<double>(K);
    return std::string((*h.query)[0] < t ? "## 1 ##" : "## 0 ##");
  };
  LlmClient client(support::responder_mock(rule));
  GenSurrogateConfig conf;
  conf.k_samples = K;
  const auto traj = line_history(8);
  Rng rng(12);
  std::vector<double> xs, ps;
  for (int i = 0; i < 20; ++i) {
    xs.push_back((i + 0.25) / 20.0);
    ps.push_back(score(Configuration{{xs.back()}}, traj, conf, line_context(), client, rng).p_good);
  }
  int concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      const double a = (xs[i] - xs[j]) * -(1.0);  // higher rank for smaller x
      const double b = ps[i] - ps[j];
      if (a * b > 0) ++concordant;
      else ++discordant;
    }
  const double tau = static_cast<double>(concordant - discordant) / (concordant + discordant);
  EXPECT_EQ(tau, 1.0);
}

TEST(GenSurrogate, PGoodInUnitInterval) {
  const auto fx = golden_fixture();
  LlmClient client(make_emulated_mock(fx.space, 3));
  Rng rng(13);
  for (int i = 0; i < 10; ++i) {
    const auto s = score(fx.query, fx.traj, GenSurrogateConfig{}, golden_context(), client, rng);
    EXPECT_GE(s.p_good, 0.0);
    EXPECT_LE(s.p_good, 1.0);
  }
}

TEST(GenSurrogate, FailuresAndPreconditions) {
  const auto fx = golden_fixture();
  LlmClient fractional(support::constant_mock("## 0.7 ##"));
  Rng rng(14);
  EXPECT_THROW(score(fx.query, fx.traj, GenSurrogateConfig{}, golden_context(), fractional, rng),
               SurrogateFailure);
  Trajectory one(fx.space);
  one.append(fx.query, 1.0);
  EXPECT_THROW(score(fx.query, one, GenSurrogateConfig{}, golden_context(), fractional, rng),
               PreconditionError);
  GenSurrogateConfig bad;
  bad.gamma = 1.0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(DensityRatio, Examples) {
  EXPECT_DOUBLE_EQ(ei_from_density_ratio(1.0, 0.25), 1.0);
  EXPECT_NEAR(ei_from_density_ratio(1e15, 0.25), 4.0, 1e-12);
}

TEST(DensityRatio, BayesIdentityAndMonotone) {
  Rng rng(15);
  for (int t = 0; t < 10000; ++t) {
    const double l = std::exp(rng.normal(0.0, 2.0)), g = std::exp(rng.normal(0.0, 2.0));
    const double gamma = rng.uniform(0.01, 0.99);
    const double lhs = ei_from_density_ratio(l / g, gamma);
    const double p = gamma * l / (gamma * l + (1.0 - gamma) * g);
    EXPECT_NEAR(lhs, p / gamma, 1e-12 * std::max(1.0, lhs));
    EXPECT_LT(lhs, ei_from_density_ratio(l * 1.01 / g, gamma));
  }
}
