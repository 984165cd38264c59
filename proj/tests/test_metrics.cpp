#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "icbo/baselines.hpp"
#include "icbo/errors.hpp"
#include "icbo/metrics.hpp"
#include "icbo/rng.hpp"
#include "support.hpp"

using namespace icbo;

namespace {

SurrogatePrediction pred(double mean, double std) {
  SurrogatePrediction p;
  p.mean = mean;
  p.std = std;
  return p;
}

SearchSpace unit_space(std::size_t d) {
  std::vector<HyperparamDef> dims;
  for (std::size_t i = 0; i < d; ++i)
    dims.push_back({"x" + std::to_string(i), ParamKind::continuous, Transform::linear, -10.0, 10.0});
  return SearchSpace(dims);
}

} // namespace

TEST(NormalizedRegret, Examples) {
  const TaskBounds b{0.0, 2.0};
  EXPECT_EQ(normalized_regret({1.0, 1.5, 0.5, 0.8}, b), (std::vector<double>{0.5, 0.5, 0.25, 0.25}));
  EXPECT_EQ(normalized_regret({0.0}, b), std::vector<double>{0.0});
  EXPECT_EQ(normalized_regret({2.0}, b), std::vector<double>{1.0});
  // Outside the bounds is clamped.
  EXPECT_EQ(normalized_regret({-1.0, 3.0}, b), (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(normalized_regret({3.0}, b), std::vector<double>{1.0});
  EXPECT_THROW(normalized_regret({1.0}, TaskBounds{1.0, 1.0}), ValidationError);
  EXPECT_THROW(normalized_regret({1.0}, TaskBounds{0.0, INFINITY}), ValidationError);
}

TEST(NormalizedRegret, MonotoneBoundedAndAffineInvariant) {
  Rng rng(1);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> s(1 + rng.below(40));
    for (auto &v : s) v = rng.uniform();
    const TaskBounds b{0.0, 1.0};
    const auto r = normalized_regret(s, b);
    for (std::size_t i = 0; i < r.size(); ++i) {
      EXPECT_GE(r[i], 0.0);
      EXPECT_LE(r[i], 1.0);
      if (i) EXPECT_LE(r[i], r[i - 1]);
    }
    const double a = std::exp(rng.normal()), c = rng.normal(0.0, 5.0);
    std::vector<double> s2 = s;
    for (auto &v : s2) v = a * v + c;
    const auto r2 = normalized_regret(s2, TaskBounds{c, a + c});
    for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(r[i], r2[i], 1e-12);
  }
}

TEST(NormalizedRegret, TrajectoryOverload) {
  Trajectory t(unit_space(1));
  t.append(Configuration{{0.0}}, 3.0);
  t.append(Configuration{{1.0}}, 1.0);
  EXPECT_EQ(normalized_regret(t, TaskBounds{1.0, 5.0}), (std::vector<double>{0.5, 0.0}));
}

TEST(GeneralizedVariance, TwoDimensionalClosedForm) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    std::vector<InternalPoint> pts(3 + rng.below(30), InternalPoint(2));
    for (auto &p : pts) {
      p[0] = rng.normal();
      p[1] = 0.5 * p[0] + rng.normal();
    }
    const double n = static_cast<double>(pts.size());
    double mx = 0, my = 0;
    for (const auto &p : pts) {
      mx += p[0];
      my += p[1];
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto &p : pts) {
      sxx += (p[0] - mx) * (p[0] - mx);
      syy += (p[1] - my) * (p[1] - my);
      sxy += (p[0] - mx) * (p[1] - my);
    }
    const double oracle = (sxx * syy - sxy * sxy) / ((n - 1) * (n - 1));
    EXPECT_NEAR(generalized_variance(pts), oracle, 1e-10 * (1.0 + oracle));
  }
}

TEST(GeneralizedVariance, ExamplesAndRankDeficiency) {
  // Unit square corners: covariance diag(1/3, 1/3).
  const std::vector<InternalPoint> sq{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  EXPECT_NEAR(generalized_variance(sq), 1.0 / 9.0, 1e-15);
  EXPECT_THROW(generalized_variance(std::vector<InternalPoint>{{0, 0}, {1, 1}}), RankDeficiencyError);
  EXPECT_THROW(generalized_variance(std::vector<InternalPoint>{}), RankDeficiencyError);
  // Collinear points have zero volume.
  EXPECT_NEAR(generalized_variance(std::vector<InternalPoint>{{0, 0}, {1, 1}, {2, 2}, {3, 3}}), 0.0, 1e-14);
}

TEST(GeneralizedVariance, InvariantUnderPermutationAndTranslation) {
  Rng rng(3);
  std::vector<InternalPoint> pts(50, InternalPoint(3));
  for (auto &p : pts)
    for (auto &v : p) v = rng.normal();
  const double base = generalized_variance(pts);
  auto moved = pts;
  for (auto &p : moved)
    for (auto &v : p) v += 7.0;
  EXPECT_NEAR(generalized_variance(moved), base, 1e-10 * base);
  std::vector<InternalPoint> perm;
  for (auto i : rng.permutation(pts.size())) perm.push_back(pts[i]);
  EXPECT_NEAR(generalized_variance(perm), base, 1e-12 * base);
  // Scaling one coordinate by 2 scales the determinant by 4.
  auto scaled = pts;
  for (auto &p : scaled) p[1] *= 2.0;
  EXPECT_NEAR(generalized_variance(scaled), 4.0 * base, 1e-10 * base);
}

TEST(GeneralizedVariance, ConfigurationsUseInternalCoordinates) {
  const auto space = support::rf_space();
  Rng rng(4);
  std::vector<Configuration> cs;
  std::vector<InternalPoint> xs;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> u(space.d());
    for (auto &v : u) v = rng.uniform();
    cs.push_back(space.from_unit(u));
    xs.push_back(space.to_internal(cs.back()));
  }
  EXPECT_EQ(generalized_variance(cs, space), generalized_variance(xs));
}

TEST(Calibration, Examples) {
  const std::vector<SurrogatePrediction> p{pred(0.0, 1.0), pred(1.0, 1.0), pred(2.0, 0.5), pred(3.0, 2.0)};
  const std::vector<double> y{0.5, 1.0, 3.0, 3.0};
  const auto r = calibration(p, y);
  EXPECT_DOUBLE_EQ(r.coverage_1sd, 0.75);
  EXPECT_DOUBLE_EQ(r.sharpness, 4.5 / 4.0);
  const double sse = 0.25 + 0.0 + 1.0 + 0.0;
  EXPECT_NEAR(r.nrmse, std::sqrt(sse / 4.0) / 2.5, 1e-15);
  const double mean = 7.5 / 4.0;
  double sst = 0.0;
  for (double v : y) sst += (v - mean) * (v - mean);
  EXPECT_NEAR(r.r2, 1.0 - sse / sst, 1e-15);
  double lpd = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double z = (y[i] - p[i].mean) / p[i].std;
    lpd += std::log(std::exp(-0.5 * z * z) / (p[i].std * std::sqrt(2.0 * std::numbers::pi)));
  }
  EXPECT_NEAR(r.lpd, lpd / 4.0, 1e-14);
}

TEST(Calibration, PerfectPredictorAndFloors) {
  const std::vector<SurrogatePrediction> p{pred(1.0, 0.0), pred(2.0, 0.0)};
  const auto r = calibration(p, {1.0, 2.0});
  EXPECT_EQ(r.nrmse, 0.0);
  EXPECT_EQ(r.r2, 1.0);
  EXPECT_EQ(r.coverage_1sd, 1.0);
  EXPECT_TRUE(std::isfinite(r.lpd));
  EXPECT_NEAR(r.lpd, -0.5 * std::log(2.0 * std::numbers::pi) - std::log(kLpdStdFloor), 1e-9);
  EXPECT_THROW(calibration(p, {1.0}), PreconditionError);
  EXPECT_THROW(calibration({pred(0, 1)}, {1.0}), InsufficientDataError);
  EXPECT_THROW(calibration(p, {1.0, 1.0}), PreconditionError);
}

TEST(Calibration, AffineAndPermutationInvariance) {
  Rng rng(5);
  std::vector<SurrogatePrediction> p;
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    y.push_back(rng.normal());
    p.push_back(pred(y.back() + rng.normal(0.0, 0.3), std::exp(rng.normal(-1.0, 0.5))));
  }
  const auto base = calibration(p, y);
  const double a = 3.5, c = -2.0;
  auto p2 = p;
  auto y2 = y;
  for (std::size_t i = 0; i < p2.size(); ++i) {
    p2[i].mean = a * p2[i].mean + c;
    p2[i].std *= a;
    y2[i] = a * y2[i] + c;
  }
  const auto moved = calibration(p2, y2);
  EXPECT_NEAR(moved.nrmse, base.nrmse, 1e-12);
  EXPECT_NEAR(moved.r2, base.r2, 1e-12);
  EXPECT_EQ(moved.coverage_1sd, base.coverage_1sd);
  EXPECT_NEAR(moved.sharpness, a * base.sharpness, 1e-12);
  EXPECT_NEAR(moved.lpd, base.lpd - std::log(a), 1e-12);

  const auto order = rng.permutation(p.size());
  std::vector<SurrogatePrediction> p3;
  std::vector<double> y3;
  for (auto i : order) {
    p3.push_back(p[i]);
    y3.push_back(y[i]);
  }
  const auto perm = calibration(p3, y3);
  EXPECT_NEAR(perm.nrmse, base.nrmse, 1e-12);
  EXPECT_NEAR(perm.lpd, base.lpd, 1e-12);
  EXPECT_EQ(perm.coverage_1sd, base.coverage_1sd);
}

TEST(CandidateLoglik, MatchesKdeAndPrefersNearbyCandidates) {
  const auto space = unit_space(2);
  Trajectory t(space);
  Rng rng(6);
  std::vector<InternalPoint> obs;
  for (int i = 0; i < 30; ++i) {
    Configuration c{{rng.normal(0.0, 0.5), rng.normal(0.0, 0.5)}};
    t.append(c, 0.0);
    obs.push_back(space.to_internal(c));
  }
  const auto kde = KdeModel::fit(obs, KdeKind::multivariate);
  const std::vector<Configuration> near{Configuration{{0.1, -0.1}}, Configuration{{0.0, 0.2}}};
  const std::vector<Configuration> far{Configuration{{6.0, -6.0}}, Configuration{{-7.0, 5.0}}};
  const double expected =
      (kde.log_pdf(space.to_internal(near[0])) + kde.log_pdf(space.to_internal(near[1]))) / 2.0;
  EXPECT_NEAR(candidate_loglik(near, t), expected, 1e-12);
  EXPECT_GT(candidate_loglik(near, t), candidate_loglik(far, t));
  Trajectory one(space);
  one.append(Configuration{{0.0, 0.0}}, 0.0);
  EXPECT_THROW(candidate_loglik(near, one), InsufficientDataError);
  EXPECT_THROW(candidate_loglik({}, t), PreconditionError);
}

TEST(AvgAndBestRegret, Examples) {
  const std::vector<Configuration> cs{Configuration{{1.0}}, Configuration{{2.0}}, Configuration{{4.0}}};
  const auto r = avg_and_best_regret(cs, [](const Configuration &c) { return c[0]; }, TaskBounds{0.0, 4.0});
  EXPECT_DOUBLE_EQ(r.avg, 7.0 / 12.0);
  EXPECT_DOUBLE_EQ(r.best, 0.25);
  EXPECT_LE(r.best, r.avg);
  EXPECT_THROW(avg_and_best_regret({}, [](const Configuration &) { return 0.0; }, TaskBounds{}),
               PreconditionError);
}
