#include "icbo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "icbo/baselines.hpp"
#include "icbo/errors.hpp"

namespace icbo {

void TaskBounds::validate() const {
  if (!std::isfinite(s_star_min) || !std::isfinite(s_star_max))
    throw ValidationError("task bounds must be finite");
  if (!(s_star_max > s_star_min)) throw ValidationError("task bounds have zero range");
}

std::vector<double> normalized_regret(const std::vector<double> &scores, const TaskBounds &bounds) {
  bounds.validate();
  std::vector<double> out;
  out.reserve(scores.size());
  double best = std::numeric_limits<double>::infinity();
  std::size_t clamped = 0;
  for (double s : scores) {
    best = std::min(best, s);
    double r = (best - bounds.s_star_min) / bounds.range();
    if (r < 0.0 || r > 1.0) {
      ++clamped;
      r = std::clamp(r, 0.0, 1.0);
    }
    out.push_back(r);
  }
  if (clamped)
    spdlog::warn("{} regret values fell outside [0, 1] and were clamped; task bounds look estimated",
                 clamped);
  return out;
}

std::vector<double> normalized_regret(const Trajectory &traj, const TaskBounds &bounds) {
  return normalized_regret(traj.scores(), bounds);
}

double generalized_variance(const std::vector<InternalPoint> &points) {
  if (points.empty()) throw RankDeficiencyError("generalized variance of an empty set");
  const std::size_t d = points.front().size();
  if (points.size() < d + 1)
    throw RankDeficiencyError("generalized variance needs at least " + std::to_string(d + 1) +
                              " points, have " + std::to_string(points.size()));
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, static_cast<Eigen::Index>(j)) = points[i][j];
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = (c.transpose() * c) / static_cast<double>(n - 1);
  // Partial-pivot LU keeps the sign honest; round-off below zero is clipped.
  return std::max(cov.determinant(), 0.0);
}

double generalized_variance(const std::vector<Configuration> &points, const SearchSpace &space) {
  std::vector<InternalPoint> xs;
  xs.reserve(points.size());
  for (const auto &p : points) xs.push_back(space.to_internal(p));
  if (!xs.empty() && xs.front().size() != space.d())
    throw PreconditionError("configuration dimension differs from the space");
  return generalized_variance(xs);
}

CalibrationReport calibration(const std::vector<SurrogatePrediction> &preds,
                              const std::vector<double> &truths) {
  if (preds.size() != truths.size()) throw PreconditionError("calibration inputs differ in length");
  if (preds.size() < 2) throw InsufficientDataError("calibration needs at least 2 predictions");
  const auto n = static_cast<double>(preds.size());
  const auto [lo, hi] = std::minmax_element(truths.begin(), truths.end());
  if (!(*hi > *lo)) throw PreconditionError("constant truths give NRMSE a zero range");
  const double truth_mean = std::accumulate(truths.begin(), truths.end(), 0.0) / n;

  double sse = 0.0, sst = 0.0, lpd = 0.0, covered = 0.0, sharp = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double e = truths[i] - preds[i].mean;
    sse += e * e;
    sst += (truths[i] - truth_mean) * (truths[i] - truth_mean);
    const double sd = std::max(preds[i].std, kLpdStdFloor);
    lpd += -0.5 * std::log(2.0 * std::numbers::pi) - std::log(sd) - 0.5 * (e / sd) * (e / sd);
    if (std::abs(e) <= preds[i].std) covered += 1.0;
    sharp += preds[i].std;
  }
  CalibrationReport r;
  r.nrmse = std::sqrt(sse / n) / (*hi - *lo);
  r.r2 = 1.0 - sse / sst;
  r.lpd = lpd / n;
  r.coverage_1sd = covered / n;
  r.sharpness = sharp / n;
  return r;
}

double candidate_loglik(const std::vector<Configuration> &candidates, const Trajectory &traj) {
  if (traj.size() < 2) throw InsufficientDataError("candidate log-likelihood needs 2 observations");
  if (candidates.empty()) throw PreconditionError("candidate log-likelihood of an empty set");
  std::vector<InternalPoint> observed;
  for (const auto &o : traj.observations()) observed.push_back(traj.space().to_internal(o.config));
  const auto kde = KdeModel::fit(observed, KdeKind::multivariate);
  double acc = 0.0;
  for (const auto &c : candidates) acc += kde.log_pdf(traj.space().to_internal(c));
  return acc / static_cast<double>(candidates.size());
}

RegretSummary avg_and_best_regret(const std::vector<Configuration> &candidates,
                                  const std::function<double(const Configuration &)> &objective,
                                  const TaskBounds &bounds) {
  if (candidates.empty()) throw PreconditionError("regret of an empty candidate set");
  bounds.validate();
  RegretSummary out{0.0, std::numeric_limits<double>::infinity()};
  for (const auto &c : candidates) {
    const double r = (objective(c) - bounds.s_star_min) / bounds.range();
    out.avg += r;
    out.best = std::min(out.best, r);
  }
  out.avg /= static_cast<double>(candidates.size());
  return out;
}

} // namespace icbo
