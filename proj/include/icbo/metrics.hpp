#pragma once

#include <functional>
#include <vector>

#include "icbo/candidates.hpp"
#include "icbo/trajectory.hpp"

namespace icbo {

/// Best and worst attainable scores of a task.
struct TaskBounds {
  double s_star_min = 0.0;
  double s_star_max = 1.0;

  void validate() const;
  double range() const { return s_star_max - s_star_min; }
};

/// Entry t: (min of the first t+1 scores - s*_min) / range. Values outside
/// [0, 1] can only come from estimated bounds; they are clamped and logged.
std::vector<double> normalized_regret(const std::vector<double> &scores, const TaskBounds &bounds);
std::vector<double> normalized_regret(const Trajectory &traj, const TaskBounds &bounds);

/// det of the sample covariance of internal coordinates. Needs >= d+1 points.
double generalized_variance(const std::vector<Configuration> &points, const SearchSpace &space);
double generalized_variance(const std::vector<InternalPoint> &points);

struct CalibrationReport {
  double lpd = 0.0;
  double coverage_1sd = 0.0;
  double sharpness = 0.0;
  double nrmse = 0.0;
  double r2 = 0.0;
};

inline constexpr double kLpdStdFloor = 1e-6;

CalibrationReport calibration(const std::vector<SurrogatePrediction> &preds,
                              const std::vector<double> &truths);

/// Mean log density of the candidates under a multivariate Scott KDE of the
/// observed points.
double candidate_loglik(const std::vector<Configuration> &candidates, const Trajectory &traj);

struct RegretSummary {
  double avg = 0.0;
  double best = 0.0;
};

RegretSummary avg_and_best_regret(const std::vector<Configuration> &candidates,
                                  const std::function<double(const Configuration &)> &objective,
                                  const TaskBounds &bounds);

} // namespace icbo
