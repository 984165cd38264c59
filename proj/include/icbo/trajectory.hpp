#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "icbo/search_space.hpp"

namespace icbo {

/// One evaluated configuration. Scores are minimized.
struct Observation {
  Configuration config;
  double score = 0.0;
  std::size_t trial_index = 0;
};

struct TrajectoryStats {
  double s_min = 0.0;
  double s_max = 0.0;
  std::size_t n = 0;
};

struct LabeledObservation {
  const Observation *obs = nullptr;
  bool good = false;
};

/// Append-only optimization history over a fixed search space.
class Trajectory {
public:
  explicit Trajectory(SearchSpace space) : space_(std::move(space)) {}

  const SearchSpace &space() const noexcept { return space_; }
  const std::vector<Observation> &observations() const noexcept { return obs_; }
  std::size_t size() const noexcept { return obs_.size(); }
  bool empty() const noexcept { return obs_.empty(); }
  const Observation &operator[](std::size_t i) const { return obs_.at(i); }

  /// Appends with the next trial index.
  void append(Configuration cfg, double score);
  /// Appends with an explicit index; must exceed the last one.
  void append(Observation obs);

  /// The observation achieving s_min (first one on ties).
  const Observation &best() const;
  std::vector<double> scores() const;

  /// JSONL, one {"trial", "config", "score"} object per line. Lines carrying
  /// a "meta" key are skipped on read.
  void write_jsonl(std::ostream &out) const;
  static Trajectory read_jsonl(std::istream &in, SearchSpace space);

private:
  SearchSpace space_;
  std::vector<Observation> obs_;
};

TrajectoryStats stats(const Trajectory &traj);

/// Threshold of the top-gamma quantile: the score at ascending-sort index
/// ceil(gamma * n) - 1, so at least one observation is always good.
double quantile_threshold(std::vector<double> scores, double gamma);

/// z_i = 1 iff s_i <= tau. Requires 0 < gamma < 1 and n >= 2.
std::vector<LabeledObservation> label_good_bad(const Trajectory &traj, double gamma);

/// s' = s_min - alpha * (s_max - s_min).
double target_value(const Trajectory &traj, double alpha);
double target_value(double s_min, double s_max, double alpha);

} // namespace icbo
