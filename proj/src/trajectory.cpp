#include "icbo/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "icbo/errors.hpp"

namespace icbo {

void Trajectory::append(Configuration cfg, double score) {
  const std::size_t idx = obs_.empty() ? 0 : obs_.back().trial_index + 1;
  append(Observation{std::move(cfg), score, idx});
}

void Trajectory::append(Observation obs) {
  if (!std::isfinite(obs.score))
    throw ValidationError("observation score must be finite");
  if (!obs_.empty() && obs.trial_index <= obs_.back().trial_index)
    throw ValidationError("trial indices must be strictly increasing");
  space_.validate(obs.config);
  obs_.push_back(std::move(obs));
}

const Observation &Trajectory::best() const {
  if (obs_.empty()) throw PreconditionError("best() of an empty trajectory");
  return *std::min_element(obs_.begin(), obs_.end(),
                           [](const auto &a, const auto &b) { return a.score < b.score; });
}

std::vector<double> Trajectory::scores() const {
  std::vector<double> s;
  s.reserve(obs_.size());
  for (const auto &o : obs_) s.push_back(o.score);
  return s;
}

void Trajectory::write_jsonl(std::ostream &out) const {
  for (const auto &o : obs_) {
    nlohmann::ordered_json line;
    line["trial"] = o.trial_index;
    line["config"] = space_.config_to_json(o.config);
    line["score"] = o.score;
    out << line.dump() << '\n';
  }
}

Trajectory Trajectory::read_jsonl(std::istream &in, SearchSpace space) {
  Trajectory traj(std::move(space));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("meta")) continue;
    if (!j.contains("trial") || !j.contains("config") || !j.contains("score"))
      throw ValidationError("line " + std::to_string(lineno) +
                            ": expected trial, config and score");
    traj.append(Observation{traj.space().config_from_json(j["config"]),
                            j["score"].get<double>(), j["trial"].get<std::size_t>()});
  }
  return traj;
}

TrajectoryStats stats(const Trajectory &traj) {
  if (traj.empty()) throw PreconditionError("stats of an empty trajectory");
  TrajectoryStats st{traj[0].score, traj[0].score, traj.size()};
  for (const auto &o : traj.observations()) {
    st.s_min = std::min(st.s_min, o.score);
    st.s_max = std::max(st.s_max, o.score);
  }
  return st;
}

double quantile_threshold(std::vector<double> scores, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw PreconditionError("gamma must lie in (0, 1)");
  if (scores.empty()) throw InsufficientDataError("quantile of no scores");
  std::sort(scores.begin(), scores.end());
  const auto n = static_cast<double>(scores.size());
  auto k = static_cast<std::size_t>(std::ceil(gamma * n));
  k = std::clamp<std::size_t>(k, 1, scores.size());
  return scores[k - 1];
}

std::vector<LabeledObservation> label_good_bad(const Trajectory &traj, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw PreconditionError("gamma must lie in (0, 1)");
  if (traj.size() < 2)
    throw InsufficientDataError("good/bad labelling needs at least 2 observations");
  const double tau = quantile_threshold(traj.scores(), gamma);
  std::vector<LabeledObservation> out;
  out.reserve(traj.size());
  for (const auto &o : traj.observations()) out.push_back({&o, o.score <= tau});
  return out;
}

double target_value(double s_min, double s_max, double alpha) {
  if (!(alpha >= -1.0)) throw PreconditionError("alpha must be >= -1");
  return s_min - alpha * (s_max - s_min);
}

double target_value(const Trajectory &traj, double alpha) {
  const auto st = stats(traj);
  return target_value(st.s_min, st.s_max, alpha);
}

} // namespace icbo
