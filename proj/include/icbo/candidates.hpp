#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "icbo/search_space.hpp"

namespace icbo {

/// Predictive moments of a surrogate at one configuration.
struct SurrogatePrediction {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> samples;
  std::size_t n_accepted = 0;
};

struct RejectedCandidate {
  std::string raw;
  std::string reason;
};

/// Proposals for one trial. `scores`, when non-empty, parallels `candidates`.
struct CandidateSet {
  std::vector<Configuration> candidates;
  std::vector<double> scores;
  std::vector<RejectedCandidate> rejected;
  std::size_t attempted = 0;
  double acceptance_rate = 0.0;

  std::size_t size() const noexcept { return candidates.size(); }
  bool empty() const noexcept { return candidates.empty(); }
};

} // namespace icbo
