#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "icbo/candidates.hpp"
#include "icbo/surrogates.hpp"

namespace icbo {

struct SamplerConfig {
  std::size_t m_candidates = 20;
  double alpha = -0.1;
  Ablation ablation = Ablation::full;
  std::size_t max_retry_rounds = 2;
  bool shuffle = true;

  void validate() const;
};

/// Target-conditioned candidate generation. Each of the M requests yields
/// one attempt (the first configuration in its answer). Accepted candidates
/// are in bounds and distinct from each other and from the history at six
/// significant figures. Short rounds are topped up for up to
/// max_retry_rounds more rounds; zero accepted throws SamplerFailure.
CandidateSet propose(const Trajectory &traj, const SamplerConfig &conf, const PromptContext &ctx,
                     LlmClient &client, Rng &rng);

/// Acquisition for candidate `index`; nullopt marks a scoring failure.
using CandidateScorer = std::function<std::optional<double>(const Configuration &, std::size_t)>;

struct Selection {
  std::size_t index = 0;
  Configuration config;
  std::vector<std::optional<double>> scores;
  std::size_t n_failed = 0;
  bool random_fallback = false;
};

/// Argmax with ties to the lowest index; a uniformly random candidate when
/// every score failed.
Selection select_next(const CandidateSet &cands, const CandidateScorer &scorer, Rng &rng);

} // namespace icbo
