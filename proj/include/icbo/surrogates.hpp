#pragma once

#include <cstddef>
#include <vector>

#include "icbo/candidates.hpp"
#include "icbo/llm_client.hpp"
#include "icbo/prompts.hpp"
#include "icbo/rng.hpp"
#include "icbo/trajectory.hpp"

namespace icbo {

/// What every LLM-backed component needs to render its prompts.
struct PromptContext {
  ModelCard model_card;
  DataCard data_card;
  std::string system_message;
};

enum class EiMode { gaussian, empirical };

struct DiscSurrogateConfig {
  std::size_t k_samples = 10;
  bool shuffle = true;  // false gives the plain Monte-Carlo variant
  Ablation ablation = Ablation::full;
  EiMode ei_mode = EiMode::gaussian;
  /// Extra attempts for a sample whose answer does not parse.
  std::size_t max_resample = 3;

  void validate() const;
};

/// K independent completions of the discriminative prompt for `cfg`, each
/// listing the history in a fresh uniform permutation when shuffling.
/// Unparseable answers are re-asked up to max_resample times, then dropped.
/// Throws SurrogateFailure when fewer than ceil(K/2) samples remain.
SurrogatePrediction predict(const Configuration &cfg, const Trajectory &traj,
                            const DiscSurrogateConfig &conf, const PromptContext &ctx,
                            LlmClient &client, Rng &rng);

/// Closed-form Gaussian EI for minimization; max(s_best - mean, 0) when std = 0.
double expected_improvement(const SurrogatePrediction &pred, double s_best);
/// Plug-in average of max(s_best - s, 0) over the raw samples.
double expected_improvement_empirical(const SurrogatePrediction &pred, double s_best);
double acquisition(const SurrogatePrediction &pred, double s_best, EiMode mode);

struct GenSurrogateConfig {
  double gamma = 0.25;
  std::size_t k_samples = 10;
  bool shuffle = true;
  Ablation ablation = Ablation::full;
  std::size_t max_resample = 3;

  void validate() const;
};

struct GenScore {
  double p_good = 0.0;
  std::size_t n_accepted = 0;
  std::vector<int> labels;
};

/// Probability that `cfg` lands in the top-gamma class, averaged over K
/// classification completions. Needs >= 2 observations.
GenScore score(const Configuration &cfg, const Trajectory &traj, const GenSurrogateConfig &conf,
               const PromptContext &ctx, LlmClient &client, Rng &rng);

/// (gamma + (1 - gamma) / l_over_g)^-1.
double ei_from_density_ratio(double l_over_g, double gamma);

/// ceil(k / 2): the fewest parsed answers that make a valid estimate.
constexpr std::size_t min_accepted(std::size_t k) { return (k + 1) / 2; }

} // namespace icbo
