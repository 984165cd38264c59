#pragma once

#include <cstddef>
#include <vector>

#include "icbo/surrogates.hpp"

namespace icbo {

struct WarmstartConfig {
  ContextLevel context = ContextLevel::none;
  std::size_t n_points = 5;

  void validate() const;
};

struct WarmstartResult {
  std::vector<Configuration> configs;
  std::size_t n_parsed = 0;
  std::size_t n_filled = 0;
};

/// One zero-shot request for an n_points list. Parsed, validated and deduped;
/// any shortfall is filled from a randomly shifted Sobol sequence.
WarmstartResult warmstart(const SearchSpace &space, const WarmstartConfig &conf,
                          const PromptContext &ctx, LlmClient &client, Rng &rng);

} // namespace icbo
