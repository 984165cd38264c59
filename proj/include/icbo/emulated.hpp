#pragma once

#include <optional>
#include <string>
#include <vector>

#include "icbo/llm_client.hpp"
#include "icbo/search_space.hpp"

namespace icbo {

/// Few-shot history recovered from a rendered prompt.
struct PromptHistory {
  std::vector<Configuration> configs;
  std::vector<double> values;  // performance or classification label
  std::optional<Configuration> query;
  std::optional<double> target;
};

/// Reads the examples back out of a disc_sm, gen_sm or sampler prompt.
PromptHistory read_prompt_history(const PromptBundle &prompt, const SearchSpace &space);

/// Offline stand-in for a language model that answers from the prompt alone:
/// distance-weighted nearest-neighbour regression and voting for the
/// surrogates, perturbations of the example closest to the target for the
/// sampler, and random dictionaries for warmstart. Deterministic given the
/// generator it is handed.
class EmulatedResponder {
public:
  struct Options {
    std::size_t neighbours = 3;
    double regression_noise = 0.05;  // relative to the observed score range
    double perturbation = 0.05;      // unit-cube std of sampler proposals
  };

  explicit EmulatedResponder(SearchSpace space) : EmulatedResponder(std::move(space), Options{}) {}
  EmulatedResponder(SearchSpace space, Options opts) : space_(std::move(space)), opts_(opts) {}

  std::string operator()(const CompletionRequest &req, std::size_t completion, Rng &rng) const;

  std::string answer_regression(const PromptHistory &h, Rng &rng) const;
  std::string answer_classification(const PromptHistory &h, Rng &rng) const;
  std::string answer_sampler(const PromptHistory &h, Ablation ablation, Rng &rng) const;
  std::string answer_warmstart(std::size_t n, Rng &rng) const;

private:
  SearchSpace space_;
  Options opts_;
};

/// Mock backend answering every purpose with an EmulatedResponder.
std::shared_ptr<MockBackend> make_emulated_mock(const SearchSpace &space, std::uint64_t seed);

} // namespace icbo
