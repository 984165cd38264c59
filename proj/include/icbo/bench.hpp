#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "icbo/baselines.hpp"
#include "icbo/objectives.hpp"
#include "icbo/sampler.hpp"
#include "icbo/warmstart.hpp"

namespace icbo {

enum class Method { llambo_disc, llambo_gen, tpe_ind, tpe_multi, gp, random };
Method parse_method(std::string_view s);
std::string_view to_string(Method m);
bool uses_llm(Method m);

enum class InitMode { random_shared, warmstart };

struct RunSpec {
  std::string objective;
  std::size_t dims = 2;
  Method method = Method::random;
  std::size_t n_init = 5;
  std::size_t n_trials = 25;
  std::uint64_t seed = 0;
  InitMode init_mode = InitMode::random_shared;
  ContextLevel warmstart_context = ContextLevel::none;

  DiscSurrogateConfig disc;
  GenSurrogateConfig gen;
  SamplerConfig sampler;
  double tpe_gamma = 0.25;
  std::size_t tpe_candidates = 24;
  TpeOptions tpe_options{1.0, true};
  std::size_t gp_candidates = 256;

  std::optional<nlohmann::json> model_card;
  std::optional<nlohmann::json> data_card;
  std::string system_message;

  /// Field-level ValidationError on bad input; unknown keys are rejected.
  static RunSpec from_json(const nlohmann::json &doc);
  static RunSpec load(const std::filesystem::path &path);
  nlohmann::ordered_json to_json() const;
  void validate() const;
};

/// One per-trial record of the run log.
struct TrialRecord {
  std::size_t trial = 0;
  std::string phase;  // init, bo, fallback
  Configuration config;
  double score = 0.0;
  double best_so_far = 0.0;
  std::size_t candidate_count = 0;
  std::optional<double> acceptance_rate;
  double wallclock_ms = 0.0;
  std::size_t surrogate_failures = 0;
  std::vector<Configuration> candidates;
};

struct RunResult {
  Trajectory trajectory;
  std::vector<TrialRecord> records;
  TaskBounds bounds;
  std::vector<double> regret;
};

struct RunOptions {
  /// Milliseconds since an arbitrary origin; null means a steady clock.
  std::function<double()> clock;
  /// Receives one JSON line per completed trial, flushed as it goes.
  std::ostream *log = nullptr;
  /// Include every proposed candidate in the log records.
  bool log_candidates = true;
};

/// Runs the seeded loop: shared random (or warmstart) initialization, then
/// propose / score / select / evaluate for the remaining trials. All
/// randomness derives from spec.seed through named substreams. An objective
/// failure aborts the run; records already written stay in the log.
RunResult run(const RunSpec &spec, const Objective &objective, LlmClient *client,
              const RunOptions &options = {});

/// Prompt context of an objective after RunSpec overrides.
PromptContext prompt_context(const RunSpec &spec, const Objective &objective);

/// Serialized record line (without trailing newline).
std::string record_line(const RunSpec &spec, const Objective &objective, const TrialRecord &rec);

} // namespace icbo
