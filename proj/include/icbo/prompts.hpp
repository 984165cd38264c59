#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icbo/search_space.hpp"
#include "icbo/trajectory.hpp"

namespace icbo {

enum class TaskKind { classification, regression };
enum class Purpose { warmstart, disc_sm, gen_sm, sampler };
enum class Ablation { full, no_context, no_instructions, uninformative };
enum class ContextLevel { none, partial, full };

std::string_view to_string(TaskKind t);
std::string_view to_string(Purpose p);
std::string_view to_string(Ablation a);
std::string_view to_string(ContextLevel c);
TaskKind parse_task_kind(std::string_view s);
Ablation parse_ablation(std::string_view s);
ContextLevel parse_context_level(std::string_view s);

struct HyperparamDescription {
  std::string name;
  std::string type;  // "int", "float" or "ordinal"
  double lower = 0.0;
  double upper = 1.0;
  Transform transform = Transform::linear;
};

/// Describes the model whose hyperparameters are tuned.
struct ModelCard {
  std::string model_name;
  TaskKind task = TaskKind::classification;
  std::string metric;
  std::vector<HyperparamDescription> hyperparams;

  static ModelCard for_space(std::string model_name, TaskKind task,
                             std::string metric, const SearchSpace &space);
  /// Throws ValidationError when names disagree with `space`.
  void validate(const SearchSpace &space) const;
};

/// The optional statistical block of the full-context warmstart prompt.
struct StatisticalInfo {
  std::size_t n_features_one_hot = 0;
  std::vector<double> skewness;
  std::size_t n_strong_target_correlations = 0;
  std::size_t n_pairwise_relationships = 0;
  std::size_t n_strong_pairs = 0;
};

struct DataCard {
  std::size_t n_samples = 0;
  std::size_t n_features = 0;
  std::size_t n_numerical = 0;
  std::size_t n_categorical = 0;
  std::optional<std::vector<double>> class_distribution;
  std::optional<StatisticalInfo> statistical_info;

  void validate() const;
  std::size_t n_classes() const {
    return class_distribution ? class_distribution->size() : 0;
  }
};

struct RoleMessage {
  std::string role;
  std::string content;
};

struct PromptBundle {
  std::string text;
  std::vector<RoleMessage> role_messages;
  Purpose purpose = Purpose::disc_sm;
  Ablation ablation = Ablation::full;
};

/// Per-purpose inputs. warmstart: context + n_recommendations; disc_sm:
/// query; gen_sm: query + gamma; sampler: target.
struct PromptExtras {
  std::optional<ContextLevel> context;
  std::optional<std::size_t> n_recommendations;
  std::optional<Configuration> query;
  std::optional<double> gamma;
  std::optional<double> target;
  /// Order in which history is listed; empty means trajectory order.
  std::vector<std::size_t> order;
  std::string system_message;
};

/// 6 significant digits; plain decimals for magnitudes in [1e-4, 1e6].
std::string format_number(double v, int significant_digits = 6);

struct ValueFormat {
  int significant_digits = 6;
};

/// "name is value, name is value". `names` overrides the displayed names.
std::string serialize_config(const SearchSpace &space, const Configuration &cfg,
                             const std::vector<std::string> &names = {},
                             const ValueFormat &fmt = {});
/// "name: value, name: value", the answer grammar of the sampler.
std::string serialize_config_answer(const SearchSpace &space, const Configuration &cfg,
                                    const std::vector<std::string> &names = {},
                                    const ValueFormat &fmt = {});

/// One "Hyperparameter configuration: ... / Performance: ..." block per
/// observation, listed in `order` (must be a permutation of 0..n-1).
std::string serialize_history(const Trajectory &traj,
                              const std::vector<std::size_t> &order,
                              const ValueFormat &fmt = {});

std::string render_hyperparams(const std::vector<HyperparamDescription> &hps);
std::string render_class_distribution(const DataCard &card);
std::string render_statistical_info(std::string_view model_name,
                                    const StatisticalInfo &info);

/// Names shown to the model: the real names, or X_1..X_d when uninformative.
std::vector<std::string> display_names(const SearchSpace &space, Ablation ablation);

PromptBundle build_prompt(Purpose purpose, const ModelCard &model_card,
                          const DataCard &data_card, const Trajectory &traj,
                          const PromptExtras &extras,
                          Ablation ablation = Ablation::full);

/// The shared fixture the golden prompt files are rendered from.
struct GoldenFixture {
  SearchSpace space;
  ModelCard model_card;
  DataCard data_card;
  Trajectory traj;
  Configuration query;
};
GoldenFixture golden_fixture();

struct GoldenPrompt {
  std::string file_name;
  std::string text;
};
/// Every golden prompt, keyed by stable file name.
std::vector<GoldenPrompt> render_goldens();

} // namespace icbo
