#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "icbo/metrics.hpp"
#include "icbo/surrogates.hpp"

namespace icbo {

/// A minimization target over a search space.
struct Objective {
  std::string name;
  SearchSpace space;
  std::function<double(const Configuration &)> eval;
  TaskBounds bounds;
  /// Prompt descriptions used by the LLM-backed methods.
  PromptContext prompt;
};

enum class SyntheticKind { rosenbrock, griewank, ktablet };
SyntheticKind parse_synthetic_kind(std::string_view name);
std::string_view to_string(SyntheticKind k);

/// Canonical domains: Rosenbrock [-5, 10], Griewank [-600, 600],
/// KTablet [-5.12, 5.12].
struct Domain {
  double lo;
  double hi;
};
Domain canonical_domain(SyntheticKind k);

/// Function values at canonical coordinates.
double rosenbrock(std::span<const double> x);
double griewank(std::span<const double> x);
/// The first ceil(d/4) coordinates are scaled by 100.
double ktablet(std::span<const double> x);
double synthetic_value(SyntheticKind k, std::span<const double> x);

/// max over `n` uniform points on the canonical domain; min is the analytic
/// optimum 0.
TaskBounds estimate_synthetic_bounds(SyntheticKind k, std::size_t d, std::size_t n = 1000000,
                                     std::uint64_t seed = 0);

/// Bounds from data/bounds/synthetic.json when listed there, else estimated.
TaskBounds synthetic_bounds(SyntheticKind k, std::size_t d);

/// Inputs x_1..x_d in [0, 1], mapped affinely onto the canonical domain.
Objective synthetic(SyntheticKind k, std::size_t d);

/// Discrete lookup table over a declared grid.
class TabularGrid {
public:
  static TabularGrid load(const std::filesystem::path &path);
  static TabularGrid from_json(const nlohmann::json &doc);

  const std::string &name() const noexcept { return name_; }
  const SearchSpace &space() const noexcept { return space_; }
  /// Grid values per dimension, ascending, in raw units.
  const std::vector<std::vector<double>> &levels() const noexcept { return levels_; }
  std::size_t cells() const noexcept { return table_.size(); }

  /// Nearest level per dimension in internal space, ties to the lower level.
  std::vector<std::size_t> snap(const Configuration &cfg) const;
  Configuration cell_config(const std::vector<std::size_t> &cell) const;
  double lookup(const Configuration &cfg) const;
  TaskBounds bounds() const;
  const std::optional<PromptContext> &prompt() const noexcept { return prompt_; }

private:
  std::string name_;
  SearchSpace space_;
  std::vector<std::vector<double>> levels_;
  std::map<std::vector<std::size_t>, double> table_;
  std::optional<PromptContext> prompt_;
};

Objective load_tabular(const std::filesystem::path &path);

/// Resolves "rosenbrock" / "griewank" / "ktablet" (with `dims`) and
/// "tabular:<path>" (relative paths resolve against `base_dir`).
Objective resolve_objective(const std::string &name, std::size_t dims,
                            const std::filesystem::path &base_dir = {});

nlohmann::json to_json(const ModelCard &card);
ModelCard model_card_from_json(const nlohmann::json &doc, const SearchSpace &space);
nlohmann::json to_json(const DataCard &card);
DataCard data_card_from_json(const nlohmann::json &doc);

/// Directory holding the shipped spaces, bounds and tables.
std::filesystem::path data_dir();

} // namespace icbo
