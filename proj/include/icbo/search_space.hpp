#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace icbo {

enum class ParamKind { continuous, integer, ordinal };
enum class Transform { linear, log, logit };

std::string_view to_string(ParamKind k);
std::string_view to_string(Transform t);
ParamKind parse_param_kind(std::string_view s);
Transform parse_transform(std::string_view s);

/// One hyperparameter. Bounds are in raw (untransformed) units.
///
/// Ordinal dimensions behave as continuous inside the engine; discretization
/// is the objective's business (see TabularObjective).
struct HyperparamDef {
  std::string name;
  ParamKind kind = ParamKind::continuous;
  Transform transform = Transform::linear;
  double lower = 0.0;
  double upper = 1.0;

  /// Throws ValidationError naming the dimension when an invariant fails.
  void validate() const;

  double to_internal(double raw) const;
  double from_internal(double internal) const;
  double internal_lower() const { return to_internal(lower); }
  double internal_upper() const { return to_internal(upper); }
};

/// A configuration in raw units, ordered like SearchSpace::dims().
struct Configuration {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double &operator[](std::size_t i) { return values[i]; }
  friend bool operator==(const Configuration &, const Configuration &) = default;
};

using InternalPoint = std::vector<double>;

/// Counters for clamp events raised by from_internal.
struct ClampReport {
  std::size_t clamped_dims = 0;
};

class SearchSpace {
public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<HyperparamDef> dims);

  static SearchSpace from_json(const nlohmann::json &doc);
  static SearchSpace load(const std::filesystem::path &path);
  nlohmann::json to_json() const;

  std::size_t d() const noexcept { return dims_.size(); }
  const std::vector<HyperparamDef> &dims() const noexcept { return dims_; }
  const HyperparamDef &dim(std::size_t i) const { return dims_.at(i); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::vector<std::string> names() const;

  /// Throws ValidationError naming the first offending dimension.
  void validate(const Configuration &cfg) const;
  bool contains(const Configuration &cfg) const noexcept;

  InternalPoint to_internal(const Configuration &cfg) const;
  /// Rounds integer dims (half away from zero) and clamps every dim to its
  /// bounds. Clamp events are logged and counted in `report` when given.
  Configuration from_internal(std::span<const double> x,
                              ClampReport *report = nullptr) const;

  /// Map `u` in the unit cube to a configuration, linearly in internal space.
  Configuration from_unit(std::span<const double> u) const;
  /// Inverse of from_unit, before rounding.
  std::vector<double> to_unit(const Configuration &cfg) const;

  nlohmann::ordered_json config_to_json(const Configuration &cfg) const;
  Configuration config_from_json(const nlohmann::json &obj) const;

private:
  std::vector<HyperparamDef> dims_;
};

enum class InitMethod { random, sobol, latin_hypercube };
InitMethod parse_init_method(std::string_view s);

/// `n` valid configurations; deterministic given (method, seed). Each
/// dimension is sampled in internal space and mapped back.
std::vector<Configuration> sample_init(const SearchSpace &space, std::size_t n,
                                       InitMethod method, std::uint64_t seed);

/// Unit-cube designs backing sample_init.
std::vector<std::vector<double>> unit_random(std::size_t n, std::size_t d,
                                             std::uint64_t seed);
std::vector<std::vector<double>> unit_sobol(std::size_t n, std::size_t d,
                                            std::uint64_t seed);
std::vector<std::vector<double>> unit_latin_hypercube(std::size_t n,
                                                      std::size_t d,
                                                      std::uint64_t seed);

/// Round half away from zero.
double round_half_away(double v);

} // namespace icbo
