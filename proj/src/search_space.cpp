#include "icbo/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <boost/random/sobol.hpp>
#include <spdlog/spdlog.h>

#include "icbo/errors.hpp"
#include "icbo/rng.hpp"

namespace icbo {

std::string_view to_string(ParamKind k) {
  switch (k) {
  case ParamKind::continuous: return "continuous";
  case ParamKind::integer: return "integer";
  case ParamKind::ordinal: return "ordinal";
  }
  return "continuous";
}

std::string_view to_string(Transform t) {
  switch (t) {
  case Transform::linear: return "linear";
  case Transform::log: return "log";
  case Transform::logit: return "logit";
  }
  return "linear";
}

ParamKind parse_param_kind(std::string_view s) {
  if (s == "continuous" || s == "float" || s == "real") return ParamKind::continuous;
  if (s == "integer" || s == "int") return ParamKind::integer;
  if (s == "ordinal") return ParamKind::ordinal;
  throw ValidationError("unknown hyperparameter kind '" + std::string(s) + "'");
}

Transform parse_transform(std::string_view s) {
  if (s == "linear") return Transform::linear;
  if (s == "log") return Transform::log;
  if (s == "logit") return Transform::logit;
  throw ValidationError("unknown transform '" + std::string(s) + "'");
}

double round_half_away(double v) { return std::round(v); }

void HyperparamDef::validate() const {
  auto fail = [&](const std::string &msg) {
    throw ValidationError("hyperparameter '" + name + "': " + msg);
  };
  if (name.empty()) throw ValidationError("hyperparameter with empty name");
  if (!std::isfinite(lower) || !std::isfinite(upper)) fail("bounds must be finite");
  if (!(lower < upper)) fail("lower must be < upper");
  if (transform == Transform::log && !(lower > 0.0)) fail("log transform requires lower > 0");
  if (transform == Transform::logit && !(lower > 0.0 && upper < 1.0))
    fail("logit transform requires 0 < lower and upper < 1");
  if (kind == ParamKind::integer &&
      (std::floor(lower) != lower || std::floor(upper) != upper))
    fail("integer kind requires integral bounds");
}

double HyperparamDef::to_internal(double raw) const {
  switch (transform) {
  case Transform::linear: return raw;
  case Transform::log: return std::log10(raw);
  case Transform::logit: return std::log(raw / (1.0 - raw));
  }
  return raw;
}

double HyperparamDef::from_internal(double internal) const {
  switch (transform) {
  case Transform::linear: return internal;
  case Transform::log: return std::pow(10.0, internal);
  case Transform::logit: return 1.0 / (1.0 + std::exp(-internal));
  }
  return internal;
}

SearchSpace::SearchSpace(std::vector<HyperparamDef> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw ValidationError("search space needs at least one dimension");
  std::set<std::string> seen;
  for (const auto &d : dims_) {
    d.validate();
    if (!seen.insert(d.name).second)
      throw ValidationError("duplicate hyperparameter name '" + d.name + "'");
  }
}

SearchSpace SearchSpace::from_json(const nlohmann::json &doc) {
  if (!doc.is_object() || !doc.contains("dims") || !doc["dims"].is_array())
    throw ValidationError("search space document needs a \"dims\" array");
  std::vector<HyperparamDef> dims;
  std::size_t i = 0;
  for (const auto &e : doc["dims"]) {
    const std::string where = "dims[" + std::to_string(i++) + "]";
    if (!e.is_object()) throw ValidationError(where + " must be an object");
    for (const char *key : {"name", "lower", "upper"})
      if (!e.contains(key)) throw ValidationError(where + " is missing \"" + key + "\"");
    if (!e["name"].is_string()) throw ValidationError(where + ".name must be a string");
    if (!e["lower"].is_number() || !e["upper"].is_number())
      throw ValidationError(where + " bounds must be numbers");
    HyperparamDef def;
    def.name = e["name"].get<std::string>();
    def.kind = parse_param_kind(e.value("kind", std::string("continuous")));
    def.transform = parse_transform(e.value("transform", std::string("linear")));
    def.lower = e["lower"].get<double>();
    def.upper = e["upper"].get<double>();
    dims.push_back(std::move(def));
  }
  return SearchSpace(std::move(dims));
}

SearchSpace SearchSpace::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open search space file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("search space file " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json SearchSpace::to_json() const {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto &d : dims_) {
    dims.push_back({{"name", d.name},
                    {"kind", to_string(d.kind)},
                    {"transform", to_string(d.transform)},
                    {"lower", d.lower},
                    {"upper", d.upper}});
  }
  return {{"dims", dims}};
}

std::optional<std::size_t> SearchSpace::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < dims_.size(); ++i)
    if (dims_[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::string> SearchSpace::names() const {
  std::vector<std::string> out;
  out.reserve(dims_.size());
  for (const auto &d : dims_) out.push_back(d.name);
  return out;
}

void SearchSpace::validate(const Configuration &cfg) const {
  if (cfg.size() != d())
    throw ValidationError("configuration has " + std::to_string(cfg.size()) +
                          " values, space has " + std::to_string(d()) + " dims");
  for (std::size_t i = 0; i < d(); ++i) {
    const auto &def = dims_[i];
    const double v = cfg[i];
    if (!std::isfinite(v) || v < def.lower || v > def.upper)
      throw ValidationError("hyperparameter '" + def.name + "': value " +
                            std::to_string(v) + " outside [" +
                            std::to_string(def.lower) + ", " +
                            std::to_string(def.upper) + "]");
    if (def.kind == ParamKind::integer && std::floor(v) != v)
      throw ValidationError("hyperparameter '" + def.name + "': value " +
                            std::to_string(v) + " is not integral");
  }
}

bool SearchSpace::contains(const Configuration &cfg) const noexcept {
  try {
    validate(cfg);
    return true;
  } catch (const ValidationError &) {
    return false;
  }
}

InternalPoint SearchSpace::to_internal(const Configuration &cfg) const {
  validate(cfg);
  InternalPoint x(d());
  for (std::size_t i = 0; i < d(); ++i) x[i] = dims_[i].to_internal(cfg[i]);
  return x;
}

Configuration SearchSpace::from_internal(std::span<const double> x,
                                         ClampReport *report) const {
  if (x.size() != d())
    throw PreconditionError("internal point has " + std::to_string(x.size()) +
                            " coordinates, space has " + std::to_string(d()));
  Configuration cfg;
  cfg.values.resize(d());
  for (std::size_t i = 0; i < d(); ++i) {
    const auto &def = dims_[i];
    double v = std::isnan(x[i]) ? def.internal_lower() : x[i];
    v = def.from_internal(v);
    if (def.kind == ParamKind::integer) v = round_half_away(v);
    // Round-off from the inverse transform is absorbed silently; only
    // material excursions count as clamp events.
    const double slack = 1e-9 * (def.upper - def.lower);
    if (v < def.lower || v > def.upper) {
      if (v < def.lower - slack || v > def.upper + slack) {
        spdlog::debug("clamping '{}' from {} into [{}, {}]", def.name, v,
                      def.lower, def.upper);
        if (report) ++report->clamped_dims;
      }
      v = std::clamp(v, def.lower, def.upper);
    }
    cfg[i] = v;
  }
  return cfg;
}

Configuration SearchSpace::from_unit(std::span<const double> u) const {
  std::vector<double> x(d());
  for (std::size_t i = 0; i < d(); ++i) {
    const double lo = dims_[i].internal_lower();
    const double hi = dims_[i].internal_upper();
    x[i] = lo + std::clamp(u[i], 0.0, 1.0) * (hi - lo);
  }
  return from_internal(x);
}

std::vector<double> SearchSpace::to_unit(const Configuration &cfg) const {
  const auto x = to_internal(cfg);
  std::vector<double> u(d());
  for (std::size_t i = 0; i < d(); ++i) {
    const double lo = dims_[i].internal_lower();
    const double hi = dims_[i].internal_upper();
    u[i] = (x[i] - lo) / (hi - lo);
  }
  return u;
}

nlohmann::ordered_json SearchSpace::config_to_json(const Configuration &cfg) const {
  nlohmann::ordered_json obj = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < d(); ++i) {
    if (dims_[i].kind == ParamKind::integer)
      obj[dims_[i].name] = static_cast<std::int64_t>(cfg[i]);
    else
      obj[dims_[i].name] = cfg[i];
  }
  return obj;
}

Configuration SearchSpace::config_from_json(const nlohmann::json &obj) const {
  if (!obj.is_object()) throw ValidationError("configuration must be a JSON object");
  Configuration cfg;
  cfg.values.resize(d());
  for (std::size_t i = 0; i < d(); ++i) {
    const auto it = obj.find(dims_[i].name);
    if (it == obj.end() || !it->is_number())
      throw ValidationError("configuration is missing numeric '" + dims_[i].name + "'");
    cfg[i] = it->get<double>();
  }
  if (obj.size() != d()) throw ValidationError("configuration has unknown keys");
  validate(cfg);
  return cfg;
}

InitMethod parse_init_method(std::string_view s) {
  if (s == "random") return InitMethod::random;
  if (s == "sobol") return InitMethod::sobol;
  if (s == "latin_hypercube" || s == "lhs") return InitMethod::latin_hypercube;
  throw ValidationError("unknown init method '" + std::string(s) + "'");
}

std::vector<std::vector<double>> unit_random(std::size_t n, std::size_t d,
                                             std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> pts(n, std::vector<double>(d));
  for (auto &p : pts)
    for (auto &v : p) v = rng.uniform();
  return pts;
}

std::vector<std::vector<double>> unit_sobol(std::size_t n, std::size_t d,
                                            std::uint64_t seed) {
  boost::random::sobol engine(static_cast<unsigned>(d));
  // Random digital shift: keeps the net structure, varies the point set by seed.
  Rng rng(seed);
  std::vector<std::uint64_t> shift(d);
  for (auto &s : shift) s = rng.next_u64();
  std::vector<std::vector<double>> pts(n, std::vector<double>(d));
  for (auto &p : pts) {
    for (std::size_t j = 0; j < d; ++j) {
      const std::uint64_t raw = static_cast<std::uint64_t>(engine()) ^ shift[j];
      p[j] = static_cast<double>(raw >> 11) * 0x1.0p-53;
    }
  }
  return pts;
}

std::vector<std::vector<double>> unit_latin_hypercube(std::size_t n,
                                                      std::size_t d,
                                                      std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> pts(n, std::vector<double>(d));
  for (std::size_t j = 0; j < d; ++j) {
    const auto perm = rng.permutation(n);
    for (std::size_t i = 0; i < n; ++i)
      pts[i][j] = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
  }
  return pts;
}

std::vector<Configuration> sample_init(const SearchSpace &space, std::size_t n,
                                       InitMethod method, std::uint64_t seed) {
  if (n == 0) throw PreconditionError("sample_init needs n >= 1");
  std::vector<std::vector<double>> unit;
  switch (method) {
  case InitMethod::random: unit = unit_random(n, space.d(), seed); break;
  case InitMethod::sobol: unit = unit_sobol(n, space.d(), seed); break;
  case InitMethod::latin_hypercube: unit = unit_latin_hypercube(n, space.d(), seed); break;
  }
  std::vector<Configuration> out;
  out.reserve(n);
  for (const auto &u : unit) out.push_back(space.from_unit(u));
  return out;
}

} // namespace icbo
