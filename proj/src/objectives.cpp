#include "icbo/objectives.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>

#include <spdlog/spdlog.h>

#include "icbo/errors.hpp"

#ifndef ICBO_DATA_DIR
#define ICBO_DATA_DIR "data"
#endif

namespace icbo {

std::filesystem::path data_dir() {
  if (const char *env = std::getenv("ICBO_DATA_DIR"); env && *env) return env;
  return ICBO_DATA_DIR;
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "rosenbrock") return SyntheticKind::rosenbrock;
  if (name == "griewank") return SyntheticKind::griewank;
  if (name == "ktablet") return SyntheticKind::ktablet;
  throw ValidationError("unknown synthetic function '" + std::string(name) + "'");
}

std::string_view to_string(SyntheticKind k) {
  switch (k) {
  case SyntheticKind::rosenbrock: return "rosenbrock";
  case SyntheticKind::griewank: return "griewank";
  case SyntheticKind::ktablet: return "ktablet";
  }
  return "?";
}

Domain canonical_domain(SyntheticKind k) {
  switch (k) {
  case SyntheticKind::rosenbrock: return {-5.0, 10.0};
  case SyntheticKind::griewank: return {-600.0, 600.0};
  case SyntheticKind::ktablet: return {-5.12, 5.12};
  }
  return {0.0, 1.0};
}

double rosenbrock(std::span<const double> x) {
  double f = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    f += 100.0 * a * a + b * b;
  }
  return f;
}

double griewank(std::span<const double> x) {
  double sum = 0.0, prod = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += x[i] * x[i] / 4000.0;
    prod *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
  }
  return 1.0 + sum - prod;
}

double ktablet(std::span<const double> x) {
  const std::size_t k = (x.size() + 3) / 4;
  double f = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = i < k ? 100.0 * x[i] : x[i];
    f += v * v;
  }
  return f;
}

double synthetic_value(SyntheticKind k, std::span<const double> x) {
  switch (k) {
  case SyntheticKind::rosenbrock: return rosenbrock(x);
  case SyntheticKind::griewank: return griewank(x);
  case SyntheticKind::ktablet: return ktablet(x);
  }
  return 0.0;
}

TaskBounds estimate_synthetic_bounds(SyntheticKind k, std::size_t d, std::size_t n,
                                     std::uint64_t seed) {
  const auto dom = canonical_domain(k);
  Rng rng(mix_seed(seed, fnv1a64(to_string(k)) + d));
  std::vector<double> x(d);
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (auto &v : x) v = dom.lo + rng.uniform() * (dom.hi - dom.lo);
    hi = std::max(hi, synthetic_value(k, x));
  }
  return TaskBounds{0.0, hi};
}

TaskBounds synthetic_bounds(SyntheticKind k, std::size_t d) {
  static std::mutex mu;
  static std::map<std::pair<int, std::size_t>, TaskBounds> cache;
  std::lock_guard lock(mu);
  const auto key = std::make_pair(static_cast<int>(k), d);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const auto path = data_dir() / "bounds" / "synthetic.json";
  std::optional<TaskBounds> found;
  if (std::ifstream in(path); in) {
    try {
      const auto doc = nlohmann::json::parse(in);
      const auto name = std::string(to_string(k));
      const auto dkey = std::to_string(d);
      if (doc.contains(name) && doc[name].contains(dkey)) {
        const auto &b = doc[name][dkey];
        found = TaskBounds{b.at("s_star_min").get<double>(), b.at("s_star_max").get<double>()};
      }
    } catch (const nlohmann::json::exception &e) {
      spdlog::warn("ignoring unreadable bounds file {}: {}", path.string(), e.what());
    }
  }
  if (!found) {
    spdlog::info("no shipped bounds for {} d={}; estimating from random search", to_string(k), d);
    found = estimate_synthetic_bounds(k, d);
  }
  cache[key] = *found;
  return *found;
}

Objective synthetic(SyntheticKind k, std::size_t d) {
  if (d < 2) throw ValidationError("synthetic functions need d >= 2");
  std::vector<HyperparamDef> dims;
  for (std::size_t i = 0; i < d; ++i)
    dims.push_back({"x" + std::to_string(i + 1), ParamKind::continuous, Transform::linear, 0.0, 1.0});
  Objective obj;
  obj.name = std::string(to_string(k)) + "_" + std::to_string(d) + "d";
  obj.space = SearchSpace(std::move(dims));
  const auto dom = canonical_domain(k);
  obj.eval = [k, dom](const Configuration &cfg) {
    std::vector<double> x(cfg.size());
    for (std::size_t i = 0; i < cfg.size(); ++i) x[i] = dom.lo + cfg[i] * (dom.hi - dom.lo);
    return synthetic_value(k, x);
  };
  obj.bounds = synthetic_bounds(k, d);
  std::string title(to_string(k));
  title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
  obj.prompt.model_card =
      ModelCard::for_space(title + " function", TaskKind::regression, "function value", obj.space);
  return obj;
}

// ---- cards ---------------------------------------------------------------

nlohmann::json to_json(const ModelCard &card) {
  return {{"model_name", card.model_name},
          {"task", std::string(to_string(card.task))},
          {"metric", card.metric}};
}

ModelCard model_card_from_json(const nlohmann::json &doc, const SearchSpace &space) {
  try {
    return ModelCard::for_space(doc.at("model_name").get<std::string>(),
                                parse_task_kind(doc.value("task", std::string("classification"))),
                                doc.value("metric", std::string("accuracy")), space);
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("model_card: ") + e.what());
  }
}

nlohmann::json to_json(const DataCard &card) {
  nlohmann::json j = {{"n_samples", card.n_samples},
                      {"n_features", card.n_features},
                      {"n_numerical", card.n_numerical},
                      {"n_categorical", card.n_categorical}};
  if (card.class_distribution) j["class_distribution"] = *card.class_distribution;
  if (card.statistical_info) {
    const auto &s = *card.statistical_info;
    j["statistical_info"] = {{"n_features_one_hot", s.n_features_one_hot},
                             {"skewness", s.skewness},
                             {"n_strong_target_correlations", s.n_strong_target_correlations},
                             {"n_pairwise_relationships", s.n_pairwise_relationships},
                             {"n_strong_pairs", s.n_strong_pairs}};
  }
  return j;
}

DataCard data_card_from_json(const nlohmann::json &doc) {
  DataCard card;
  try {
    card.n_samples = doc.value("n_samples", std::size_t{0});
    card.n_features = doc.value("n_features", std::size_t{0});
    card.n_numerical = doc.value("n_numerical", card.n_features);
    card.n_categorical = doc.value("n_categorical", std::size_t{0});
    if (doc.contains("class_distribution"))
      card.class_distribution = doc["class_distribution"].get<std::vector<double>>();
    if (doc.contains("statistical_info")) {
      const auto &s = doc["statistical_info"];
      card.statistical_info = StatisticalInfo{
          s.at("n_features_one_hot").get<std::size_t>(), s.at("skewness").get<std::vector<double>>(),
          s.at("n_strong_target_correlations").get<std::size_t>(),
          s.at("n_pairwise_relationships").get<std::size_t>(), s.at("n_strong_pairs").get<std::size_t>()};
    }
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("data_card: ") + e.what());
  }
  card.validate();
  return card;
}

// ---- tabular -------------------------------------------------------------

TabularGrid TabularGrid::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open tabular file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception &e) {
    throw DataIntegrityError("tabular file " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

TabularGrid TabularGrid::from_json(const nlohmann::json &doc) {
  TabularGrid g;
  try {
    g.name_ = doc.value("name", std::string("tabular"));
    g.space_ = SearchSpace::from_json(doc.at("space"));
    const auto &levels = doc.at("levels");
    for (const auto &d : g.space_.dims()) {
      if (!levels.contains(d.name))
        throw DataIntegrityError("tabular levels missing for dimension '" + d.name + "'");
      auto v = levels[d.name].get<std::vector<double>>();
      if (v.empty()) throw DataIntegrityError("tabular dimension '" + d.name + "' has no levels");
      std::sort(v.begin(), v.end());
      for (double x : v)
        if (x < d.lower || x > d.upper)
          throw DataIntegrityError("tabular level " + std::to_string(x) + " of '" + d.name +
                                   "' lies outside its bounds");
      g.levels_.push_back(std::move(v));
    }
    for (const auto &row : doc.at("rows")) {
      const Configuration cfg = g.space_.config_from_json(row.at("config"));
      const auto cell = g.snap(cfg);
      for (std::size_t j = 0; j < cell.size(); ++j) {
        const double lv = g.levels_[j][cell[j]];
        if (std::abs(lv - cfg[j]) > 1e-9 * std::max(1.0, std::abs(lv)))
          throw DataIntegrityError("tabular row value " + std::to_string(cfg[j]) + " of '" +
                                   g.space_.dim(j).name + "' is not a declared level");
      }
      const double score = row.at("score").get<double>();
      if (!std::isfinite(score)) throw DataIntegrityError("tabular row with a non-finite score");
      g.table_[cell] = score;
    }
    if (doc.contains("model_card") || doc.contains("data_card")) {
      PromptContext ctx;
      ctx.model_card = doc.contains("model_card")
                           ? model_card_from_json(doc["model_card"], g.space_)
                           : ModelCard::for_space(g.name_, TaskKind::classification, "accuracy",
                                                  g.space_);
      if (doc.contains("data_card")) ctx.data_card = data_card_from_json(doc["data_card"]);
      g.prompt_ = std::move(ctx);
    }
  } catch (const nlohmann::json::exception &e) {
    throw DataIntegrityError(std::string("malformed tabular document: ") + e.what());
  }

  // Every grid cell must be present.
  std::vector<std::size_t> cell(g.levels_.size(), 0);
  while (true) {
    if (!g.table_.count(cell)) {
      std::string desc;
      for (std::size_t j = 0; j < cell.size(); ++j)
        desc += (j ? ", " : "") + g.space_.dim(j).name + "=" + format_number(g.levels_[j][cell[j]]);
      throw DataIntegrityError("tabular grid is missing cell {" + desc + "}");
    }
    std::size_t j = 0;
    while (j < cell.size() && ++cell[j] == g.levels_[j].size()) cell[j++] = 0;
    if (j == cell.size()) break;
  }
  return g;
}

std::vector<std::size_t> TabularGrid::snap(const Configuration &cfg) const {
  if (cfg.size() != levels_.size()) throw PreconditionError("configuration has the wrong dimension");
  std::vector<std::size_t> cell(cfg.size());
  for (std::size_t j = 0; j < cfg.size(); ++j) {
    const auto &dim = space_.dim(j);
    const double x = dim.to_internal(std::clamp(cfg[j], dim.lower, dim.upper));
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < levels_[j].size(); ++i) {
      const double dist = std::abs(dim.to_internal(levels_[j][i]) - x);
      if (dist < best_d) {  // strict: equal distance keeps the lower level
        best_d = dist;
        best = i;
      }
    }
    cell[j] = best;
  }
  return cell;
}

Configuration TabularGrid::cell_config(const std::vector<std::size_t> &cell) const {
  Configuration cfg;
  for (std::size_t j = 0; j < cell.size(); ++j) cfg.values.push_back(levels_.at(j).at(cell[j]));
  return cfg;
}

double TabularGrid::lookup(const Configuration &cfg) const {
  const auto cell = snap(cfg);
  auto it = table_.find(cell);
  if (it == table_.end()) {
    std::string desc;
    for (std::size_t j = 0; j < cell.size(); ++j)
      desc += (j ? ", " : "") + space_.dim(j).name + "=" + format_number(levels_[j][cell[j]]);
    throw DataIntegrityError("tabular grid is missing cell {" + desc + "}");
  }
  return it->second;
}

TaskBounds TabularGrid::bounds() const {
  TaskBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto &[cell, s] : table_) {
    b.s_star_min = std::min(b.s_star_min, s);
    b.s_star_max = std::max(b.s_star_max, s);
  }
  return b;
}

Objective load_tabular(const std::filesystem::path &path) {
  auto grid = std::make_shared<TabularGrid>(TabularGrid::load(path));
  Objective obj;
  obj.name = grid->name();
  obj.space = grid->space();
  obj.bounds = grid->bounds();
  obj.eval = [grid](const Configuration &cfg) { return grid->lookup(cfg); };
  obj.prompt = grid->prompt().value_or(PromptContext{
      ModelCard::for_space(grid->name(), TaskKind::classification, "accuracy", grid->space()),
      DataCard{}, ""});
  return obj;
}

Objective resolve_objective(const std::string &name, std::size_t dims,
                            const std::filesystem::path &base_dir) {
  constexpr std::string_view prefix = "tabular:";
  if (name.rfind(prefix, 0) == 0) {
    const std::filesystem::path given = name.substr(prefix.size());
    std::filesystem::path p = given;
    if (given.is_relative() && !std::filesystem::exists(p)) {
      if (!base_dir.empty() && std::filesystem::exists(base_dir / given)) p = base_dir / given;
      else if (std::filesystem::exists(data_dir() / "tabular" / given)) p = data_dir() / "tabular" / given;
      else if (!base_dir.empty()) p = base_dir / given;
    }
    return load_tabular(p);
  }
  return synthetic(parse_synthetic_kind(name), dims);
}

} // namespace icbo
