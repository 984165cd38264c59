#include <gtest/gtest.h>

#include <fstream>

#include "icbo/errors.hpp"
#include "icbo/objectives.hpp"
#include "support.hpp"

using namespace icbo;

namespace {

/// Random search followed by a shrinking coordinate pattern search in [0, 1]^d.
double minimise(const Objective &obj, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t d = obj.space.d();
  std::vector<double> best(d);
  double fbest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 20000; ++i) {
    std::vector<double> u(d);
    for (auto &v : u) v = rng.uniform();
    const double f = obj.eval(Configuration{u});
    if (f < fbest) {
      fbest = f;
      best = u;
    }
  }
  for (double step = 0.01; step > 1e-12; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t j = 0; j < d; ++j)
        for (double s : {step, -step}) {
          auto u = best;
          u[j] = std::clamp(u[j] + s, 0.0, 1.0);
          const double f = obj.eval(Configuration{u});
          if (f < fbest) {
            fbest = f;
            best = u;
            improved = true;
          }
        }
    }
  }
  return fbest;
}

nlohmann::json linear_grid_doc() {
  return nlohmann::json::parse(R"({
    "name": "tiny",
    "space": {"dims": [
      {"name": "a", "kind": "ordinal", "transform": "linear", "lower": 0, "upper": 2},
      {"name": "b", "kind": "ordinal", "transform": "linear", "lower": 10, "upper": 20}]},
    "levels": {"a": [0, 1, 2], "b": [10, 20]},
    "rows": [
      {"config": {"a": 0, "b": 10}, "score": 0.5},
      {"config": {"a": 1, "b": 10}, "score": 0.4},
      {"config": {"a": 2, "b": 10}, "score": 0.3},
      {"config": {"a": 0, "b": 20}, "score": 0.2},
      {"config": {"a": 1, "b": 20}, "score": 0.1},
      {"config": {"a": 2, "b": 20}, "score": 0.9}]
  })");
}

} // namespace

TEST(Synthetic, KnownOptimaAndValues) {
  EXPECT_EQ(rosenbrock(std::vector<double>{1.0, 1.0, 1.0}), 0.0);
  EXPECT_EQ(rosenbrock(std::vector<double>{0.0, 0.0}), 1.0);
  EXPECT_EQ(griewank(std::vector<double>{0.0, 0.0, 0.0, 0.0}), 0.0);
  EXPECT_EQ(ktablet(std::vector<double>(4, 0.0)), 0.0);
  EXPECT_EQ(ktablet(std::vector<double>(4, 1.0)), 10003.0);
  // ceil(5 / 4) = 2 scaled coordinates.
  EXPECT_EQ(ktablet(std::vector<double>(5, 1.0)), 20003.0);
  EXPECT_NEAR(griewank(std::vector<double>{std::numbers::pi * 2.0}), 1.0 + 4.0 * std::numbers::pi * std::numbers::pi / 4000.0 - 1.0, 1e-15);
}

TEST(Synthetic, UnitCubeMapsOntoCanonicalDomain) {
  const auto r = synthetic(SyntheticKind::rosenbrock, 2);
  EXPECT_EQ(r.space.d(), 2u);
  EXPECT_NEAR(r.eval(Configuration{{0.4, 0.4}}), 0.0, 1e-24);
  const auto g = synthetic(SyntheticKind::griewank, 3);
  EXPECT_NEAR(g.eval(Configuration{{0.5, 0.5, 0.5}}), 0.0, 1e-15);
  const auto k = synthetic(SyntheticKind::ktablet, 4);
  EXPECT_NEAR(k.eval(Configuration{{0.5, 0.5, 0.5, 0.5}}), 0.0, 1e-24);
  EXPECT_EQ(r.space.dims()[0].name, "x1");
  EXPECT_EQ(k.bounds.s_star_min, 0.0);
}

TEST(Synthetic, NamesAndDomains) {
  EXPECT_EQ(parse_synthetic_kind("griewank"), SyntheticKind::griewank);
  EXPECT_THROW(parse_synthetic_kind("sphere"), ValidationError);
  EXPECT_EQ(canonical_domain(SyntheticKind::rosenbrock).lo, -5.0);
  EXPECT_EQ(canonical_domain(SyntheticKind::griewank).hi, 600.0);
  EXPECT_EQ(canonical_domain(SyntheticKind::ktablet).hi, 5.12);
}

TEST(Synthetic, ShippedBoundsBracketAnalyticExtremes) {
  // Analytic maxima of the 2-d functions on their domains.
  const double ros_max = 100.0 * 105.0 * 105.0 + 81.0;  // x = (10, -5)
  const double grie_max = 1.0 + 2.0 * 360000.0 / 4000.0 + 1.0;
  const double kt_max = 100.0 * 100.0 * 5.12 * 5.12 + 5.12 * 5.12;
  const auto r = synthetic_bounds(SyntheticKind::rosenbrock, 2);
  const auto g = synthetic_bounds(SyntheticKind::griewank, 2);
  const auto k = synthetic_bounds(SyntheticKind::ktablet, 2);
  EXPECT_LE(r.s_star_max, ros_max);
  EXPECT_GE(r.s_star_max, 0.99 * ros_max);
  EXPECT_LE(g.s_star_max, grie_max);
  EXPECT_GE(g.s_star_max, 0.98 * grie_max);
  EXPECT_LE(k.s_star_max, kt_max);
  EXPECT_GE(k.s_star_max, 0.99 * kt_max);
  for (const auto &b : {r, g, k}) EXPECT_EQ(b.s_star_min, 0.0);
}

TEST(Synthetic, OptimizerFindsNothingBelowTheMinimum) {
  for (auto kind : {SyntheticKind::rosenbrock, SyntheticKind::griewank, SyntheticKind::ktablet}) {
    const auto obj = synthetic(kind, 2);
    for (std::uint64_t seed = 0; seed < 5; ++seed)
      EXPECT_GE(minimise(obj, seed), obj.bounds.s_star_min) << to_string(kind);
  }
  // The unimodal ones are solved outright; Griewank may stall in a local basin.
  EXPECT_LT(minimise(synthetic(SyntheticKind::rosenbrock, 2), 3), 1e-6);
  EXPECT_LT(minimise(synthetic(SyntheticKind::ktablet, 2), 3), 1e-6);
  // The declared minimum is attained at the canonical optimum.
  EXPECT_EQ(synthetic(SyntheticKind::griewank, 2).eval(Configuration{{0.5, 0.5}}), 0.0);
}

TEST(Synthetic, EstimatedBoundsAreDeterministicAndBelowShipped) {
  const auto a = estimate_synthetic_bounds(SyntheticKind::griewank, 2, 20000, 5);
  const auto b = estimate_synthetic_bounds(SyntheticKind::griewank, 2, 20000, 5);
  EXPECT_EQ(a.s_star_max, b.s_star_max);
  EXPECT_EQ(a.s_star_min, 0.0);
  EXPECT_LE(a.s_star_max, 1.0 + 2.0 * 360000.0 / 4000.0 + 1.0);
  // Unlisted dimensionalities fall back to estimation.
  const auto est = synthetic_bounds(SyntheticKind::griewank, 3);
  EXPECT_GT(est.s_star_max, 0.0);
}

TEST(Tabular, LookupSnapsInInternalSpaceTiesLow) {
  const auto g = TabularGrid::from_json(linear_grid_doc());
  EXPECT_EQ(g.cells(), 6u);
  EXPECT_EQ(g.lookup(Configuration{{1.0, 20.0}}), 0.1);
  EXPECT_EQ(g.snap(Configuration{{0.5, 15.0}}), (std::vector<std::size_t>{0, 0}));
  EXPECT_EQ(g.snap(Configuration{{0.51, 15.01}}), (std::vector<std::size_t>{1, 1}));
  EXPECT_EQ(g.snap(Configuration{{-4.0, 99.0}}), (std::vector<std::size_t>{0, 1}));
  const auto b = g.bounds();
  EXPECT_EQ(b.s_star_min, 0.1);
  EXPECT_EQ(b.s_star_max, 0.9);
}

TEST(Tabular, FullSweepMatchesRows) {
  const auto doc = linear_grid_doc();
  const auto g = TabularGrid::from_json(doc);
  for (const auto &row : doc["rows"]) {
    const auto cfg = g.space().config_from_json(row["config"]);
    EXPECT_EQ(g.lookup(cfg), row["score"].get<double>());
    EXPECT_EQ(g.cell_config(g.snap(cfg)), cfg);
  }
}

TEST(Tabular, MissingCellIsDataIntegrityError) {
  auto doc = linear_grid_doc();
  doc["rows"].erase(doc["rows"].begin() + 4);
  try {
    TabularGrid::from_json(doc);
    FAIL();
  } catch (const DataIntegrityError &e) {
    EXPECT_NE(std::string(e.what()).find("a=1, b=20"), std::string::npos);
  }
  auto off = linear_grid_doc();
  off["rows"][0]["config"]["a"] = 0.5;
  EXPECT_THROW(TabularGrid::from_json(off), DataIntegrityError);
  auto bad = linear_grid_doc();
  bad["rows"][0]["score"] = "x";
  EXPECT_THROW(TabularGrid::from_json(bad), DataIntegrityError);
}

TEST(Tabular, ShippedToyGridLoads) {
  const auto obj = load_tabular(data_dir() / "tabular" / "toy_boosting_grid.json");
  EXPECT_EQ(obj.name, "toy_boosting_grid");
  EXPECT_EQ(obj.space.d(), 2u);
  const double best = obj.eval(Configuration{{0.01, 8.0}});
  EXPECT_NEAR(best, -0.9 + 0.02 * 0.25, 1e-12);
  EXPECT_EQ(obj.bounds.s_star_min, best);
  EXPECT_EQ(obj.prompt.model_card.model_name, "XGBoost");
}

TEST(ResolveObjective, NamesAndPaths) {
  EXPECT_EQ(resolve_objective("rosenbrock", 3).space.d(), 3u);
  EXPECT_EQ(resolve_objective("tabular:toy_boosting_grid.json", 0).name, "toy_boosting_grid");
  support::TempDir dir("objective");
  support::write_file(dir / "tiny.json", linear_grid_doc().dump());
  EXPECT_EQ(resolve_objective("tabular:tiny.json", 0, dir.path()).name, "tiny");
  EXPECT_THROW(resolve_objective("sphere", 2), ValidationError);
  EXPECT_THROW(resolve_objective("rosenbrock", 0), ValidationError);
  EXPECT_THROW(resolve_objective("tabular:nope.json", 0, dir.path()), ValidationError);
}
