// Regenerates data/bounds/synthetic.json by dense random search.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "icbo/objectives.hpp"

int main(int argc, char **argv) {
  CLI::App app{"Estimate synthetic task bounds"};
  std::string out = "data/bounds/synthetic.json";
  std::size_t n = 1000000;
  std::vector<std::size_t> dims{2, 4, 8, 15};
  app.add_option("--out", out, "Output path");
  app.add_option("--points", n, "Random points per task");
  app.add_option("--dims", dims, "Dimensions to cover");
  CLI11_PARSE(app, argc, argv);

  nlohmann::ordered_json doc;
  for (auto kind : {icbo::SyntheticKind::rosenbrock, icbo::SyntheticKind::griewank,
                    icbo::SyntheticKind::ktablet}) {
    auto &entry = doc[std::string(icbo::to_string(kind))];
    for (std::size_t d : dims) {
      const auto b = icbo::estimate_synthetic_bounds(kind, d, n);
      entry[std::to_string(d)] = {{"s_star_min", b.s_star_min}, {"s_star_max", b.s_star_max},
                                  {"n_points", n}};
      std::cerr << icbo::to_string(kind) << " d=" << d << " max=" << b.s_star_max << '\n';
    }
  }
  std::ofstream f(out);
  if (!f) {
    std::cerr << "cannot write " << out << '\n';
    return 1;
  }
  f << doc.dump(2) << '\n';
  return 0;
}
