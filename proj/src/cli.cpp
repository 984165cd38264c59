#include "icbo/cli.hpp"

#include <glob.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "icbo/emulated.hpp"
#include "icbo/errors.hpp"

namespace icbo::cli {

// ---- config --------------------------------------------------------------

CliConfig CliConfig::from_json(const nlohmann::json &doc, const std::filesystem::path &base) {
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> known = {"backend",     "endpoint_url", "model_name",
                                              "temperature", "top_p",        "parallelism",
                                              "output_dir",  "timeout_s",    "max_attempts",
                                              "mock_fixture"};
  for (const auto &[k, v] : doc.items()) {
    if (k == "api_key" || k == "credential" || k == "token")
      throw ValidationError(std::string("field '") + k + "': credentials are read from the " +
                            kApiKeyEnv + " environment variable only");
    if (!known.count(k)) throw ValidationError("field '" + k + "': unknown key");
  }
  CliConfig c;
  auto field = [&](const char *key, auto &out) {
    if (!doc.contains(key)) return;
    try {
      doc.at(key).get_to(out);
    } catch (const nlohmann::json::exception &) {
      throw ValidationError(std::string("field '") + key + "': wrong type");
    }
  };
  std::string backend = "mock";
  field("backend", backend);
  if (backend == "mock") c.backend = BackendKind::mock;
  else if (backend == "http") c.backend = BackendKind::http;
  else throw ValidationError("field 'backend': expected mock or http, got '" + backend + "'");
  field("endpoint_url", c.endpoint_url);
  field("model_name", c.model_name);
  field("temperature", c.temperature);
  field("top_p", c.top_p);
  field("parallelism", c.parallelism);
  field("timeout_s", c.timeout_s);
  field("max_attempts", c.max_attempts);
  std::string dir;
  field("output_dir", dir);
  if (!dir.empty()) c.output_dir = dir;
  std::string fixture;
  field("mock_fixture", fixture);
  if (!fixture.empty()) {
    std::filesystem::path p = fixture;
    c.mock_fixture = p.is_relative() && !base.empty() ? base / p : p;
  }
  c.validate();
  return c;
}

CliConfig CliConfig::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(doc, path.parent_path());
}

void CliConfig::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0))
    throw ValidationError("field 'temperature': must lie in [0, 2]");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ValidationError("field 'top_p': must lie in (0, 1]");
  if (parallelism < 1) throw ValidationError("field 'parallelism': must be >= 1");
  if (!(timeout_s > 0.0)) throw ValidationError("field 'timeout_s': must be positive");
  if (max_attempts < 1) throw ValidationError("field 'max_attempts': must be >= 1");
}

std::shared_ptr<Backend> make_backend(const CliConfig &config, const SearchSpace &space,
                                      std::uint64_t seed) {
  if (config.backend == BackendKind::mock) {
    EmulatedResponder responder(space);
    MockBackend::Responder fallback = [responder](const CompletionRequest &req, std::size_t c,
                                                  Rng &rng) { return responder(req, c, rng); };
    if (config.mock_fixture) return MockBackend::from_fixture(*config.mock_fixture, seed, fallback);
    return std::make_shared<MockBackend>(seed, fallback);
  }
  if (config.endpoint_url.empty())
    throw ValidationError("field 'endpoint_url': required for the http backend");
  const char *key = std::getenv(kApiKeyEnv);
  if (!key || !*key)
    throw ValidationError(std::string("the http backend needs the ") + kApiKeyEnv +
                          " environment variable");
  HttpConfig http;
  http.endpoint_url = config.endpoint_url;
  http.model = config.model_name;
  http.api_key = key;
  http.timeout_s = config.timeout_s;
  http.max_attempts = config.max_attempts;
  return std::make_shared<HttpBackend>(http);
}

// ---- run -----------------------------------------------------------------

int cmd_run(const std::filesystem::path &spec_path,
            const std::optional<std::filesystem::path> &config_path, const RunOverrides &overrides,
            std::ostream &out, std::ostream &err) {
  RunSpec spec;
  CliConfig config;
  Objective objective;
  std::shared_ptr<Backend> backend;
  try {
    spec = RunSpec::load(spec_path);
    if (overrides.seed) spec.seed = *overrides.seed;
    if (config_path) config = CliConfig::load(*config_path);
    if (overrides.backend) {
      if (*overrides.backend == "mock") config.backend = BackendKind::mock;
      else if (*overrides.backend == "http") config.backend = BackendKind::http;
      else throw ValidationError("--backend: expected mock or http");
    }
    try {
      objective = resolve_objective(spec.objective, spec.dims, spec_path.parent_path());
    } catch (const Error &e) {
      throw ValidationError(std::string("field 'objective': ") + e.what());
    }
    prompt_context(spec, objective);
    backend = make_backend(config, objective.space, spec.seed);
  } catch (const ValidationError &e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }

  const std::filesystem::path log_path =
      overrides.out ? *overrides.out
                    : config.output_dir / fmt::format("{}_{}_s{}.jsonl", objective.name,
                                                      to_string(spec.method), spec.seed);
  if (log_path.has_parent_path()) std::filesystem::create_directories(log_path.parent_path());
  std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
  if (!log) {
    err << "error: cannot write " << log_path.string() << '\n';
    return kFailure;
  }

  LlmClient client(backend, config.parallelism);
  client.temperature = config.temperature;
  client.top_p = config.top_p;
  RunOptions opts;
  opts.log = &log;
  // Mock runs log zero wallclock so identical seeds give identical bytes.
  if (config.backend == BackendKind::mock) opts.clock = [] { return 0.0; };

  try {
    const auto result = run(spec, objective, &client, opts);
    out << fmt::format("best score: {}\nnormalized regret: {}\nlog: {}\n",
                       format_number(result.trajectory.best().score),
                       format_number(result.regret.back()), log_path.string());
    return kOk;
  } catch (const TransportError &e) {
    err << "transport failure: " << e.what() << '\n';
    return kTransportFailure;
  } catch (const std::exception &e) {
    err << "run failed: " << e.what() << " (partial log kept at " << log_path.string() << ")\n";
    return kFailure;
  }
}

// ---- report --------------------------------------------------------------

namespace {

std::vector<std::string> expand_glob(const std::string &pattern) {
  glob_t g{};
  std::vector<std::string> out;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  globfree(&g);
  return out;
}

struct LogRow {
  std::string task, method;
  std::uint64_t seed = 0;
  std::size_t trial = 0;
  double score = 0.0;
  double lo = 0.0, hi = 1.0;
};

} // namespace

int cmd_report(const std::string &pattern, std::ostream &out, std::ostream &err) {
  const auto files = expand_glob(pattern);
  if (files.empty()) {
    err << "error: no logs match '" << pattern << "'\n";
    return kInvalidInput;
  }
  std::size_t skipped = 0;
  using Key = std::tuple<std::string, std::string, std::size_t>;  // task, method, trial
  std::map<Key, std::pair<double, std::size_t>> sums;
  out << "task,method,seed,trial,normalized_regret\n";
  for (const auto &file : files) {
    std::ifstream in(file);
    std::string line;
    std::vector<LogRow> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        LogRow r;
        r.task = j.at("task").get<std::string>();
        r.method = j.at("method").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.trial = j.at("trial").get<std::size_t>();
        r.score = j.at("score").get<double>();
        r.lo = j.at("s_star_min").get<double>();
        r.hi = j.at("s_star_max").get<double>();
        if (!std::isfinite(r.score) || !(r.hi > r.lo)) throw std::runtime_error("bad values");
        rows.push_back(std::move(r));
      } catch (const std::exception &) {
        ++skipped;
      }
    }
    std::sort(rows.begin(), rows.end(), [](const LogRow &a, const LogRow &b) {
      return std::tie(a.task, a.method, a.seed, a.trial) < std::tie(b.task, b.method, b.seed, b.trial);
    });
    double best = std::numeric_limits<double>::infinity();
    const LogRow *prev = nullptr;
    for (const auto &r : rows) {
      if (!prev || r.task != prev->task || r.method != prev->method || r.seed != prev->seed)
        best = std::numeric_limits<double>::infinity();
      best = std::min(best, r.score);
      const double regret = std::clamp((best - r.lo) / (r.hi - r.lo), 0.0, 1.0);
      out << r.task << ',' << r.method << ',' << r.seed << ',' << r.trial << ','
          << format_number(regret) << '\n';
      auto &s = sums[{r.task, r.method, r.trial}];
      s.first += regret;
      s.second += 1;
      prev = &r;
    }
  }
  for (const auto &[key, s] : sums)
    out << std::get<0>(key) << ',' << std::get<1>(key) << ",mean," << std::get<2>(key) << ','
        << format_number(s.first / static_cast<double>(s.second)) << '\n';
  if (skipped) err << "warning: skipped " << skipped << " corrupt log line(s)\n";
  return kOk;
}

// ---- validate / golden-regen ----------------------------------------------

int cmd_validate(const std::optional<std::filesystem::path> &spec_path,
                 const std::optional<std::filesystem::path> &config_path, std::ostream &out,
                 std::ostream &err) {
  if (!spec_path && !config_path) {
    err << "error: nothing to validate; pass --spec and/or --config\n";
    return kInvalidInput;
  }
  try {
    if (config_path) {
      CliConfig::load(*config_path);
      out << config_path->string() << ": ok\n";
    }
    if (spec_path) {
      const auto spec = RunSpec::load(*spec_path);
      Objective obj;
      try {
        obj = resolve_objective(spec.objective, spec.dims, spec_path->parent_path());
      } catch (const Error &e) {
        throw ValidationError(std::string("field 'objective': ") + e.what());
      }
      prompt_context(spec, obj);
      out << spec_path->string() << ": ok\n";
    }
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
  return kOk;
}

int cmd_golden_regen(const std::filesystem::path &out_dir, std::ostream &out, std::ostream &err) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  for (const auto &g : render_goldens()) {
    std::ofstream f(out_dir / g.file_name, std::ios::binary | std::ios::trunc);
    if (!f) {
      err << "error: cannot write " << (out_dir / g.file_name).string() << '\n';
      return kFailure;
    }
    f << g.text;
    out << "wrote " << (out_dir / g.file_name).string() << '\n';
  }
  return kOk;
}

// ---- entry ---------------------------------------------------------------

int main(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"In-context Bayesian optimization runner"};
  app.require_subcommand(1);
  std::string spec, config, backend, out_path, pattern, golden_dir = "tests/fixtures/golden";
  std::uint64_t seed = 0;
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto *run_cmd = app.add_subcommand("run", "Execute one seeded run");
  run_cmd->add_option("--spec", spec, "Run spec JSON")->required();
  run_cmd->add_option("--config", config, "Operator config JSON");
  run_cmd->add_option("--backend", backend, "mock or http (overrides the config)");
  auto *seed_opt = run_cmd->add_option("--seed-override", seed, "Replace the run spec seed");
  run_cmd->add_option("--out", out_path, "Log path (default: <output_dir>/<task>_<method>_s<seed>.jsonl)");

  auto *report_cmd = app.add_subcommand("report", "Aggregate logs into regret CSV");
  report_cmd->add_option("logs", pattern, "Glob of JSONL logs")->required();
  report_cmd->add_option("--out", out_path, "CSV path (default: stdout)");

  auto *validate_cmd = app.add_subcommand("validate", "Check a spec and/or config");
  validate_cmd->add_option("--spec", spec, "Run spec JSON");
  validate_cmd->add_option("--config", config, "Operator config JSON");

  auto *golden_cmd = app.add_subcommand("golden-regen", "Rewrite the golden prompt files");
  golden_cmd->add_option("--out", golden_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError &e) {
    err << e.what() << '\n';
    return kInvalidInput;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  if (*run_cmd) {
    RunOverrides ov;
    if (!backend.empty()) ov.backend = backend;
    if (*seed_opt) ov.seed = seed;
    if (!out_path.empty()) ov.out = out_path;
    return cmd_run(spec, config.empty() ? std::nullopt : std::optional<std::filesystem::path>(config),
                   ov, out, err);
  }
  if (*report_cmd) {
    if (out_path.empty()) return cmd_report(pattern, out, err);
    std::ofstream f(out_path);
    if (!f) {
      err << "error: cannot write " << out_path << '\n';
      return kFailure;
    }
    return cmd_report(pattern, f, err);
  }
  if (*validate_cmd)
    return cmd_validate(spec.empty() ? std::nullopt : std::optional<std::filesystem::path>(spec),
                        config.empty() ? std::nullopt : std::optional<std::filesystem::path>(config),
                        out, err);
  if (*golden_cmd) return cmd_golden_regen(golden_dir, out, err);
  return kInvalidInput;
}

} // namespace icbo::cli
