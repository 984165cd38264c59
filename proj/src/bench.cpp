#include "icbo/bench.hpp"

#include <chrono>
#include <fstream>
#include <ostream>
#include <set>

#include <spdlog/spdlog.h>

#include "icbo/baselines.hpp"
#include "icbo/errors.hpp"

namespace icbo {

Method parse_method(std::string_view s) {
  if (s == "llambo_disc") return Method::llambo_disc;
  if (s == "llambo_gen") return Method::llambo_gen;
  if (s == "tpe_ind") return Method::tpe_ind;
  if (s == "tpe_multi") return Method::tpe_multi;
  if (s == "gp") return Method::gp;
  if (s == "random") return Method::random;
  throw ValidationError("unknown method '" + std::string(s) + "'");
}

std::string_view to_string(Method m) {
  switch (m) {
  case Method::llambo_disc: return "llambo_disc";
  case Method::llambo_gen: return "llambo_gen";
  case Method::tpe_ind: return "tpe_ind";
  case Method::tpe_multi: return "tpe_multi";
  case Method::gp: return "gp";
  case Method::random: return "random";
  }
  return "?";
}

bool uses_llm(Method m) { return m == Method::llambo_disc || m == Method::llambo_gen; }

// ---- RunSpec -------------------------------------------------------------

namespace {

void reject_unknown(const nlohmann::json &obj, const std::set<std::string> &known,
                    const std::string &where) {
  for (const auto &[k, v] : obj.items())
    if (!known.count(k)) throw ValidationError("field '" + where + k + "': unknown key");
}

template <typename T>
void read_field(const nlohmann::json &obj, const char *key, T &out, const std::string &where = "") {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception &) {
    throw ValidationError("field '" + where + key + "': wrong type");
  }
}

template <typename Enum, typename Parse>
void read_enum(const nlohmann::json &obj, const char *key, Enum &out, Parse parse,
               const std::string &where = "") {
  if (!obj.contains(key)) return;
  std::string s;
  read_field(obj, key, s, where);
  try {
    out = parse(s);
  } catch (const ValidationError &e) {
    throw ValidationError("field '" + where + key + "': " + e.what());
  }
}

InitMode parse_init_mode(std::string_view s) {
  if (s == "random_shared") return InitMode::random_shared;
  if (s == "warmstart") return InitMode::warmstart;
  throw ValidationError("unknown init mode '" + std::string(s) + "'");
}

EiMode parse_ei_mode(std::string_view s) {
  if (s == "gaussian") return EiMode::gaussian;
  if (s == "empirical") return EiMode::empirical;
  throw ValidationError("unknown EI mode '" + std::string(s) + "'");
}

} // namespace

RunSpec RunSpec::from_json(const nlohmann::json &doc) {
  if (!doc.is_object()) throw ValidationError("run spec must be a JSON object");
  reject_unknown(doc,
                 {"objective", "dims", "method", "n_init", "n_trials", "seed", "init_mode",
                  "warmstart_context", "llambo", "tpe", "gp", "model_card", "data_card",
                  "system_message"},
                 "");
  RunSpec s;
  if (!doc.contains("objective")) throw ValidationError("field 'objective': required");
  if (!doc.contains("method")) throw ValidationError("field 'method': required");
  read_field(doc, "objective", s.objective);
  read_field(doc, "dims", s.dims);
  read_enum(doc, "method", s.method, parse_method);
  read_field(doc, "n_init", s.n_init);
  read_field(doc, "n_trials", s.n_trials);
  read_field(doc, "seed", s.seed);
  read_enum(doc, "init_mode", s.init_mode, parse_init_mode);
  read_enum(doc, "warmstart_context", s.warmstart_context, parse_context_level);
  read_field(doc, "system_message", s.system_message);
  if (doc.contains("llambo")) {
    const auto &l = doc["llambo"];
    if (!l.is_object()) throw ValidationError("field 'llambo': must be an object");
    reject_unknown(l,
                   {"k_samples", "shuffle", "m_candidates", "alpha", "gamma", "ablation",
                    "max_retry_rounds", "max_resample", "ei_mode"},
                   "llambo.");
    read_field(l, "k_samples", s.disc.k_samples, "llambo.");
    s.gen.k_samples = s.disc.k_samples;
    read_field(l, "shuffle", s.disc.shuffle, "llambo.");
    s.gen.shuffle = s.sampler.shuffle = s.disc.shuffle;
    read_field(l, "m_candidates", s.sampler.m_candidates, "llambo.");
    read_field(l, "alpha", s.sampler.alpha, "llambo.");
    read_field(l, "gamma", s.gen.gamma, "llambo.");
    read_field(l, "max_retry_rounds", s.sampler.max_retry_rounds, "llambo.");
    read_field(l, "max_resample", s.disc.max_resample, "llambo.");
    s.gen.max_resample = s.disc.max_resample;
    read_enum(l, "ablation", s.disc.ablation, parse_ablation, "llambo.");
    s.gen.ablation = s.sampler.ablation = s.disc.ablation;
    read_enum(l, "ei_mode", s.disc.ei_mode, parse_ei_mode, "llambo.");
  }
  if (doc.contains("tpe")) {
    const auto &t = doc["tpe"];
    reject_unknown(t, {"gamma", "n_candidates", "prior_weight", "adaptive_floor"}, "tpe.");
    read_field(t, "gamma", s.tpe_gamma, "tpe.");
    read_field(t, "n_candidates", s.tpe_candidates, "tpe.");
    read_field(t, "prior_weight", s.tpe_options.prior_weight, "tpe.");
    read_field(t, "adaptive_floor", s.tpe_options.adaptive_floor, "tpe.");
  }
  if (doc.contains("gp")) {
    const auto &g = doc["gp"];
    reject_unknown(g, {"n_candidates"}, "gp.");
    read_field(g, "n_candidates", s.gp_candidates, "gp.");
  }
  if (doc.contains("model_card")) s.model_card = doc["model_card"];
  if (doc.contains("data_card")) s.data_card = doc["data_card"];
  s.validate();
  return s;
}

RunSpec RunSpec::load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open run spec " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("run spec " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

nlohmann::ordered_json RunSpec::to_json() const {
  nlohmann::ordered_json j;
  j["objective"] = objective;
  j["dims"] = dims;
  j["method"] = std::string(icbo::to_string(method));
  j["n_init"] = n_init;
  j["n_trials"] = n_trials;
  j["seed"] = seed;
  j["init_mode"] = init_mode == InitMode::warmstart ? "warmstart" : "random_shared";
  j["warmstart_context"] = std::string(icbo::to_string(warmstart_context));
  j["llambo"] = {{"k_samples", disc.k_samples},
                 {"shuffle", disc.shuffle},
                 {"m_candidates", sampler.m_candidates},
                 {"alpha", sampler.alpha},
                 {"gamma", gen.gamma},
                 {"ablation", std::string(icbo::to_string(disc.ablation))},
                 {"max_retry_rounds", sampler.max_retry_rounds},
                 {"max_resample", disc.max_resample},
                 {"ei_mode", disc.ei_mode == EiMode::gaussian ? "gaussian" : "empirical"}};
  j["tpe"] = {{"gamma", tpe_gamma}, {"n_candidates", tpe_candidates}, {"prior_weight", tpe_options.prior_weight},
              {"adaptive_floor", tpe_options.adaptive_floor}};
  j["gp"] = {{"n_candidates", gp_candidates}};
  return j;
}

void RunSpec::validate() const {
  if (objective.empty()) throw ValidationError("field 'objective': must not be empty");
  if (n_init < 1) throw ValidationError("field 'n_init': must be >= 1");
  if (n_trials < n_init) throw ValidationError("field 'n_trials': must be >= n_init");
  try {
    disc.validate();
  } catch (const ValidationError &e) {
    throw ValidationError(std::string("field 'llambo.k_samples': ") + e.what());
  }
  try {
    gen.validate();
  } catch (const ValidationError &e) {
    throw ValidationError(std::string("field 'llambo.gamma': ") + e.what());
  }
  try {
    sampler.validate();
  } catch (const ValidationError &e) {
    throw ValidationError(std::string("field 'llambo.m_candidates': ") + e.what());
  }
  if (!(tpe_gamma > 0.0 && tpe_gamma < 1.0)) throw ValidationError("field 'tpe.gamma': must lie in (0, 1)");
  if (!(tpe_options.prior_weight >= 0.0 && std::isfinite(tpe_options.prior_weight)))
    throw ValidationError("field 'tpe.prior_weight': must be a finite non-negative number");
  if (tpe_candidates < 1) throw ValidationError("field 'tpe.n_candidates': must be >= 1");
  if (gp_candidates < 1) throw ValidationError("field 'gp.n_candidates': must be >= 1");
}

// ---- run loop ------------------------------------------------------------

PromptContext prompt_context(const RunSpec &spec, const Objective &objective) {
  PromptContext ctx = objective.prompt;
  if (spec.model_card) ctx.model_card = model_card_from_json(*spec.model_card, objective.space);
  if (spec.data_card) ctx.data_card = data_card_from_json(*spec.data_card);
  if (!spec.system_message.empty()) ctx.system_message = spec.system_message;
  if (ctx.model_card.hyperparams.empty())
    ctx.model_card = ModelCard::for_space(objective.name, TaskKind::regression, "score", objective.space);
  ctx.model_card.validate(objective.space);
  return ctx;
}

std::string record_line(const RunSpec &spec, const Objective &objective, const TrialRecord &rec) {
  nlohmann::ordered_json j;
  j["task"] = objective.name;
  j["method"] = std::string(to_string(spec.method));
  j["seed"] = spec.seed;
  j["trial"] = rec.trial;
  j["phase"] = rec.phase;
  j["config"] = objective.space.config_to_json(rec.config);
  j["score"] = rec.score;
  j["best_so_far"] = rec.best_so_far;
  j["candidate_count"] = rec.candidate_count;
  j["acceptance_rate"] = rec.acceptance_rate ? nlohmann::ordered_json(*rec.acceptance_rate)
                                             : nlohmann::ordered_json(nullptr);
  j["wallclock_ms"] = rec.wallclock_ms;
  j["surrogate_failures"] = rec.surrogate_failures;
  j["s_star_min"] = objective.bounds.s_star_min;
  j["s_star_max"] = objective.bounds.s_star_max;
  if (!rec.candidates.empty()) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto &c : rec.candidates) arr.push_back(objective.space.config_to_json(c));
    j["candidates"] = std::move(arr);
  }
  return j.dump();
}

namespace {

struct Proposal {
  Configuration config;
  std::string phase = "bo";
  std::size_t candidate_count = 0;
  std::optional<double> acceptance_rate;
  std::size_t surrogate_failures = 0;
  std::vector<Configuration> candidates;
};

Configuration random_config(const SearchSpace &space, Rng &rng) {
  std::vector<double> u(space.d());
  for (auto &v : u) v = rng.uniform();
  return space.from_unit(u);
}

struct Streams {
  Rng shuffle, sampler, kde, candidates, select, fallback;
  explicit Streams(const Rng &root)
      : shuffle(root.substream("shuffle")), sampler(root.substream("sampler")),
        kde(root.substream("kde")), candidates(root.substream("candidates")),
        select(root.substream("select")), fallback(root.substream("fallback")) {}
};

Proposal propose_llambo(const RunSpec &spec, const Trajectory &traj, const PromptContext &ctx,
                        LlmClient &client, Streams &rs) {
  Proposal p;
  CandidateSet cands;
  try {
    cands = propose(traj, spec.sampler, ctx, client, rs.sampler);
  } catch (const SamplerFailure &e) {
    spdlog::warn("trial {}: {}; evaluating a random configuration", traj.size(), e.what());
    p.config = random_config(traj.space(), rs.fallback);
    p.phase = "fallback";
    p.acceptance_rate = 0.0;
    return p;
  }
  p.candidate_count = cands.size();
  p.acceptance_rate = cands.acceptance_rate;
  p.candidates = cands.candidates;
  const double s_best = traj.best().score;
  CandidateScorer scorer;
  if (spec.method == Method::llambo_disc) {
    scorer = [&](const Configuration &c, std::size_t) -> std::optional<double> {
      try {
        return acquisition(predict(c, traj, spec.disc, ctx, client, rs.shuffle), s_best,
                           spec.disc.ei_mode);
      } catch (const SurrogateFailure &e) {
        ++p.surrogate_failures;
        spdlog::debug("surrogate failure: {}", e.what());
        return std::nullopt;
      }
    };
  } else {
    scorer = [&](const Configuration &c, std::size_t) -> std::optional<double> {
      if (traj.size() < 2) return 0.0;
      try {
        return score(c, traj, spec.gen, ctx, client, rs.shuffle).p_good;
      } catch (const SurrogateFailure &e) {
        ++p.surrogate_failures;
        spdlog::debug("surrogate failure: {}", e.what());
        return std::nullopt;
      }
    };
  }
  const auto sel = select_next(cands, scorer, rs.select);
  p.config = sel.config;
  return p;
}

Proposal propose_tpe(const RunSpec &spec, const Trajectory &traj, Streams &rs) {
  Proposal p;
  if (traj.size() < 4) {
    p.config = random_config(traj.space(), rs.fallback);
    p.phase = "fallback";
    return p;
  }
  const auto kind = spec.method == Method::tpe_ind ? KdeKind::independent : KdeKind::multivariate;
  const auto models = tpe_fit(traj, spec.tpe_gamma, kind, spec.tpe_options);
  const auto cands = tpe_propose(models, traj.space(), spec.tpe_candidates, rs.kde);
  p.config = cands.candidates.front();
  p.candidate_count = cands.size();
  p.acceptance_rate = cands.acceptance_rate;
  return p;
}

Proposal propose_gp(const RunSpec &spec, const Trajectory &traj, Streams &rs) {
  Proposal p;
  const auto model = gp_fit(traj);
  const auto cands = random_candidates(traj.space(), spec.gp_candidates, rs.candidates);
  const double s_best = traj.best().score;
  const auto sel = select_next(
      cands,
      [&](const Configuration &c, std::size_t) -> std::optional<double> {
        return expected_improvement(gp_predict(model, traj.space(), c), s_best);
      },
      rs.select);
  p.config = sel.config;
  p.candidate_count = cands.size();
  p.acceptance_rate = cands.acceptance_rate;
  return p;
}

} // namespace

RunResult run(const RunSpec &spec, const Objective &objective, LlmClient *client,
              const RunOptions &options) {
  spec.validate();
  const bool needs_client = uses_llm(spec.method) || spec.init_mode == InitMode::warmstart;
  if (needs_client && !client) throw PreconditionError("this run needs an LLM client");
  const PromptContext ctx = needs_client ? prompt_context(spec, objective) : objective.prompt;

  std::function<double()> clock = options.clock;
  if (!clock) {
    const auto origin = std::chrono::steady_clock::now();
    clock = [origin] {
      return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - origin)
          .count();
    };
  }

  const Rng root(spec.seed);
  Streams rs(root);
  RunResult result{Trajectory(objective.space), {}, objective.bounds, {}};
  auto &traj = result.trajectory;

  auto evaluate = [&](Proposal p, double started) {
    const double s = objective.eval(p.config);
    if (!std::isfinite(s))
      throw Error("objective returned a non-finite score at trial " + std::to_string(traj.size()));
    traj.append(p.config, s);
    TrialRecord rec;
    rec.trial = traj.size() - 1;
    rec.phase = std::move(p.phase);
    rec.config = std::move(p.config);
    rec.score = s;
    rec.best_so_far = traj.best().score;
    rec.candidate_count = p.candidate_count;
    rec.acceptance_rate = p.acceptance_rate;
    rec.surrogate_failures = p.surrogate_failures;
    if (options.log_candidates) rec.candidates = std::move(p.candidates);
    rec.wallclock_ms = clock() - started;
    if (options.log) {
      *options.log << record_line(spec, objective, rec) << '\n';
      options.log->flush();
    }
    result.records.push_back(std::move(rec));
  };

  // Initialization.
  {
    const double started = clock();
    std::vector<Configuration> init;
    if (spec.init_mode == InitMode::random_shared) {
      init = sample_init(objective.space, spec.n_init, InitMethod::random,
                         mix_seed(spec.seed, fnv1a64("init")));
    } else {
      Rng ws = root.substream("warmstart");
      init = warmstart(objective.space, {spec.warmstart_context, spec.n_init}, ctx, *client, ws).configs;
    }
    for (std::size_t i = 0; i < init.size(); ++i) {
      Proposal p;
      p.config = init[i];
      p.phase = "init";
      evaluate(std::move(p), i == 0 ? started : clock());
    }
  }

  for (std::size_t t = spec.n_init; t < spec.n_trials; ++t) {
    const double started = clock();
    Proposal p;
    switch (spec.method) {
    case Method::llambo_disc:
    case Method::llambo_gen: p = propose_llambo(spec, traj, ctx, *client, rs); break;
    case Method::tpe_ind:
    case Method::tpe_multi: p = propose_tpe(spec, traj, rs); break;
    case Method::gp: p = propose_gp(spec, traj, rs); break;
    case Method::random:
      p.config = random_config(objective.space, rs.candidates);
      p.candidate_count = 1;
      p.acceptance_rate = 1.0;
      break;
    }
    evaluate(std::move(p), started);
  }
  result.regret = normalized_regret(traj, objective.bounds);
  return result;
}

} // namespace icbo
