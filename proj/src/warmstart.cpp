#include "icbo/warmstart.hpp"

#include <spdlog/spdlog.h>

#include "icbo/errors.hpp"
#include "icbo/parsers.hpp"

namespace icbo {

void WarmstartConfig::validate() const {
  if (n_points < 1) throw ValidationError("n_points must be >= 1");
}

WarmstartResult warmstart(const SearchSpace &space, const WarmstartConfig &conf,
                          const PromptContext &ctx, LlmClient &client, Rng &rng) {
  conf.validate();
  ctx.data_card.validate();
  if (conf.context != ContextLevel::none && ctx.data_card.n_samples == 0)
    throw PreconditionError("warmstart context needs dataset counts");
  if (conf.context == ContextLevel::full && !ctx.data_card.statistical_info)
    throw PreconditionError("full-context warmstart needs statistical information");

  PromptExtras extras;
  extras.context = conf.context;
  extras.n_recommendations = conf.n_points;
  extras.system_message = ctx.system_message;
  CompletionRequest req;
  req.prompt = build_prompt(Purpose::warmstart, ctx.model_card, ctx.data_card, Trajectory(space),
                            extras, Ablation::full);
  req.temperature = client.temperature;
  req.top_p = client.top_p;
  req.seed = rng.next_u64();

  WarmstartResult out;
  Deduplicator seen(space);
  try {
    const auto resp = client.complete(req);
    const std::string text = resp.texts.empty() ? std::string() : resp.texts.front();
    const auto parsed = parse_configurations(text, space, {}, &seen);
    for (const auto &cfg : parsed.configs) {
      if (out.configs.size() == conf.n_points) break;
      out.configs.push_back(cfg);
    }
    if (parsed.configs.empty())
      spdlog::warn("warmstart answer unparseable ({}); using space-filling initialization",
                   parsed.reject_reason.value_or("no configurations"));
  } catch (const ProtocolError &e) {
    spdlog::warn("warmstart response malformed ({}); using space-filling initialization", e.what());
  }
  out.n_parsed = out.configs.size();

  if (out.configs.size() < conf.n_points) {
    // Extra points let duplicates of parsed configurations be skipped.
    const std::size_t need = conf.n_points - out.configs.size();
    const auto unit = unit_sobol(2 * need + 8, space.d(), rng.next_u64());
    for (const auto &u : unit) {
      if (out.configs.size() == conf.n_points) break;
      auto cfg = space.from_unit(u);
      if (seen.insert(cfg)) out.configs.push_back(std::move(cfg));
    }
    Rng fallback = rng.substream("warmstart-fill");
    // Tiny discrete spaces may not hold n distinct points; accept repeats
    // after a bounded number of draws.
    for (std::size_t tries = 0; out.configs.size() < conf.n_points; ++tries) {
      std::vector<double> u(space.d());
      for (auto &v : u) v = fallback.uniform();
      auto cfg = space.from_unit(u);
      if (seen.insert(cfg) || tries > 64 * conf.n_points) out.configs.push_back(std::move(cfg));
    }
    out.n_filled = conf.n_points - out.n_parsed;
    spdlog::info("warmstart filled {} of {} points by Sobol sampling", out.n_filled, conf.n_points);
  }
  return out;
}

} // namespace icbo
