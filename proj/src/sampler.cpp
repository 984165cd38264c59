#include "icbo/sampler.hpp"

#include <numeric>

#include <spdlog/spdlog.h>

#include "icbo/errors.hpp"
#include "icbo/parsers.hpp"

namespace icbo {

void SamplerConfig::validate() const {
  if (m_candidates < 1) throw ValidationError("m_candidates must be >= 1");
}

CandidateSet propose(const Trajectory &traj, const SamplerConfig &conf, const PromptContext &ctx,
                     LlmClient &client, Rng &rng) {
  conf.validate();
  if (traj.empty()) throw PreconditionError("sampler needs a non-empty history");
  const auto &space = traj.space();
  const auto names = display_names(space, conf.ablation);

  Deduplicator seen(space);
  for (const auto &o : traj.observations()) seen.insert(o.config);

  PromptExtras extras;
  extras.target = target_value(traj, conf.alpha);
  extras.system_message = ctx.system_message;

  CandidateSet out;
  std::size_t batch = 0;
  for (std::size_t round = 0; round <= conf.max_retry_rounds; ++round) {
    const std::size_t want = conf.m_candidates - out.candidates.size();
    if (want == 0) break;
    std::vector<CompletionRequest> reqs;
    reqs.reserve(want);
    for (std::size_t i = 0; i < want; ++i) {
      if (conf.shuffle) {
        extras.order = rng.permutation(traj.size());
      } else {
        extras.order.resize(traj.size());
        std::iota(extras.order.begin(), extras.order.end(), std::size_t{0});
      }
      CompletionRequest req;
      req.prompt = build_prompt(Purpose::sampler, ctx.model_card, ctx.data_card, traj, extras,
                                conf.ablation);
      req.temperature = client.temperature;
      req.top_p = client.top_p;
      req.seed = rng.next_u64();
      req.index = batch++;
      reqs.push_back(std::move(req));
    }
    auto items = client.complete_all(reqs);
    for (auto &item : items) {
      ++out.attempted;
      if (item.error) {
        try {
          std::rethrow_exception(item.error);
        } catch (const ProtocolError &e) {
          out.rejected.push_back({"", std::string("malformed response: ") + e.what()});
          continue;
        }
      }
      const std::string text =
          item.response->texts.empty() ? std::string() : item.response->texts.front();
      const auto parsed = parse_configurations(text, space, names);
      if (parsed.items.empty()) {
        out.rejected.push_back({text, parsed.reject_reason.value_or("no configuration found")});
        continue;
      }
      const auto &first = parsed.items.front();
      if (!first.accepted || !first.config) {
        out.rejected.push_back({first.raw, first.reject_reason.value_or("rejected")});
        continue;
      }
      if (!seen.insert(*first.config)) {
        out.rejected.push_back({first.raw, "duplicate configuration"});
        continue;
      }
      out.candidates.push_back(*first.config);
    }
  }
  out.acceptance_rate =
      out.attempted ? static_cast<double>(out.candidates.size()) / static_cast<double>(out.attempted)
                    : 0.0;
  if (out.candidates.empty())
    throw SamplerFailure("no acceptable candidates after " + std::to_string(out.attempted) +
                         " attempts");
  return out;
}

Selection select_next(const CandidateSet &cands, const CandidateScorer &scorer, Rng &rng) {
  if (cands.empty()) throw PreconditionError("select_next needs at least one candidate");
  Selection sel;
  sel.scores.reserve(cands.size());
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    auto s = scorer(cands.candidates[i], i);
    if (!s) ++sel.n_failed;
    else if (!best || *s > *sel.scores[*best]) best = i;
    sel.scores.push_back(s);
  }
  if (!best) {
    best = rng.below(cands.size());
    sel.random_fallback = true;
    spdlog::warn("every candidate failed to score; picking candidate {} at random", *best);
  }
  sel.index = *best;
  sel.config = cands.candidates[*best];
  return sel;
}

} // namespace icbo
