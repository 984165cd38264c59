#include "icbo/surrogates.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include <spdlog/spdlog.h>

#include "icbo/errors.hpp"
#include "icbo/parsers.hpp"

namespace icbo {

namespace {

std::vector<std::size_t> history_order(std::size_t n, bool shuffle, Rng &rng) {
  if (shuffle) return rng.permutation(n);
  std::vector<std::size_t> id(n);
  std::iota(id.begin(), id.end(), std::size_t{0});
  return id;
}

/// Builds K requests, drawing every permutation and seed before fan-out so
/// the outcome does not depend on scheduling.
std::vector<CompletionRequest> make_requests(Purpose purpose, const Trajectory &traj,
                                             PromptExtras extras, std::size_t k, bool shuffle,
                                             Ablation ablation, const PromptContext &ctx,
                                             const LlmClient &client, Rng &rng) {
  extras.system_message = ctx.system_message;
  std::vector<CompletionRequest> reqs;
  reqs.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    extras.order = history_order(traj.size(), shuffle, rng);
    CompletionRequest req;
    req.prompt = build_prompt(purpose, ctx.model_card, ctx.data_card, traj, extras, ablation);
    req.temperature = client.temperature;
    req.top_p = client.top_p;
    req.seed = rng.next_u64();
    req.index = i;
    reqs.push_back(std::move(req));
  }
  return reqs;
}

/// Response text by request index; protocol errors count as unparseable,
/// transport errors propagate.
std::vector<std::optional<std::string>> collect(LlmClient &client,
                                                const std::vector<CompletionRequest> &reqs) {
  auto items = client.complete_all(reqs);
  std::vector<std::optional<std::string>> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].error) {
      try {
        std::rethrow_exception(items[i].error);
      } catch (const ProtocolError &e) {
        spdlog::warn("surrogate request {} returned a malformed response: {}", i, e.what());
        continue;
      }
    }
    if (!items[i].response->texts.empty()) out[i] = items[i].response->texts.front();
  }
  return out;
}

/// Sends every request, then re-asks the slots whose answer `parse` rejects,
/// up to `max_resample` more times each, with the same prompt and a fresh
/// seed. Returns the accepted values in slot order.
template <class T, class Parse>
std::vector<T> gather(LlmClient &client, std::vector<CompletionRequest> reqs,
                      std::size_t max_resample, Rng &rng, Parse parse) {
  std::vector<std::optional<T>> slots(reqs.size());
  std::vector<std::size_t> pending(reqs.size());
  std::iota(pending.begin(), pending.end(), std::size_t{0});
  for (std::size_t round = 0; round <= max_resample && !pending.empty(); ++round) {
    std::vector<CompletionRequest> batch;
    batch.reserve(pending.size());
    for (std::size_t b = 0; b < pending.size(); ++b) {
      CompletionRequest req = reqs[pending[b]];
      if (round > 0) req.seed = rng.next_u64();
      req.index = b;
      batch.push_back(std::move(req));
    }
    const auto texts = collect(client, batch);
    std::vector<std::size_t> still;
    for (std::size_t b = 0; b < pending.size(); ++b) {
      if (texts[b]) slots[pending[b]] = parse(*texts[b]);
      if (!slots[pending[b]]) still.push_back(pending[b]);
    }
    pending = std::move(still);
  }
  std::vector<T> out;
  for (auto &s : slots)
    if (s) out.push_back(*s);
  return out;
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

} // namespace

void DiscSurrogateConfig::validate() const {
  if (k_samples < 2) throw ValidationError("k_samples must be >= 2");
}

SurrogatePrediction predict(const Configuration &cfg, const Trajectory &traj,
                            const DiscSurrogateConfig &conf, const PromptContext &ctx,
                            LlmClient &client, Rng &rng) {
  conf.validate();
  if (traj.empty()) throw PreconditionError("discriminative surrogate needs a non-empty history");
  traj.space().validate(cfg);
  PromptExtras extras;
  extras.query = cfg;
  const auto reqs = make_requests(Purpose::disc_sm, traj, extras, conf.k_samples, conf.shuffle,
                                  conf.ablation, ctx, client, rng);
  SurrogatePrediction pred;
  pred.samples = gather<double>(client, reqs, conf.max_resample, rng,
                                [](const std::string &t) -> std::optional<double> {
                                  const auto p = parse_performance(t);
                                  if (!p.accepted) return std::nullopt;
                                  return p.value;
                                });
  pred.n_accepted = pred.samples.size();
  if (pred.n_accepted < min_accepted(conf.k_samples))
    throw SurrogateFailure("only " + std::to_string(pred.n_accepted) + " of " +
                           std::to_string(conf.k_samples) + " predictions parsed after resampling");
  const double n = static_cast<double>(pred.n_accepted);
  pred.mean = std::accumulate(pred.samples.begin(), pred.samples.end(), 0.0) / n;
  if (pred.n_accepted >= 2) {
    double ss = 0.0;
    for (double s : pred.samples) ss += (s - pred.mean) * (s - pred.mean);
    pred.std = std::sqrt(ss / (n - 1.0));
  }
  return pred;
}

double expected_improvement(const SurrogatePrediction &pred, double s_best) {
  const double gap = s_best - pred.mean;
  if (!(pred.std > 0.0)) return std::max(gap, 0.0);
  const double z = gap / pred.std;
  return std::max(gap * normal_cdf(z) + pred.std * normal_pdf(z), 0.0);
}

double expected_improvement_empirical(const SurrogatePrediction &pred, double s_best) {
  if (pred.samples.empty()) return expected_improvement(pred, s_best);
  double acc = 0.0;
  for (double s : pred.samples) acc += std::max(s_best - s, 0.0);
  return acc / static_cast<double>(pred.samples.size());
}

double acquisition(const SurrogatePrediction &pred, double s_best, EiMode mode) {
  return mode == EiMode::gaussian ? expected_improvement(pred, s_best)
                                  : expected_improvement_empirical(pred, s_best);
}

void GenSurrogateConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in (0, 1)");
  if (k_samples < 1) throw ValidationError("k_samples must be >= 1");
}

GenScore score(const Configuration &cfg, const Trajectory &traj, const GenSurrogateConfig &conf,
               const PromptContext &ctx, LlmClient &client, Rng &rng) {
  conf.validate();
  if (traj.size() < 2) throw PreconditionError("generative surrogate needs >= 2 observations");
  traj.space().validate(cfg);
  PromptExtras extras;
  extras.query = cfg;
  extras.gamma = conf.gamma;
  const auto reqs = make_requests(Purpose::gen_sm, traj, extras, conf.k_samples, conf.shuffle,
                                  conf.ablation, ctx, client, rng);
  GenScore out;
  out.labels = gather<int>(client, reqs, conf.max_resample, rng,
                           [](const std::string &t) -> std::optional<int> {
                             const auto p = parse_classification(t);
                             if (!p.accepted) return std::nullopt;
                             return p.label;
                           });
  out.n_accepted = out.labels.size();
  if (out.n_accepted < min_accepted(conf.k_samples))
    throw SurrogateFailure("only " + std::to_string(out.n_accepted) + " of " +
                           std::to_string(conf.k_samples) + " classifications parsed after resampling");
  out.p_good = static_cast<double>(std::accumulate(out.labels.begin(), out.labels.end(), 0)) /
               static_cast<double>(out.n_accepted);
  return out;
}

double ei_from_density_ratio(double l_over_g, double gamma) {
  return 1.0 / (gamma + (1.0 - gamma) / l_over_g);
}

} // namespace icbo
