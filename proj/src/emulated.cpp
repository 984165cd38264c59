#include "icbo/emulated.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "icbo/parsers.hpp"

namespace icbo {

namespace {

constexpr std::string_view kConfigPrefix = "Hyperparameter configuration:";
constexpr std::string_view kPerfPrefix = "Performance:";
constexpr std::string_view kClassPrefix = "Classification:";

std::optional<double> leading_number(std::string_view s) {
  const auto nums = parse_detail::find_numbers(s);
  if (nums.empty()) return std::nullopt;
  return nums.front();
}

double unit_distance(const SearchSpace &space, const Configuration &a, const Configuration &b) {
  const auto ua = space.to_unit(a);
  const auto ub = space.to_unit(b);
  double s = 0.0;
  for (std::size_t i = 0; i < ua.size(); ++i) s += (ua[i] - ub[i]) * (ua[i] - ub[i]);
  return std::sqrt(s);
}

std::size_t parse_requested_count(std::string_view text) {
  constexpr std::string_view key = "Please suggest ";
  const auto pos = text.find(key);
  if (pos == std::string_view::npos) return 5;
  std::size_t n = 0;
  for (std::size_t i = pos + key.size(); i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i)
    n = n * 10 + static_cast<std::size_t>(text[i] - '0');
  return n ? n : 5;
}

} // namespace

PromptHistory read_prompt_history(const PromptBundle &prompt, const SearchSpace &space) {
  const auto names = display_names(space, prompt.ablation);
  PromptHistory h;
  std::istringstream in(prompt.text);
  std::string line;
  std::optional<Configuration> pending_cfg;
  std::optional<double> pending_value;
  const bool sampler = prompt.purpose == Purpose::sampler;
  while (std::getline(in, line)) {
    std::string_view sv(line);
    if (sv.rfind(kConfigPrefix, 0) == 0) {
      const auto rest = sv.substr(kConfigPrefix.size());
      const auto parsed = parse_configurations(rest, space, names);
      std::optional<Configuration> cfg;
      if (!parsed.configs.empty()) cfg = parsed.configs.front();
      if (sampler) {
        if (cfg && pending_value) {
          h.configs.push_back(*cfg);
          h.values.push_back(*pending_value);
        }
        pending_value.reset();
      } else {
        pending_cfg = cfg;
        h.query = cfg;
      }
    } else if (sv.rfind(kPerfPrefix, 0) == 0 || sv.rfind(kClassPrefix, 0) == 0) {
      const auto v = leading_number(sv.substr(sv.find(':') + 1));
      if (sampler) {
        pending_value = v;
        h.target = v;
      } else if (pending_cfg && v) {
        h.configs.push_back(*pending_cfg);
        h.values.push_back(*v);
        pending_cfg.reset();
        h.query.reset();
      }
    }
  }
  return h;
}

std::string EmulatedResponder::operator()(const CompletionRequest &req, std::size_t,
                                          Rng &rng) const {
  switch (req.prompt.purpose) {
  case Purpose::warmstart: return answer_warmstart(parse_requested_count(req.prompt.text), rng);
  case Purpose::disc_sm: return answer_regression(read_prompt_history(req.prompt, space_), rng);
  case Purpose::gen_sm: return answer_classification(read_prompt_history(req.prompt, space_), rng);
  case Purpose::sampler:
    return answer_sampler(read_prompt_history(req.prompt, space_), req.prompt.ablation, rng);
  }
  return "";
}

std::string EmulatedResponder::answer_regression(const PromptHistory &h, Rng &rng) const {
  if (!h.query || h.configs.empty()) return "## 0 ##";
  std::vector<std::pair<double, double>> by_dist;  // (distance, score)
  for (std::size_t i = 0; i < h.configs.size(); ++i)
    by_dist.emplace_back(unit_distance(space_, *h.query, h.configs[i]), h.values[i]);
  std::sort(by_dist.begin(), by_dist.end());
  const std::size_t k = std::min(opts_.neighbours, by_dist.size());
  double wsum = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double w = 1.0 / (by_dist[i].first + 1e-3);
    wsum += w;
    acc += w * by_dist[i].second;
  }
  const auto [lo, hi] = std::minmax_element(h.values.begin(), h.values.end());
  const double range = *hi - *lo > 0.0 ? *hi - *lo : 1.0;
  const double noise = opts_.regression_noise * range * (1.0 + by_dist.front().first);
  return "## " + format_number(acc / wsum + noise * rng.normal()) + " ##";
}

std::string EmulatedResponder::answer_classification(const PromptHistory &h, Rng &rng) const {
  if (!h.query || h.configs.empty()) return "## 0 ##";
  std::vector<std::pair<double, double>> by_dist;
  for (std::size_t i = 0; i < h.configs.size(); ++i)
    by_dist.emplace_back(unit_distance(space_, *h.query, h.configs[i]), h.values[i]);
  std::sort(by_dist.begin(), by_dist.end());
  const std::size_t k = std::min(opts_.neighbours, by_dist.size());
  double votes = 0.0;
  for (std::size_t i = 0; i < k; ++i) votes += by_dist[i].second > 0.5 ? 1.0 : 0.0;
  return rng.uniform() < votes / static_cast<double>(k) ? "## 1 ##" : "## 0 ##";
}

std::string EmulatedResponder::answer_sampler(const PromptHistory &h, Ablation ablation,
                                              Rng &rng) const {
  const auto names = display_names(space_, ablation);
  std::vector<double> u(space_.d());
  if (h.configs.empty() || !h.target) {
    for (auto &v : u) v = rng.uniform();
  } else {
    std::size_t anchor = 0;
    for (std::size_t i = 1; i < h.configs.size(); ++i)
      if (std::abs(h.values[i] - *h.target) < std::abs(h.values[anchor] - *h.target)) anchor = i;
    u = space_.to_unit(h.configs[anchor]);
    for (auto &v : u) v = std::clamp(v + opts_.perturbation * rng.normal(), 0.005, 0.995);
  }
  return "## " + serialize_config_answer(space_, space_.from_unit(u), names) + " ##";
}

std::string EmulatedResponder::answer_warmstart(std::size_t n, Rng &rng) const {
  std::string out = "[";
  std::vector<double> u(space_.d());
  for (std::size_t k = 0; k < n; ++k) {
    for (auto &v : u) v = 0.05 + 0.9 * rng.uniform();
    const auto cfg = space_.from_unit(u);
    out += k ? ", {" : "{";
    for (std::size_t i = 0; i < space_.d(); ++i) {
      if (i) out += ", ";
      const auto &def = space_.dim(i);
      out += "'" + def.name + "': " +
             (def.kind == ParamKind::integer ? std::to_string(static_cast<long long>(cfg[i]))
                                              : format_number(cfg[i]));
    }
    out += "}";
  }
  return out + "]";
}

std::shared_ptr<MockBackend> make_emulated_mock(const SearchSpace &space, std::uint64_t seed) {
  EmulatedResponder responder(space);
  return std::make_shared<MockBackend>(
      seed, [responder](const CompletionRequest &req, std::size_t c, Rng &rng) {
        return responder(req, c, rng);
      });
}

} // namespace icbo
