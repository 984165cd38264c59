#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include "icbo/emulated.hpp"
#include "icbo/llm_client.hpp"
#include "icbo/objectives.hpp"

namespace icbo::support {

inline std::shared_ptr<MockBackend> responder_mock(
    std::function<std::string(const CompletionRequest &, std::size_t, Rng &)> fn,
    std::uint64_t seed = 1) {
  return std::make_shared<MockBackend>(seed, std::move(fn));
}

inline std::shared_ptr<MockBackend> constant_mock(std::string text) {
  return responder_mock([text](const CompletionRequest &, std::size_t, Rng &) { return text; });
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string &tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("icbo-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;
  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path &p, const std::string &text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

/// Answers surrogate prompts with a hidden quadratic evaluated at the query
/// (plus small noise) and sampler prompts with Gaussian perturbations of the
/// best example shown.
class QuadraticOracle {
public:
  QuadraticOracle(SearchSpace space, std::vector<double> centre, double noise = 0.02,
                  double perturbation = 0.1)
      : space_(std::move(space)), centre_(std::move(centre)), noise_(noise),
        perturbation_(perturbation), emulated_(space_) {}

  double value(const Configuration &cfg) const {
    const auto u = space_.to_unit(cfg);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - centre_[i]) * (u[i] - centre_[i]);
    return s;
  }

  std::string operator()(const CompletionRequest &req, std::size_t, Rng &rng) const {
    const auto h = read_prompt_history(req.prompt, space_);
    if (req.prompt.purpose == Purpose::sampler) {
      // Perturb the incumbent shown in the prompt.
      if (h.configs.empty()) return emulated_.answer_sampler(h, req.prompt.ablation, rng);
      std::size_t best = 0;
      for (std::size_t i = 1; i < h.values.size(); ++i)
        if (h.values[i] < h.values[best]) best = i;
      auto u = space_.to_unit(h.configs[best]);
      for (auto &v : u) v = std::clamp(v + perturbation_ * rng.normal(), 0.0, 1.0);
      return "## " + serialize_config_answer(space_, space_.from_unit(u)) + " ##";
    }
    if (!h.query) return "no idea";
    const double v = value(*h.query) + noise_ * rng.normal();
    return "## " + format_number(v) + " ##";
  }

private:
  SearchSpace space_;
  std::vector<double> centre_;
  double noise_;
  double perturbation_;
  EmulatedResponder emulated_;
};

/// Sampler responder where attempt c is bad iff (c * 37) % 100 < 31, so any
/// 100 consecutive attempts hold exactly 31 bad answers. Bad answers
/// alternate between garbage and a copy of the incumbent; good answers are
/// uniform draws, so they never collide with each other or the history.
class FaultySampler {
public:
  explicit FaultySampler(SearchSpace space) : space_(std::move(space)), emulated_(space_) {}

  std::string operator()(const CompletionRequest &req, std::size_t c, Rng &rng) {
    if (req.prompt.purpose != Purpose::sampler) return emulated_(req, c, rng);
    const auto k = counter_->fetch_add(1);
    const auto h = read_prompt_history(req.prompt, space_);
    if ((k * 37) % 100 < 31) {
      const auto bad = bad_->fetch_add(1);
      if (bad % 2 == 0 || h.configs.empty()) return "I cannot help with that request.";
      std::size_t best = 0;
      for (std::size_t i = 1; i < h.values.size(); ++i)
        if (h.values[i] < h.values[best]) best = i;
      return "## " + serialize_config_answer(space_, h.configs[best]) + " ##";
    }
    std::vector<double> u(space_.d());
    for (auto &v : u) v = rng.uniform();
    return "## " + serialize_config_answer(space_, space_.from_unit(u)) + " ##";
  }

  std::uint64_t attempts() const { return counter_->load(); }

private:
  SearchSpace space_;
  EmulatedResponder emulated_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_ = std::make_shared<std::atomic<std::uint64_t>>(0);
  std::shared_ptr<std::atomic<std::uint64_t>> bad_ = std::make_shared<std::atomic<std::uint64_t>>(0);
};

inline SearchSpace rf_space() {
  return SearchSpace::load(data_dir() / "spaces" / "bayesmark_random_forest.json");
}

} // namespace icbo::support
