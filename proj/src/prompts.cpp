#include "icbo/prompts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include <fmt/format.h>

#include "icbo/errors.hpp"

namespace icbo {

std::string_view to_string(TaskKind t) {
  return t == TaskKind::classification ? "classification" : "regression";
}

std::string_view to_string(Purpose p) {
  switch (p) {
  case Purpose::warmstart: return "warmstart";
  case Purpose::disc_sm: return "disc_sm";
  case Purpose::gen_sm: return "gen_sm";
  case Purpose::sampler: return "sampler";
  }
  return "disc_sm";
}

std::string_view to_string(Ablation a) {
  switch (a) {
  case Ablation::full: return "full";
  case Ablation::no_context: return "no_context";
  case Ablation::no_instructions: return "no_instructions";
  case Ablation::uninformative: return "uninformative";
  }
  return "full";
}

std::string_view to_string(ContextLevel c) {
  switch (c) {
  case ContextLevel::none: return "none";
  case ContextLevel::partial: return "partial";
  case ContextLevel::full: return "full";
  }
  return "none";
}

TaskKind parse_task_kind(std::string_view s) {
  if (s == "classification") return TaskKind::classification;
  if (s == "regression") return TaskKind::regression;
  throw ValidationError("unknown task kind '" + std::string(s) + "'");
}

Ablation parse_ablation(std::string_view s) {
  if (s == "full") return Ablation::full;
  if (s == "no_context") return Ablation::no_context;
  if (s == "no_instructions") return Ablation::no_instructions;
  if (s == "uninformative") return Ablation::uninformative;
  throw ValidationError("unknown ablation '" + std::string(s) + "'");
}

ContextLevel parse_context_level(std::string_view s) {
  if (s == "none") return ContextLevel::none;
  if (s == "partial") return ContextLevel::partial;
  if (s == "full") return ContextLevel::full;
  throw ValidationError("unknown context level '" + std::string(s) + "'");
}

ModelCard ModelCard::for_space(std::string model_name, TaskKind task,
                               std::string metric, const SearchSpace &space) {
  ModelCard card{std::move(model_name), task, std::move(metric), {}};
  for (const auto &d : space.dims()) {
    std::string type = d.kind == ParamKind::integer   ? "int"
                       : d.kind == ParamKind::ordinal ? "ordinal"
                                                      : "float";
    card.hyperparams.push_back({d.name, std::move(type), d.lower, d.upper, d.transform});
  }
  return card;
}

void ModelCard::validate(const SearchSpace &space) const {
  if (hyperparams.size() != space.d())
    throw ValidationError("model card describes " + std::to_string(hyperparams.size()) +
                          " hyperparameters, space has " + std::to_string(space.d()));
  for (std::size_t i = 0; i < space.d(); ++i)
    if (hyperparams[i].name != space.dim(i).name)
      throw ValidationError("model card hyperparameter '" + hyperparams[i].name +
                            "' does not match space dimension '" + space.dim(i).name + "'");
}

void DataCard::validate() const {
  if (n_numerical + n_categorical != n_features)
    throw ValidationError("data card: numerical + categorical must equal total features");
  if (class_distribution) {
    double total = 0.0;
    for (double p : *class_distribution) {
      if (!(p >= 0.0)) throw ValidationError("data card: negative class fraction");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ValidationError("data card: class fractions must sum to 1");
  }
}

std::string format_number(double v, int sig) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  if (v == 0.0) return "0";
  const double a = std::abs(v);
  char buf[64];
  if (a >= 1e-4 && a <= 1e6) {
    std::snprintf(buf, sizeof buf, "%.*e", sig - 1, v);
    const char *e = std::strchr(buf, 'e');
    const int exponent = e ? std::atoi(e + 1) : 0;
    const int decimals = std::max(0, sig - 1 - exponent);
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
      while (!s.empty() && s.back() == '0') s.pop_back();
      if (!s.empty() && s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
  }
  std::snprintf(buf, sizeof buf, "%.*g", sig, v);
  return buf;
}

namespace {

std::string format_value(const HyperparamDef &def, double v, const ValueFormat &fmt) {
  if (def.kind == ParamKind::integer) return fmt::format("{}", static_cast<long long>(v));
  return format_number(v, fmt.significant_digits);
}

std::string join_config(const SearchSpace &space, const Configuration &cfg,
                        const std::vector<std::string> &names, std::string_view sep,
                        const ValueFormat &fmt) {
  std::string out;
  for (std::size_t i = 0; i < space.d(); ++i) {
    if (i) out += ", ";
    out += names.empty() ? space.dim(i).name : names.at(i);
    out += sep;
    out += format_value(space.dim(i), cfg[i], fmt);
  }
  return out;
}

void check_permutation(const std::vector<std::size_t> &order, std::size_t n) {
  if (order.size() != n) throw PreconditionError("history order is not a permutation");
  std::vector<bool> seen(n, false);
  for (auto i : order) {
    if (i >= n || seen[i]) throw PreconditionError("history order is not a permutation");
    seen[i] = true;
  }
}

std::vector<std::size_t> resolve_order(const std::vector<std::size_t> &order,
                                       std::size_t n) {
  if (order.empty()) {
    std::vector<std::size_t> id(n);
    for (std::size_t i = 0; i < n; ++i) id[i] = i;
    return id;
  }
  check_permutation(order, n);
  return order;
}

std::string format_percent(double fraction) {
  return fmt::format("{:.1f}", fraction * 100.0);
}

template <typename T>
const T &require(const std::optional<T> &v, const char *placeholder) {
  if (!v) throw TemplateError(placeholder);
  return *v;
}

} // namespace

std::string serialize_config(const SearchSpace &space, const Configuration &cfg,
                             const std::vector<std::string> &names,
                             const ValueFormat &fmt) {
  return join_config(space, cfg, names, " is ", fmt);
}

std::string serialize_config_answer(const SearchSpace &space, const Configuration &cfg,
                                    const std::vector<std::string> &names,
                                    const ValueFormat &fmt) {
  return join_config(space, cfg, names, ": ", fmt);
}

std::string serialize_history(const Trajectory &traj,
                              const std::vector<std::size_t> &order,
                              const ValueFormat &fmt) {
  check_permutation(order, traj.size());
  std::string out;
  for (auto i : order) {
    const auto &o = traj[i];
    out += "Hyperparameter configuration: " + serialize_config(traj.space(), o.config, {}, fmt);
    out += "\nPerformance: " + format_number(o.score, fmt.significant_digits) + "\n";
  }
  return out;
}

std::string render_hyperparams(const std::vector<HyperparamDescription> &hps) {
  std::string out;
  for (std::size_t i = 0; i < hps.size(); ++i) {
    const auto &h = hps[i];
    if (i) out += ", ";
    const bool is_int = h.type == "int";
    auto bound = [&](double v) {
      return is_int ? fmt::format("{}", static_cast<long long>(v)) : format_number(v);
    };
    out += fmt::format("{}: [{}, {}] ({}", h.name, bound(h.lower), bound(h.upper), h.type);
    if (h.transform != Transform::linear) out += fmt::format(", {} scale", to_string(h.transform));
    out += ")";
  }
  return out;
}

std::string render_class_distribution(const DataCard &card) {
  if (!card.class_distribution || card.class_distribution->empty())
    return "not applicable";
  std::string out;
  for (std::size_t i = 0; i < card.class_distribution->size(); ++i) {
    if (i) out += ", ";
    out += fmt::format("class {}: {}%", i, format_percent((*card.class_distribution)[i]));
  }
  return out;
}

std::string render_statistical_info(std::string_view model_name, const StatisticalInfo &info) {
  std::string skew = "[";
  for (std::size_t i = 0; i < info.skewness.size(); ++i) {
    if (i) skew += ", ";
    skew += format_number(info.skewness[i], 4);
  }
  skew += "]";
  return fmt::format(
      "Considering one-hot encoding for categorical features the total amount input's "
      "features of the {} is {}. We are standarizing numerical values to have mean 0 and "
      "std 1. The Skewness of each feature is {}. The number of features that have strong "
      "correlation (defined as > 0.5 or <-0.5) with the target feature is {}. Of the {} "
      "pairwise feature relationships, {} pairs of features are strongly correlated "
      "(>0.5, <-0.5).",
      model_name, info.n_features_one_hot, skew, info.n_strong_target_correlations,
      info.n_pairwise_relationships, info.n_strong_pairs);
}

std::vector<std::string> display_names(const SearchSpace &space, Ablation ablation) {
  if (ablation != Ablation::uninformative) return space.names();
  std::vector<std::string> names;
  for (std::size_t i = 0; i < space.d(); ++i) names.push_back(fmt::format("X_{}", i + 1));
  return names;
}

namespace {

std::vector<HyperparamDescription> displayed_hyperparams(const ModelCard &card,
                                                         const std::vector<std::string> &names) {
  auto hps = card.hyperparams;
  for (std::size_t i = 0; i < hps.size() && i < names.size(); ++i) hps[i].name = names[i];
  return hps;
}

std::string warmstart_prompt(const ModelCard &mc, const DataCard &dc,
                             const PromptExtras &ex, Ablation ablation,
                             const std::vector<std::string> &names) {
  const auto context = require(ex.context, "context level");
  const auto n = require(ex.n_recommendations, "number of recommendations");
  const std::string hps = render_hyperparams(displayed_hyperparams(mc, names));
  const std::string ask = fmt::format(
      "Please suggest {} diverse yet effective configurations to initiate a Bayesian "
      "Optimization process for hyperparameter tuning.\n",
      n);
  const std::string tail =
      "Your response should include only a list of dictionaries, where each dictionary "
      "describes one recommended configuration. Do not enumerate the dictionaries.\n";

  if (ablation == Ablation::uninformative) {
    return "You are assisting me with automated machine learning.\n"
           "I’m exploring a subset of hyperparameters detailed as: " + hps + ".\n" + ask +
           "You mustn't include “None” in the configurations.\n" + tail;
  }
  if (context == ContextLevel::none || ablation == Ablation::no_context) {
    return fmt::format("You are assisting me with automated machine learning using {}.\n",
                       mc.model_name) +
           "I’m exploring a subset of hyperparameters detailed as: " + hps + ".\n" + ask +
           "You mustn't include “None” in the configurations.\n" + tail;
  }
  std::string out = fmt::format(
      "You are assisting me with automated machine learning using {0} for a {1} task. "
      "The {1} performance is measured using {2}.\n"
      "The dataset has {3} samples with {4} total features, of which {5} are numerical and "
      "{6} are categorical. Class distribution is {7}.",
      mc.model_name, to_string(mc.task), mc.metric, dc.n_samples, dc.n_features,
      dc.n_numerical, dc.n_categorical, render_class_distribution(dc));
  if (context == ContextLevel::full) {
    const auto &info = require(dc.statistical_info, "statistical information");
    out += " " + render_statistical_info(mc.model_name, info) + "\n";
    out += "I’m exploring a subset of hyperparameters detailed as: " + hps + ".\n";
  } else {
    out += " I’m exploring a subset of hyperparameters detailed as: " + hps + ".\n";
  }
  out += ask + "You mustn't include ‘None’ in the configurations.\n" + tail;
  return out;
}

// Opening of the in-context prompts: problem description, optionally with the
// dataset sentences.
std::string icl_opening(const ModelCard &mc, const DataCard &dc, Ablation ablation) {
  if (ablation == Ablation::uninformative)
    return "The following are examples of the performance of a model and the "
           "corresponding model hyperparameter configurations.";
  std::string out = fmt::format(
      "The following are examples of the performance of a {} measured in {} and the "
      "corresponding model hyperparameter configurations.",
      mc.model_name, mc.metric);
  if (ablation != Ablation::no_context) {
    out += fmt::format(
        " The model is evaluated on a tabular {} task containing {} classes. The tabular "
        "dataset contains {} samples and {} features ({} categorical, {} numerical).",
        to_string(mc.task), dc.n_classes(), dc.n_samples, dc.n_features, dc.n_categorical,
        dc.n_numerical);
  }
  return out;
}

std::string disc_prompt(const ModelCard &mc, const DataCard &dc, const Trajectory &traj,
                        const PromptExtras &ex, Ablation ablation,
                        const std::vector<std::string> &names) {
  const auto &query = require(ex.query, "configuration to predict performance");
  const auto order = resolve_order(ex.order, traj.size());
  std::string out = icl_opening(mc, dc, ablation);
  out += " Your response should only contain the predicted accuracy in the format "
         "## performance ##.\n";
  for (auto i : order) {
    out += "Hyperparameter configuration: " + serialize_config(traj.space(), traj[i].config, names) + "\n";
    out += "Performance: " + format_number(traj[i].score) + "\n";
  }
  out += "Hyperparameter configuration: " + serialize_config(traj.space(), query, names) + "\n";
  out += "Performance:";
  return out;
}

std::string gen_prompt(const ModelCard &mc, const DataCard &dc, const Trajectory &traj,
                       const PromptExtras &ex, Ablation ablation,
                       const std::vector<std::string> &names) {
  const auto &query = require(ex.query, "configuration to classify");
  const double gamma = require(ex.gamma, "gamma");
  const auto order = resolve_order(ex.order, traj.size());
  const auto labels = label_good_bad(traj, gamma);
  std::string out = icl_opening(mc, dc, ablation);
  out += fmt::format(
      " The performance classification is 1 if the configuration is in the best-performing "
      "{}% of all configurations, and 0 otherwise. Your response should only contain the "
      "predicted performance classification in the format ## performance classification ##.\n",
      format_percent(gamma));
  for (auto i : order) {
    out += "Hyperparameter configuration: " + serialize_config(traj.space(), traj[i].config, names) + "\n";
    out += fmt::format("Classification: {}\n", labels[i].good ? 1 : 0);
  }
  out += "Hyperparameter configuration: " + serialize_config(traj.space(), query, names) + "\n";
  out += "Classification:";
  return out;
}

std::string sampler_prompt(const ModelCard &mc, const DataCard &dc, const Trajectory &traj,
                           const PromptExtras &ex, Ablation ablation,
                           const std::vector<std::string> &names) {
  const double target = require(ex.target, "target score");
  const auto order = resolve_order(ex.order, traj.size());
  std::string out = icl_opening(mc, dc, ablation);
  out += " The allowable ranges for the hyperparameters are: " +
         render_hyperparams(displayed_hyperparams(mc, names)) + ".\n";
  out += "Recommend a configuration that can achieve the target performance of " +
         format_number(target) + ".";
  if (ablation != Ablation::no_instructions) {
    out += " Do not recommend values at the minimum or maximum of allowable range, do not "
           "recommend rounded values. Recommend values with the highest possible precision, "
           "as requested by the allowed ranges.";
  }
  out += " Your response must only contain the predicted configuration, in the format "
         "## configuration ##.\n";
  for (auto i : order) {
    out += "Performance: " + format_number(traj[i].score) + "\n";
    out += "Hyperparameter configuration: " + serialize_config(traj.space(), traj[i].config, names) + "\n";
  }
  out += "Performance: " + format_number(target) + "\n";
  out += "Hyperparameter configuration:";
  return out;
}

} // namespace

PromptBundle build_prompt(Purpose purpose, const ModelCard &model_card,
                          const DataCard &data_card, const Trajectory &traj,
                          const PromptExtras &extras, Ablation ablation) {
  const auto names = display_names(traj.space(), ablation);
  PromptBundle bundle;
  bundle.purpose = purpose;
  bundle.ablation = ablation;
  switch (purpose) {
  case Purpose::warmstart:
    bundle.text = warmstart_prompt(model_card, data_card, extras, ablation, names);
    break;
  case Purpose::disc_sm:
    bundle.text = disc_prompt(model_card, data_card, traj, extras, ablation, names);
    break;
  case Purpose::gen_sm:
    bundle.text = gen_prompt(model_card, data_card, traj, extras, ablation, names);
    break;
  case Purpose::sampler:
    bundle.text = sampler_prompt(model_card, data_card, traj, extras, ablation, names);
    break;
  }
  if (!extras.system_message.empty())
    bundle.role_messages.push_back({"system", extras.system_message});
  bundle.role_messages.push_back({"user", bundle.text});
  return bundle;
}

GoldenFixture golden_fixture() {
  SearchSpace space({
      {"max_depth", ParamKind::integer, Transform::linear, 1, 15},
      {"min_samples_split", ParamKind::continuous, Transform::logit, 0.01, 0.99},
      {"min_samples_leaf", ParamKind::continuous, Transform::logit, 0.01, 0.49},
      {"min_weight_fraction_leaf", ParamKind::continuous, Transform::logit, 0.01, 0.49},
      {"max_features", ParamKind::continuous, Transform::logit, 0.01, 0.99},
      {"min_impurity_decrease", ParamKind::continuous, Transform::linear, 0.0, 0.5},
  });
  auto mc = ModelCard::for_space("RandomForest", TaskKind::classification, "accuracy", space);
  DataCard dc;
  dc.n_samples = 569;
  dc.n_features = 30;
  dc.n_numerical = 30;
  dc.n_categorical = 0;
  dc.class_distribution = std::vector<double>{0.627, 0.373};
  dc.statistical_info = StatisticalInfo{30, {1.2, 0.65, -0.31}, 19, 435, 142};
  Trajectory traj(space);
  traj.append(Configuration{{15, 0.5, 0.1, 0.05, 0.41, 0.0}}, -0.9);
  traj.append(Configuration{{3, 0.2, 0.3, 0.2, 0.8, 0.1}}, -0.82);
  traj.append(Configuration{{8, 0.75, 0.02, 0.01, 0.33, 0.25}}, -0.945);
  Configuration query{{7, 0.35, 0.05, 0.1, 0.41, 0.05}};
  return {space, mc, dc, traj, query};
}

std::vector<GoldenPrompt> render_goldens() {
  const auto fx = golden_fixture();
  auto render = [&](Purpose p, Ablation a, PromptExtras ex) {
    return build_prompt(p, fx.model_card, fx.data_card, fx.traj, ex, a).text;
  };
  auto warm = [](ContextLevel c) {
    PromptExtras ex;
    ex.context = c;
    ex.n_recommendations = 5;
    return ex;
  };
  PromptExtras disc;
  disc.query = fx.query;
  PromptExtras gen;
  gen.query = fx.query;
  gen.gamma = 0.25;
  PromptExtras samp;
  samp.target = target_value(fx.traj, -0.1);

  std::vector<GoldenPrompt> out;
  out.push_back({"warmstart_no_context.txt", render(Purpose::warmstart, Ablation::full, warm(ContextLevel::none))});
  out.push_back({"warmstart_partial_context.txt", render(Purpose::warmstart, Ablation::full, warm(ContextLevel::partial))});
  out.push_back({"warmstart_full_context.txt", render(Purpose::warmstart, Ablation::full, warm(ContextLevel::full))});
  out.push_back({"statistical_info.txt", render_statistical_info(fx.model_card.model_name, *fx.data_card.statistical_info)});
  out.push_back({"disc_sm.txt", render(Purpose::disc_sm, Ablation::full, disc)});
  out.push_back({"gen_sm.txt", render(Purpose::gen_sm, Ablation::full, gen)});
  out.push_back({"sampler.txt", render(Purpose::sampler, Ablation::full, samp)});
  out.push_back({"disc_sm_uninformative.txt", render(Purpose::disc_sm, Ablation::uninformative, disc)});
  out.push_back({"disc_sm_no_context.txt", render(Purpose::disc_sm, Ablation::no_context, disc)});
  out.push_back({"sampler_no_context.txt", render(Purpose::sampler, Ablation::no_context, samp)});
  out.push_back({"sampler_no_instructions.txt", render(Purpose::sampler, Ablation::no_instructions, samp)});
  out.push_back({"gen_sm_no_context.txt", render(Purpose::gen_sm, Ablation::no_context, gen)});
  out.push_back({"sampler_uninformative.txt", render(Purpose::sampler, Ablation::uninformative, samp)});
  return out;
}

} // namespace icbo
