#include "icbo/parsers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace icbo {

namespace {

bool is_word(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

std::string_view strip_quotes(std::string_view s) {
  s = trim(s);
  while (s.size() >= 2 &&
         ((s.front() == '\'' && s.back() == '\'') || (s.front() == '"' && s.back() == '"')))
    s = trim(s.substr(1, s.size() - 2));
  return s;
}

// Length of a real-number token starting at `i`, or 0.
std::size_t number_length(std::string_view t, std::size_t i) {
  std::size_t j = i;
  if (j < t.size() && (t[j] == '-' || t[j] == '+')) ++j;
  const std::size_t mantissa = j;
  while (j < t.size() && is_digit(t[j])) ++j;
  bool digits = j > mantissa;
  if (j < t.size() && t[j] == '.') {
    std::size_t k = j + 1;
    while (k < t.size() && is_digit(t[k])) ++k;
    if (k > j + 1 || digits) {
      digits = digits || k > j + 1;
      j = k;
    }
  }
  if (!digits) return 0;
  if (j < t.size() && (t[j] == 'e' || t[j] == 'E')) {
    std::size_t k = j + 1;
    if (k < t.size() && (t[k] == '-' || t[k] == '+')) ++k;
    const std::size_t exp_start = k;
    while (k < t.size() && is_digit(t[k])) ++k;
    if (k > exp_start) j = k;
  }
  return j - i;
}

std::optional<double> to_double(std::string_view tok) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v,
                                   std::chars_format::general);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

// The whole of `s` as a single real number.
std::optional<double> exact_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (number_length(s, 0) != s.size()) return std::nullopt;
  return to_double(s);
}

} // namespace

namespace parse_detail {

std::vector<double> find_numbers(std::string_view t) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < t.size()) {
    const char c = t[i];
    const bool starts = is_digit(c) || c == '-' || c == '+' || c == '.';
    const char prev = i > 0 ? t[i - 1] : ' ';
    if (!starts || is_word(prev) || prev == '.' || (c == '.' && i > 0 && is_digit(prev))) {
      ++i;
      continue;
    }
    const std::size_t len = number_length(t, i);
    if (len == 0) {
      ++i;
      continue;
    }
    const std::size_t end = i + len;
    if (end < t.size() && is_word(t[end])) {
      // Part of a larger token such as "3abc"; skip the whole word.
      i = end;
      while (i < t.size() && is_word(t[i])) ++i;
      continue;
    }
    if (auto v = to_double(t.substr(i, len))) out.push_back(*v);
    i = end;
  }
  return out;
}

std::optional<std::string_view> hash_span(std::string_view t) {
  const auto open = t.find("##");
  if (open == std::string_view::npos) return std::nullopt;
  const auto close = t.find("##", open + 2);
  if (close == std::string_view::npos) return std::nullopt;
  return t.substr(open + 2, close - open - 2);
}

} // namespace parse_detail

ParsedScalar parse_performance(std::string_view text) {
  ParsedScalar out;
  out.raw = std::string(text);
  auto pick = [&](std::string_view region) -> bool {
    for (double v : parse_detail::find_numbers(region)) {
      if (std::isfinite(v)) {
        out.value = v;
        out.accepted = true;
        return true;
      }
    }
    return false;
  };
  if (auto span = parse_detail::hash_span(text); span && pick(*span)) return out;
  if (pick(text)) return out;
  out.reject_reason = "no finite number in response";
  return out;
}

ParsedLabel parse_classification(std::string_view text) {
  ParsedLabel out;
  out.raw = std::string(text);
  const auto span = parse_detail::hash_span(text);
  const std::string_view body = trim(span ? *span : text);
  if (body == "0" || body == "1") {
    out.label = body == "1" ? 1 : 0;
    out.accepted = true;
  } else {
    out.reject_reason = "classification must be exactly 0 or 1";
  }
  return out;
}

std::string Deduplicator::key(const Configuration &cfg) const {
  std::string k;
  char buf[40];
  for (std::size_t i = 0; i < space_->d(); ++i) {
    // Raw values are first rounded to the precision prompts display, so a
    // configuration copied back from a prompt keys like its source.
    std::snprintf(buf, sizeof buf, "%.5e", cfg[i]);
    double x = space_->dim(i).to_internal(std::strtod(buf, nullptr));
    if (x == 0.0) x = 0.0;  // fold -0
    std::snprintf(buf, sizeof buf, "%.5e|", x);
    k += buf;
  }
  return k;
}

namespace {

// Splits on commas outside brackets and quotes.
std::vector<std::string_view> split_entries(std::string_view body) {
  std::vector<std::string_view> parts;
  int depth = 0;
  char quote = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (quote) {
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"') quote = c;
    else if (c == '[' || c == '(' || c == '{') ++depth;
    else if ((c == ']' || c == ')' || c == '}') && depth > 0) --depth;
    else if (c == ',' && depth == 0) {
      parts.push_back(body.substr(start, i - start));
      start = i + 1;
    }
  }
  parts.push_back(body.substr(start));
  return parts;
}

// "key: value", "key = value" or "key is value".
bool split_key_value(std::string_view entry, std::string_view &key, std::string_view &value) {
  entry = trim(entry);
  auto at = std::string_view::npos;
  std::size_t sep_len = 1;
  char quote = 0;
  for (std::size_t i = 0; i < entry.size(); ++i) {
    const char c = entry[i];
    if (quote) {
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"') quote = c;
    else if (c == ':' || c == '=') {
      at = i;
      break;
    }
  }
  if (at == std::string_view::npos) {
    at = entry.find(" is ");
    sep_len = 4;
  }
  if (at == std::string_view::npos) return false;
  key = strip_quotes(entry.substr(0, at));
  value = strip_quotes(entry.substr(at + sep_len));
  return !key.empty();
}

ConfigOutcome parse_one(std::string_view body, const SearchSpace &space,
                        const std::vector<std::string> &names) {
  ConfigOutcome out;
  out.raw = std::string(trim(body));
  body = trim(body);
  constexpr std::string_view prefix = "Hyperparameter configuration:";
  if (body.substr(0, prefix.size()) == prefix) body = trim(body.substr(prefix.size()));
  if (!body.empty() && body.front() == '{') body.remove_prefix(1);
  if (!body.empty() && body.back() == '}') body.remove_suffix(1);

  const auto reject = [&](std::string why) {
    out.accepted = false;
    out.reject_reason = std::move(why);
    out.config.reset();
    return out;
  };

  std::vector<std::optional<double>> values(space.d());
  std::size_t pairs = 0;
  for (auto entry : split_entries(body)) {
    if (trim(entry).empty()) continue;
    std::string_view key, value;
    if (!split_key_value(entry, key, value)) return reject("malformed entry '" + std::string(trim(entry)) + "'");
    ++pairs;
    std::optional<std::size_t> idx;
    for (std::size_t i = 0; i < space.d(); ++i) {
      const auto &shown = names.empty() ? space.dim(i).name : names[i];
      if (key == shown || key == space.dim(i).name) {
        idx = i;
        break;
      }
    }
    if (!idx) return reject("unknown hyperparameter '" + std::string(key) + "'");
    if (value == "None" || value == "none" || value == "null")
      return reject("None value for '" + std::string(key) + "'");
    const auto v = exact_number(value);
    if (!v) return reject("non-numeric value for '" + std::string(key) + "'");
    if (!std::isfinite(*v)) return reject("non-finite value for '" + std::string(key) + "'");
    values[*idx] = *v;
  }
  if (pairs == 0) return reject("no configuration found");

  Configuration cfg;
  cfg.values.resize(space.d());
  for (std::size_t i = 0; i < space.d(); ++i) {
    const auto &def = space.dim(i);
    double v;
    if (values[i]) {
      v = *values[i];
    } else {
      v = def.from_internal(0.5 * (def.internal_lower() + def.internal_upper()));
      ++out.filled_dims;
    }
    if (def.kind == ParamKind::integer) v = round_half_away(v);
    if (v < def.lower || v > def.upper) {
      v = std::clamp(v, def.lower, def.upper);
      ++out.clamped_dims;
    }
    cfg[i] = v;
  }
  out.config = std::move(cfg);
  out.accepted = true;
  return out;
}

// Top-level {...} blocks, matched by depth.
std::vector<std::string_view> find_dicts(std::string_view t) {
  std::vector<std::string_view> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == '{') {
      if (depth == 0) start = i;
      ++depth;
    } else if (t[i] == '}' && depth > 0) {
      if (--depth == 0) out.push_back(t.substr(start, i - start + 1));
    }
  }
  return out;
}

} // namespace

ParsedConfigs parse_configurations(std::string_view text, const SearchSpace &space,
                                   const std::vector<std::string> &names,
                                   Deduplicator *dedup) {
  ParsedConfigs out;
  out.raw = std::string(text);
  try {
    std::vector<std::string_view> bodies;
    if (auto span = parse_detail::hash_span(text)) {
      bodies.push_back(*span);
    } else {
      bodies = find_dicts(text);
      if (bodies.empty()) bodies.push_back(text);
    }

    Deduplicator local(space);
    Deduplicator &seen = dedup ? *dedup : local;
    for (auto body : bodies) {
      auto item = parse_one(body, space, names);
      if (item.accepted && !seen.insert(*item.config)) {
        item.accepted = false;
        item.reject_reason = "duplicate configuration";
        item.config.reset();
      }
      if (item.accepted) out.configs.push_back(*item.config);
      out.items.push_back(std::move(item));
    }
  } catch (const std::exception &e) {
    // Parsing never propagates; anything unexpected is a rejection.
    out.configs.clear();
    out.items.clear();
    out.items.push_back({std::nullopt, out.raw, false, std::string("parse error: ") + e.what()});
  }
  out.accepted = !out.configs.empty();
  if (!out.accepted)
    out.reject_reason = out.items.empty() ? "no configuration found"
                                          : out.items.front().reject_reason.value_or("rejected");
  return out;
}

} // namespace icbo
