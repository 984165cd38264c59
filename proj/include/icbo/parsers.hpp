#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "icbo/search_space.hpp"

namespace icbo {

struct ParsedScalar {
  double value = 0.0;
  std::string raw;
  bool accepted = false;
  std::optional<std::string> reject_reason;
};

struct ParsedLabel {
  int label = 0;
  std::string raw;
  bool accepted = false;
  std::optional<std::string> reject_reason;
};

/// Outcome for one configuration found in a response.
struct ConfigOutcome {
  std::optional<Configuration> config;
  std::string raw;
  bool accepted = false;
  std::optional<std::string> reject_reason;
  std::size_t clamped_dims = 0;
  std::size_t filled_dims = 0;
};

struct ParsedConfigs {
  std::vector<Configuration> configs;  // accepted, in order of appearance
  std::vector<ConfigOutcome> items;    // every attempted configuration
  std::string raw;
  bool accepted = false;
  std::optional<std::string> reject_reason;

  std::size_t attempted() const noexcept { return items.size(); }
  std::size_t accepted_count() const noexcept { return configs.size(); }
  std::size_t rejected_count() const noexcept { return items.size() - configs.size(); }
};

/// Distinctness at 6 significant figures in internal space, after rounding
/// raw values to 6 significant figures.
class Deduplicator {
public:
  explicit Deduplicator(const SearchSpace &space) : space_(&space) {}

  std::string key(const Configuration &cfg) const;
  bool contains(const Configuration &cfg) const { return keys_.count(key(cfg)) > 0; }
  /// False when an equivalent configuration was already inserted.
  bool insert(const Configuration &cfg) { return keys_.insert(key(cfg)).second; }
  std::size_t size() const noexcept { return keys_.size(); }

private:
  const SearchSpace *space_;
  std::set<std::string> keys_;
};

/// First real in the "## .. ##" span, else the first standalone real.
ParsedScalar parse_performance(std::string_view text);

/// Strict: the "## .. ##" span (or the whole trimmed text) must be 0 or 1.
ParsedLabel parse_classification(std::string_view text);

/// Accepts a single "## name: value, .. ##" block or a list of dictionaries.
/// Out-of-range values are clamped, missing dimensions are filled with the
/// internal-space midpoint; both are counted on the outcome. `names` are the
/// displayed names (X_1.. under the uninformative ablation); empty means the
/// space's own names. `dedup`, when given, is shared across calls.
ParsedConfigs parse_configurations(std::string_view text, const SearchSpace &space,
                                   const std::vector<std::string> &names = {},
                                   Deduplicator *dedup = nullptr);

namespace parse_detail {
/// Standalone real numbers in order of appearance.
std::vector<double> find_numbers(std::string_view text);
/// Contents of the first "## .. ##" span, if any.
std::optional<std::string_view> hash_span(std::string_view text);
} // namespace parse_detail

} // namespace icbo
