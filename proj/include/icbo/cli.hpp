#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "icbo/bench.hpp"

namespace icbo::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidInput = 2,
  kTransportFailure = 3,
};

enum class BackendKind { mock, http };

/// Operator settings. Never holds the credential: the HTTP backend reads it
/// from the environment only.
struct CliConfig {
  BackendKind backend = BackendKind::mock;
  std::string endpoint_url;
  std::string model_name = "gpt-3.5-turbo-0301";
  double temperature = 0.7;
  double top_p = 0.95;
  std::size_t parallelism = 4;
  std::filesystem::path output_dir = "runs";
  double timeout_s = 60.0;
  int max_attempts = 5;
  std::optional<std::filesystem::path> mock_fixture;

  static CliConfig from_json(const nlohmann::json &doc, const std::filesystem::path &base = {});
  static CliConfig load(const std::filesystem::path &path);
  void validate() const;
};

struct RunOverrides {
  std::optional<std::string> backend;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
};

/// Builds the backend a config asks for. Throws ValidationError when the
/// HTTP backend lacks an endpoint or the credential variable is unset.
std::shared_ptr<Backend> make_backend(const CliConfig &config, const SearchSpace &space,
                                      std::uint64_t seed);

int cmd_run(const std::filesystem::path &spec_path,
            const std::optional<std::filesystem::path> &config_path, const RunOverrides &overrides,
            std::ostream &out, std::ostream &err);

/// CSV rows (task, method, seed, trial, normalized_regret) for every log
/// matched by `pattern`, followed by per-trial means across seeds with the
/// seed column set to "mean".
int cmd_report(const std::string &pattern, std::ostream &out, std::ostream &err);

int cmd_validate(const std::optional<std::filesystem::path> &spec_path,
                 const std::optional<std::filesystem::path> &config_path, std::ostream &out,
                 std::ostream &err);

int cmd_golden_regen(const std::filesystem::path &out_dir, std::ostream &out, std::ostream &err);

/// Entry point shared by the executable and tests.
int main(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace icbo::cli
