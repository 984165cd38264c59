#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "icbo/prompts.hpp"
#include "icbo/rng.hpp"

namespace icbo {

/// Environment variable holding the HTTP backend credential.
inline constexpr const char *kApiKeyEnv = "OPENAI_API_KEY";

struct CompletionRequest {
  PromptBundle prompt;
  double temperature = 0.7;
  double top_p = 0.95;
  std::size_t n_completions = 1;
  std::optional<std::uint64_t> seed;  // consumed by the mock only
  std::size_t index = 0;              // position within a batch

  void validate() const;
};

struct CompletionResponse {
  std::vector<std::string> texts;
  std::string backend_id;
  double latency_ms = 0.0;
};

/// Hex SHA-256 over the role/content messages.
std::string prompt_digest(const PromptBundle &prompt);
std::string sha256_hex(std::string_view data);

class Backend {
public:
  virtual ~Backend() = default;
  virtual CompletionResponse complete(const CompletionRequest &req) = 0;
  virtual std::string id() const = 0;
};

/// Deterministic backend. Scripted responses are looked up by prompt digest;
/// everything else goes to the procedural responder with a generator seeded
/// from (backend seed, request seed, digest, completion index).
class MockBackend : public Backend {
public:
  using Responder =
      std::function<std::string(const CompletionRequest &, std::size_t completion, Rng &)>;

  explicit MockBackend(std::uint64_t seed = 0, Responder fallback = {});

  /// Fixture: {"responses": {"<digest>": "text" | ["text", ..]}}.
  static std::shared_ptr<MockBackend> from_fixture(const std::filesystem::path &path,
                                                   std::uint64_t seed,
                                                   Responder fallback = {});

  void script(const std::string &digest, std::vector<std::string> texts);
  CompletionResponse complete(const CompletionRequest &req) override;
  std::string id() const override { return "mock"; }
  std::size_t calls() const;

private:
  std::uint64_t seed_;
  Responder fallback_;
  std::map<std::string, std::vector<std::string>> table_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

struct HttpConfig {
  std::string endpoint_url;  // full chat-completions URL
  std::string model = "gpt-3.5-turbo-0301";
  std::string api_key;
  double timeout_s = 60.0;
  int max_attempts = 5;
  std::chrono::milliseconds base_backoff{1000};
};

/// OpenAI-compatible chat-completions transport with exponential backoff on
/// connection failures, 429 and 5xx.
class HttpBackend : public Backend {
public:
  explicit HttpBackend(HttpConfig config);
  CompletionResponse complete(const CompletionRequest &req) override;
  std::string id() const override { return "http:" + config_.model; }
  int last_attempts() const noexcept { return last_attempts_; }

  /// When set, any attempt to open a connection aborts the request with a
  /// TransportError. Used to prove mock runs are hermetic.
  static void forbid_network(bool forbidden);
  static bool network_forbidden();

private:
  HttpConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::atomic<int> last_attempts_{0};
};

/// Request body and response decoding, exposed for tests.
nlohmann::json chat_request_body(const CompletionRequest &req, const std::string &model);
std::vector<std::string> decode_chat_response(const std::string &body,
                                              std::size_t expected,
                                              const std::string &digest);

/// Result slot for one request of a batch.
struct BatchItem {
  std::optional<CompletionResponse> response;
  std::exception_ptr error;
};

/// Fans requests out to a backend with bounded parallelism. Results come
/// back indexed like the input, so scheduling never affects aggregation.
class LlmClient {
public:
  explicit LlmClient(std::shared_ptr<Backend> backend, std::size_t parallelism = 4);

  CompletionResponse complete(const CompletionRequest &req);
  std::vector<BatchItem> complete_all(const std::vector<CompletionRequest> &reqs);
  /// Like complete_all but rethrows the lowest-index failure.
  std::vector<CompletionResponse> complete_all_or_throw(const std::vector<CompletionRequest> &reqs);

  std::size_t parallelism() const noexcept { return parallelism_; }
  Backend &backend() noexcept { return *backend_; }
  double temperature = 0.7;
  double top_p = 0.95;

private:
  std::shared_ptr<Backend> backend_;
  std::size_t parallelism_;
};

} // namespace icbo
