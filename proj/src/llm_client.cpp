#include "icbo/llm_client.hpp"

#include <httplib.h>

#include <atomic>
#include <fstream>
#include <thread>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "icbo/errors.hpp"

namespace icbo {

void CompletionRequest::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0))
    throw ValidationError("temperature must lie in [0, 2]");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ValidationError("top_p must lie in (0, 1]");
  if (n_completions < 1) throw ValidationError("n_completions must be >= 1");
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string prompt_digest(const PromptBundle &prompt) {
  if (prompt.role_messages.empty()) return sha256_hex("user\n" + prompt.text);
  std::string buf;
  for (std::size_t i = 0; i < prompt.role_messages.size(); ++i) {
    if (i) buf += '\x1e';
    buf += prompt.role_messages[i].role + "\n" + prompt.role_messages[i].content;
  }
  return sha256_hex(buf);
}

// ---- mock ----------------------------------------------------------------

MockBackend::MockBackend(std::uint64_t seed, Responder fallback)
    : seed_(seed), fallback_(std::move(fallback)) {}

std::shared_ptr<MockBackend> MockBackend::from_fixture(const std::filesystem::path &path,
                                                       std::uint64_t seed,
                                                       Responder fallback) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open mock fixture " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("mock fixture " + path.string() + ": " + e.what());
  }
  auto mock = std::make_shared<MockBackend>(seed, std::move(fallback));
  if (!doc.contains("responses") || !doc["responses"].is_object())
    throw ValidationError("mock fixture needs a \"responses\" object");
  for (const auto &[digest, v] : doc["responses"].items()) {
    std::vector<std::string> texts;
    if (v.is_string()) texts.push_back(v.get<std::string>());
    else if (v.is_array())
      for (const auto &t : v) texts.push_back(t.get<std::string>());
    else throw ValidationError("mock fixture entry " + digest + " must be text or a list");
    mock->script(digest, std::move(texts));
  }
  return mock;
}

void MockBackend::script(const std::string &digest, std::vector<std::string> texts) {
  std::lock_guard lock(mu_);
  table_[digest] = std::move(texts);
}

std::size_t MockBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

CompletionResponse MockBackend::complete(const CompletionRequest &req) {
  req.validate();
  const std::string digest = prompt_digest(req.prompt);
  std::vector<std::string> scripted;
  bool has_script = false;
  {
    std::lock_guard lock(mu_);
    ++calls_;
    if (auto it = table_.find(digest); it != table_.end() && !it->second.empty()) {
      scripted = it->second;
      has_script = true;
    }
  }
  CompletionResponse resp;
  resp.backend_id = id();
  for (std::size_t c = 0; c < req.n_completions; ++c) {
    if (has_script) {
      resp.texts.push_back(scripted[c % scripted.size()]);
    } else if (fallback_) {
      const std::uint64_t s =
          mix_seed(mix_seed(seed_, req.seed.value_or(0)), mix_seed(fnv1a64(digest), c));
      Rng rng(s);
      resp.texts.push_back(fallback_(req, c, rng));
    } else {
      throw ProtocolError("mock backend has no response for request", digest);
    }
  }
  return resp;
}

// ---- http ----------------------------------------------------------------

namespace {
std::atomic<bool> g_network_forbidden{false};
}

void HttpBackend::forbid_network(bool forbidden) { g_network_forbidden = forbidden; }
bool HttpBackend::network_forbidden() { return g_network_forbidden.load(); }

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
  const auto &url = config_.endpoint_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ValidationError("endpoint_url must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (config_.max_attempts < 1) config_.max_attempts = 1;
}

nlohmann::json chat_request_body(const CompletionRequest &req, const std::string &model) {
  nlohmann::json messages = nlohmann::json::array();
  if (req.prompt.role_messages.empty()) {
    messages.push_back({{"role", "user"}, {"content", req.prompt.text}});
  } else {
    for (const auto &m : req.prompt.role_messages)
      messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  return {{"model", model},
          {"messages", messages},
          {"temperature", req.temperature},
          {"top_p", req.top_p},
          {"n", req.n_completions}};
}

std::vector<std::string> decode_chat_response(const std::string &body, std::size_t expected,
                                              const std::string &digest) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception &e) {
    throw ProtocolError(std::string("malformed response body: ") + e.what(), digest);
  }
  if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array())
    throw ProtocolError("response lacks a choices array", digest);
  std::vector<std::string> texts;
  for (const auto &choice : doc["choices"]) {
    if (!choice.is_object() || !choice.contains("message") ||
        !choice["message"].is_object() || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string())
      throw ProtocolError("choice without message content", digest);
    texts.push_back(choice["message"]["content"].get<std::string>());
  }
  if (texts.size() != expected)
    throw ProtocolError("expected " + std::to_string(expected) + " choices, got " +
                            std::to_string(texts.size()),
                        digest);
  return texts;
}

CompletionResponse HttpBackend::complete(const CompletionRequest &req) {
  req.validate();
  const std::string digest = prompt_digest(req.prompt);
  if (network_forbidden()) throw TransportError("network access forbidden", digest);

  const std::string body = chat_request_body(req, config_.model).dump();
  httplib::Client client(scheme_host_port_);
  const auto timeout = std::chrono::duration<double>(config_.timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!config_.api_key.empty())
    headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  auto delay = config_.base_backoff;
  const auto start = std::chrono::steady_clock::now();
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    last_attempts_ = attempt;
    auto res = client.Post(path_, headers, body, "application/json");
    if (res) {
      if (res->status == 200) {
        CompletionResponse out;
        out.texts = decode_chat_response(res->body, req.n_completions, digest);
        out.backend_id = id();
        out.latency_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();
        return out;
      }
      last_error = "HTTP " + std::to_string(res->status);
      const bool transient = res->status == 429 || res->status >= 500;
      if (!transient) throw TransportError("non-retryable " + last_error, digest);
    } else {
      last_error = "connection failure: " + httplib::to_string(res.error());
    }
    if (attempt < config_.max_attempts) {
      spdlog::warn("completion attempt {} failed ({}); retrying in {} ms", attempt,
                   last_error, delay.count());
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  throw TransportError("retries exhausted after " + std::to_string(config_.max_attempts) +
                           " attempts, last error " + last_error,
                       digest);
}

// ---- client --------------------------------------------------------------

LlmClient::LlmClient(std::shared_ptr<Backend> backend, std::size_t parallelism)
    : backend_(std::move(backend)), parallelism_(parallelism == 0 ? 1 : parallelism) {
  if (!backend_) throw PreconditionError("LlmClient needs a backend");
}

CompletionResponse LlmClient::complete(const CompletionRequest &req) {
  return backend_->complete(req);
}

std::vector<BatchItem> LlmClient::complete_all(const std::vector<CompletionRequest> &reqs) {
  std::vector<BatchItem> out(reqs.size());
  auto run_one = [&](std::size_t i) {
    try {
      out[i].response = backend_->complete(reqs[i]);
    } catch (...) {
      out[i].error = std::current_exception();
    }
  };
  const std::size_t workers = std::min(parallelism_, reqs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < reqs.size(); ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < reqs.size(); i = next++) run_one(i);
    });
  }
  for (auto &t : pool) t.join();
  return out;
}

std::vector<CompletionResponse>
LlmClient::complete_all_or_throw(const std::vector<CompletionRequest> &reqs) {
  auto items = complete_all(reqs);
  std::vector<CompletionResponse> out;
  out.reserve(items.size());
  for (auto &item : items) {
    if (item.error) std::rethrow_exception(item.error);
    out.push_back(std::move(*item.response));
  }
  return out;
}

} // namespace icbo
