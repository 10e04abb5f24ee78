#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace crosscheck {

struct ModelSpec {
  std::string model_id;
  std::string endpoint;  // HTTP(S) URL, or "mock" for the scripted backend
  double default_temperature = 1.0;
  int max_output_tokens = 4096;
  std::string api_key_env;  // empty = no auth header
};

struct ChatRequest {
  std::string model_id;
  std::string prompt_text;
  double temperature = 1.0;
  int max_tokens = 4096;
  std::optional<std::uint64_t> seed;  // honored only by the mock backend
};

struct ChatResponse {
  std::string text;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t latency_ms = 0;
  int attempt_count = 1;
};

// One scripted reply. `match` is either an exact prompt text, "next" (per-model
// FIFO), or "*" (catch-all default). `error` injects a failure instead of a
// reply: rate_limit | timeout | connection | auth | malformed.
struct ScenarioEntry {
  std::string match;
  std::string reply;
  std::string error;
};

// Deterministic reply table for the mock backend. Lookup precedence: exact
// prompt match, then "next" FIFO, then "*". Entries sharing a key are consumed
// in order and the last one is sticky, so retry scripts ("two errors then
// success") and replayed prompts both behave deterministically.
class ScriptedScenario {
 public:
  ScriptedScenario() = default;

  static ScriptedScenario from_json(const nlohmann::json& doc);
  static ScriptedScenario from_file(const std::string& path);

  void add(const std::string& model_id, ScenarioEntry entry);

  // Returns the scripted entry for this request, or nullopt when nothing in
  // the scenario covers it.
  std::optional<ScenarioEntry> next_reply(const std::string& model_id, const std::string& prompt);

 private:
  struct PerModel {
    std::vector<ScenarioEntry> entries;
    std::vector<bool> consumed;
  };

  std::optional<ScenarioEntry> take(PerModel& table, const std::string& match_key);

  std::map<std::string, PerModel> models_;
  std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  // Performs one attempt. Throws TransientError subclasses for retryable
  // failures, AuthFailureError / MalformedBackendReplyError otherwise.
  virtual ChatResponse complete(const ModelSpec& spec, const ChatRequest& request) = 0;
};

// Scripted backend. latency_ms is always 0 and token counts are whitespace
// word counts so every field is reproducible.
class MockBackend : public ChatBackend {
 public:
  explicit MockBackend(std::shared_ptr<ScriptedScenario> scenario);

  ChatResponse complete(const ModelSpec& spec, const ChatRequest& request) override;

 private:
  std::shared_ptr<ScriptedScenario> scenario_;
};

// Chat-completion-style JSON POST against spec.endpoint.
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(std::chrono::milliseconds request_timeout = std::chrono::milliseconds(60'000));

  ChatResponse complete(const ModelSpec& spec, const ChatRequest& request) override;

 private:
  std::chrono::milliseconds request_timeout_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{10'000};
  bool jitter = true;
};

struct UsageTotals {
  std::int64_t requests = 0;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t failures = 0;
};

// Routes requests to registered backends, retrying transient failures with
// exponential backoff. Registration must finish before complete() is called
// concurrently; after that the routing table is read-only and shareable.
class ModelRegistry {
 public:
  explicit ModelRegistry(RetryPolicy retry = {}, int per_backend_in_flight = 0);

  // Routes by spec.endpoint: "mock" requires a scenario attached beforehand.
  void register_backend(ModelSpec spec);
  void register_backend(ModelSpec spec, std::shared_ptr<ChatBackend> backend);

  // Scenario used by subsequently registered "mock" endpoints. When
  // force_mock is set, every later registration routes to the mock backend
  // regardless of its endpoint.
  void attach_scenario(std::shared_ptr<ScriptedScenario> scenario, bool force_mock = false);

  ChatResponse complete(const ChatRequest& request) const;

  bool has_model(const std::string& model_id) const;
  const ModelSpec& spec(const std::string& model_id) const;
  std::vector<std::string> model_ids() const;  // registration order
  std::size_t size() const { return order_.size(); }

  const RetryPolicy& retry_policy() const { return retry_; }
  UsageTotals usage() const;
  void reset_usage();

 private:
  struct Semaphore {
    explicit Semaphore(int limit) : available(limit) {}
    void acquire();
    void release();
    std::mutex mutex;
    std::condition_variable cv;
    int available;
  };

  struct Entry {
    ModelSpec spec;
    std::shared_ptr<ChatBackend> backend;
    std::unique_ptr<Semaphore> in_flight;  // null = unlimited
  };

  const Entry& entry_for(const std::string& model_id) const;

  RetryPolicy retry_;
  int per_backend_in_flight_;
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
  std::shared_ptr<ScriptedScenario> scenario_;
  std::shared_ptr<ChatBackend> mock_backend_;
  bool force_mock_ = false;

  std::unique_ptr<std::mutex> usage_mutex_ = std::make_unique<std::mutex>();
  mutable UsageTotals usage_;
};

}  // namespace crosscheck
