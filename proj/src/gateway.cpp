#include "crosscheck/gateway.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>

#include "crosscheck/errors.hpp"
#include "crosscheck/text_util.hpp"

namespace crosscheck {
namespace {

using nlohmann::json;

constexpr const char* kNextKey = "next";
constexpr const char* kAnyKey = "*";

[[noreturn]] void throw_scripted_error(const std::string& code, const std::string& model_id) {
  const std::string where = " (model " + model_id + ")";
  if (code == "rate_limit") throw RateLimitedError("scripted rate limit" + where);
  if (code == "timeout") throw TimeoutError("scripted timeout" + where);
  if (code == "connection") throw ConnectionError("scripted connection failure" + where);
  if (code == "auth") throw AuthFailureError("scripted auth failure" + where);
  if (code == "malformed") throw MalformedBackendReplyError("scripted malformed reply" + where);
  throw MalformedBackendReplyError("scenario uses unknown error code '" + code + "'" + where);
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt) {
  double delay = static_cast<double>(policy.base_delay.count());
  for (int i = 1; i < attempt; ++i) delay *= 2.0;
  delay = std::min(delay, static_cast<double>(policy.max_delay.count()));
  if (policy.jitter && delay > 0.0) {
    thread_local std::mt19937_64 gen(
        static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()) ^
        std::hash<std::thread::id>{}(std::this_thread::get_id()));
    // [0.5, 1.0) of the nominal delay; affects timing only, never outputs.
    double frac = 0.5 + 0.5 * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
    delay *= frac;
  }
  return std::chrono::milliseconds(static_cast<std::int64_t>(delay));
}

struct ParsedEndpoint {
  std::string scheme_host_port;
  std::string path;
};

ParsedEndpoint parse_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint is not a URL: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, "/"};
  }
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

// --- ScriptedScenario ---

ScriptedScenario ScriptedScenario::from_json(const json& doc) {
  if (!doc.is_object()) {
    throw ConfigError("scenario document must be an object of model_id -> entry list");
  }
  ScriptedScenario scenario;
  for (const auto& [model_id, entries] : doc.items()) {
    if (!entries.is_array()) {
      throw ConfigError("scenario entries for '" + model_id + "' must be an array");
    }
    for (const auto& item : entries) {
      ScenarioEntry entry;
      entry.match = item.value("match", std::string(kAnyKey));
      entry.reply = item.value("reply", std::string());
      entry.error = item.value("error", std::string());
      scenario.add(model_id, std::move(entry));
    }
  }
  return scenario;
}

ScriptedScenario ScriptedScenario::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& ex) {
    throw ConfigError("scenario file " + path + " is not valid JSON: " + ex.what());
  }
  return from_json(doc);
}

void ScriptedScenario::add(const std::string& model_id, ScenarioEntry entry) {
  std::lock_guard<std::mutex> lock(*mutex_);
  auto& table = models_[model_id];
  table.entries.push_back(std::move(entry));
  table.consumed.push_back(false);
}

std::optional<ScenarioEntry> ScriptedScenario::take(PerModel& table, const std::string& match_key) {
  std::size_t hit = table.entries.size();
  std::size_t later = table.entries.size();
  for (std::size_t i = 0; i < table.entries.size(); ++i) {
    if (table.consumed[i] || table.entries[i].match != match_key) continue;
    if (hit == table.entries.size()) {
      hit = i;
    } else {
      later = i;
      break;
    }
  }
  if (hit == table.entries.size()) return std::nullopt;
  // Consume only when a later entry with the same key exists; the final entry
  // stays sticky so replaying a request stream is well defined.
  if (later != table.entries.size()) table.consumed[hit] = true;
  return table.entries[hit];
}

std::optional<ScenarioEntry> ScriptedScenario::next_reply(const std::string& model_id,
                                                          const std::string& prompt) {
  std::lock_guard<std::mutex> lock(*mutex_);
  auto it = models_.find(model_id);
  if (it == models_.end()) return std::nullopt;
  if (auto exact = take(it->second, prompt)) return exact;
  if (auto queued = take(it->second, kNextKey)) return queued;
  return take(it->second, kAnyKey);
}

// --- MockBackend ---

MockBackend::MockBackend(std::shared_ptr<ScriptedScenario> scenario)
    : scenario_(std::move(scenario)) {}

ChatResponse MockBackend::complete(const ModelSpec& spec, const ChatRequest& request) {
  auto entry = scenario_->next_reply(spec.model_id, request.prompt_text);
  if (!entry) {
    throw MalformedBackendReplyError("no scripted reply for model " + spec.model_id);
  }
  if (!entry->error.empty()) throw_scripted_error(entry->error, spec.model_id);
  ChatResponse response;
  response.text = entry->reply;
  response.input_tokens = word_count(request.prompt_text);
  response.output_tokens = word_count(entry->reply);
  response.latency_ms = 0;
  return response;
}

// --- HttpBackend ---

HttpBackend::HttpBackend(std::chrono::milliseconds request_timeout)
    : request_timeout_(request_timeout) {}

ChatResponse HttpBackend::complete(const ModelSpec& spec, const ChatRequest& request) {
  ParsedEndpoint endpoint = parse_endpoint(spec.endpoint);
  httplib::Client client(endpoint.scheme_host_port);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(request_timeout_));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(request_timeout_));

  httplib::Headers headers;
  if (!spec.api_key_env.empty()) {
    const char* key = std::getenv(spec.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw AuthFailureError("environment variable " + spec.api_key_env + " is not set (model " +
                             spec.model_id + ")");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  json body = {
      {"model", spec.model_id},
      {"messages", json::array({{{"role", "user"}, {"content", request.prompt_text}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
  };

  auto start = std::chrono::steady_clock::now();
  httplib::Result result = client.Post(endpoint.path, headers, body.dump(), "application/json");
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);

  if (!result) {
    if (result.error() == httplib::Error::ConnectionTimeout ||
        result.error() == httplib::Error::Read || result.error() == httplib::Error::Write) {
      throw TimeoutError("request to " + spec.endpoint + " timed out");
    }
    throw ConnectionError("request to " + spec.endpoint + " failed: " +
                          httplib::to_string(result.error()));
  }

  int status = result->status;
  if (status == 401 || status == 403) {
    throw AuthFailureError("backend rejected credentials (HTTP " + std::to_string(status) + ")");
  }
  if (status == 408) throw TimeoutError("backend timeout (HTTP 408)");
  if (status == 429) throw RateLimitedError("backend rate limit (HTTP 429)");
  if (status >= 500) throw ConnectionError("backend error (HTTP " + std::to_string(status) + ")");
  if (status < 200 || status >= 300) {
    throw MalformedBackendReplyError("unexpected HTTP status " + std::to_string(status));
  }

  json payload;
  try {
    payload = json::parse(result->body);
  } catch (const json::exception& ex) {
    throw MalformedBackendReplyError(std::string("backend reply is not JSON: ") + ex.what());
  }

  ChatResponse response;
  try {
    const auto& choices = payload.at("choices");
    if (!choices.is_array() || choices.empty()) {
      throw MalformedBackendReplyError("backend reply has no choices");
    }
    response.text = choices.at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw MalformedBackendReplyError("backend reply missing choices[0].message.content");
  }
  if (payload.contains("usage") && payload["usage"].is_object()) {
    response.input_tokens = payload["usage"].value("prompt_tokens", 0);
    response.output_tokens = payload["usage"].value("completion_tokens", 0);
  }
  response.latency_ms = elapsed.count();
  return response;
}

// --- ModelRegistry ---

void ModelRegistry::Semaphore::acquire() {
  std::unique_lock<std::mutex> lock(mutex);
  cv.wait(lock, [this] { return available > 0; });
  --available;
}

void ModelRegistry::Semaphore::release() {
  {
    std::lock_guard<std::mutex> lock(mutex);
    ++available;
  }
  cv.notify_one();
}

ModelRegistry::ModelRegistry(RetryPolicy retry, int per_backend_in_flight)
    : retry_(retry), per_backend_in_flight_(per_backend_in_flight) {
  if (retry_.max_attempts < 1) throw ConfigError("retry max_attempts must be >= 1");
}

void ModelRegistry::attach_scenario(std::shared_ptr<ScriptedScenario> scenario, bool force_mock) {
  scenario_ = std::move(scenario);
  mock_backend_ = std::make_shared<MockBackend>(scenario_);
  force_mock_ = force_mock;
}

void ModelRegistry::register_backend(ModelSpec spec) {
  std::shared_ptr<ChatBackend> backend;
  if (force_mock_ || spec.endpoint == "mock") {
    if (!mock_backend_) {
      throw ConfigError("model " + spec.model_id +
                        " uses the mock endpoint but no scenario is attached");
    }
    backend = mock_backend_;
  } else {
    backend = std::make_shared<HttpBackend>();
  }
  register_backend(std::move(spec), std::move(backend));
}

void ModelRegistry::register_backend(ModelSpec spec, std::shared_ptr<ChatBackend> backend) {
  if (spec.model_id.empty()) throw ConfigError("model_id must be non-empty");
  if (spec.max_output_tokens < 1) throw ConfigError("max_output_tokens must be >= 1");
  if (entries_.count(spec.model_id) > 0) {
    throw DuplicateModelIdError("model already registered: " + spec.model_id);
  }
  Entry entry;
  entry.spec = spec;
  entry.backend = std::move(backend);
  if (per_backend_in_flight_ > 0) {
    entry.in_flight = std::make_unique<Semaphore>(per_backend_in_flight_);
  }
  order_.push_back(spec.model_id);
  entries_.emplace(spec.model_id, std::move(entry));
}

bool ModelRegistry::has_model(const std::string& model_id) const {
  return entries_.count(model_id) > 0;
}

const ModelSpec& ModelRegistry::spec(const std::string& model_id) const {
  return entry_for(model_id).spec;
}

std::vector<std::string> ModelRegistry::model_ids() const { return order_; }

const ModelRegistry::Entry& ModelRegistry::entry_for(const std::string& model_id) const {
  auto it = entries_.find(model_id);
  if (it == entries_.end()) throw UnknownModelError("unknown model: " + model_id);
  return it->second;
}

ChatResponse ModelRegistry::complete(const ChatRequest& request) const {
  if (request.prompt_text.empty()) throw Error("prompt_text must be non-empty");
  const Entry& entry = entry_for(request.model_id);

  std::string last_failure;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    try {
      if (entry.in_flight) entry.in_flight->acquire();
      ChatResponse response;
      try {
        response = entry.backend->complete(entry.spec, request);
      } catch (...) {
        if (entry.in_flight) entry.in_flight->release();
        throw;
      }
      if (entry.in_flight) entry.in_flight->release();
      response.attempt_count = attempt;
      {
        std::lock_guard<std::mutex> lock(*usage_mutex_);
        ++usage_.requests;
        usage_.input_tokens += response.input_tokens;
        usage_.output_tokens += response.output_tokens;
      }
      return response;
    } catch (const TransientError& ex) {
      last_failure = ex.what();
      if (attempt == retry_.max_attempts) break;
      std::this_thread::sleep_for(backoff_delay(retry_, attempt));
    }
  }
  {
    std::lock_guard<std::mutex> lock(*usage_mutex_);
    ++usage_.failures;
  }
  throw TransientExhaustedError(
      "gave up after " + std::to_string(retry_.max_attempts) + " attempts: " + last_failure,
      retry_.max_attempts);
}

UsageTotals ModelRegistry::usage() const {
  std::lock_guard<std::mutex> lock(*usage_mutex_);
  return usage_;
}

void ModelRegistry::reset_usage() {
  std::lock_guard<std::mutex> lock(*usage_mutex_);
  usage_ = UsageTotals{};
}

}  // namespace crosscheck
