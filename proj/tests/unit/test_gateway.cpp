#include <doctest.h>

#include <memory>
#include <thread>
#include <vector>

#include "crosscheck/errors.hpp"
#include "crosscheck/gateway.hpp"
#include "crosscheck/worker_pool.hpp"
#include "../support/test_support.hpp"

using namespace crosscheck;

namespace {

RetryPolicy fast_retry(int attempts = 3) {
  RetryPolicy policy;
  policy.max_attempts = attempts;
  policy.base_delay = std::chrono::milliseconds(0);
  policy.jitter = false;
  return policy;
}

ModelRegistry mock_registry(std::shared_ptr<ScriptedScenario> scenario,
                            const std::vector<std::string>& model_ids, int attempts = 3) {
  ModelRegistry registry(fast_retry(attempts));
  registry.attach_scenario(std::move(scenario));
  for (const std::string& id : model_ids) {
    ModelSpec spec;
    spec.model_id = id;
    spec.endpoint = "mock";
    registry.register_backend(spec);
  }
  return registry;
}

ChatRequest request_for(const std::string& model, const std::string& prompt) {
  ChatRequest request;
  request.model_id = model;
  request.prompt_text = prompt;
  return request;
}

// Captures the exact prompt delivered to the backend.
class RecordingBackend : public ChatBackend {
 public:
  ChatResponse complete(const ModelSpec&, const ChatRequest& request) override {
    prompts.push_back(request.prompt_text);
    temperatures.push_back(request.temperature);
    ChatResponse response;
    response.text = "recorded";
    return response;
  }
  std::vector<std::string> prompts;
  std::vector<double> temperatures;
};

}  // namespace

TEST_CASE("scripted lookup returns the mapped reply") {
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("m1", {"hello", "world", ""});
  auto registry = mock_registry(scenario, {"m1"});

  ChatResponse response = registry.complete(request_for("m1", "hello"));
  CHECK(response.text == "world");
  CHECK(response.attempt_count == 1);
  CHECK(response.latency_ms == 0);
}

TEST_CASE("two injected rate limits then success consumes three attempts") {
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("m1", {"hello", "", "rate_limit"});
  scenario->add("m1", {"hello", "", "rate_limit"});
  scenario->add("m1", {"hello", "world", ""});
  auto registry = mock_registry(scenario, {"m1"}, 3);

  ChatResponse response = registry.complete(request_for("m1", "hello"));
  CHECK(response.text == "world");
  CHECK(response.attempt_count == 3);
}

TEST_CASE("unregistered model raises UnknownModel") {
  auto scenario = std::make_shared<ScriptedScenario>();
  auto registry = mock_registry(scenario, {"m1"});
  CHECK_THROWS_AS(registry.complete(request_for("zz", "hello")), UnknownModelError);
}

TEST_CASE("duplicate registration raises DuplicateModelId") {
  auto scenario = std::make_shared<ScriptedScenario>();
  auto registry = mock_registry(scenario, {"m1"});
  ModelSpec spec;
  spec.model_id = "m1";
  spec.endpoint = "mock";
  CHECK_THROWS_AS(registry.register_backend(spec), DuplicateModelIdError);
}

TEST_CASE("transient failures past the cap raise TransientExhausted") {
  auto scenario = std::make_shared<ScriptedScenario>();
  for (int i = 0; i < 3; ++i) scenario->add("m1", {"q", "", "timeout"});
  scenario->add("m1", {"q", "late", ""});
  auto registry = mock_registry(scenario, {"m1"}, 3);

  CHECK_THROWS_AS(registry.complete(request_for("m1", "q")), TransientExhaustedError);
  // the queued success entry is still there for the next call
  CHECK(registry.complete(request_for("m1", "q")).text == "late");
}

TEST_CASE("auth failures are not retried") {
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("m1", {"q", "", "auth"});
  scenario->add("m1", {"q", "should not be reached by retries", ""});
  auto registry = mock_registry(scenario, {"m1"}, 3);

  CHECK_THROWS_AS(registry.complete(request_for("m1", "q")), AuthFailureError);
  // had the auth failure been retried, the second entry would be consumed
  CHECK(registry.complete(request_for("m1", "q")).text == "should not be reached by retries");
}

TEST_CASE("requests with no scripted coverage raise MalformedBackendReply") {
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("m1", {"other", "x", ""});
  auto registry = mock_registry(scenario, {"m1"}, 1);
  CHECK_THROWS_AS(registry.complete(request_for("m1", "q")), MalformedBackendReplyError);
}

TEST_CASE("lookup precedence: exact match, then next queue, then catch-all") {
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("m1", {"*", "default", ""});
  scenario->add("m1", {"next", "queued-1", ""});
  scenario->add("m1", {"next", "queued-2", ""});
  scenario->add("m1", {"specific", "exact", ""});
  auto registry = mock_registry(scenario, {"m1"});

  CHECK(registry.complete(request_for("m1", "specific")).text == "exact");
  CHECK(registry.complete(request_for("m1", "anything")).text == "queued-1");
  CHECK(registry.complete(request_for("m1", "anything")).text == "queued-2");
  // final queued entry is sticky
  CHECK(registry.complete(request_for("m1", "anything")).text == "queued-2");
  CHECK(registry.complete(request_for("m1", "specific")).text == "exact");
}

TEST_CASE("mock responses are deterministic across runs and concurrency levels") {
  auto build = [] {
    auto scenario = std::make_shared<ScriptedScenario>();
    for (int i = 0; i < 8; ++i) {
      scenario->add("m1", {"p" + std::to_string(i), "reply-" + std::to_string(i), ""});
    }
    return scenario;
  };

  auto run_stream = [&](int workers) {
    auto registry = mock_registry(build(), {"m1"});
    std::vector<std::string> replies(64);
    WorkerPool pool(workers);
    parallel_for(&pool, replies.size(), [&](std::size_t i) {
      replies[i] = registry.complete(request_for("m1", "p" + std::to_string(i % 8))).text;
    });
    return replies;
  };

  auto serial = run_stream(1);
  CHECK(serial == run_stream(1));
  CHECK(serial == run_stream(4));
  CHECK(serial == run_stream(16));
}

TEST_CASE("prompt text reaches the backend byte for byte") {
  ModelRegistry registry(fast_retry());
  auto backend = std::make_shared<RecordingBackend>();
  ModelSpec spec;
  spec.model_id = "rec";
  spec.endpoint = "custom";
  registry.register_backend(spec, backend);

  const std::string prompt = "line one\n  line two\twith bytes \xE2\x82\xAC and \"quotes\"";
  registry.complete(request_for("rec", prompt));
  REQUIRE(backend->prompts.size() == 1);
  CHECK(backend->prompts[0] == prompt);
}

TEST_CASE("usage accounting sums mock token estimates") {
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("m1", {"*", "three word reply", ""});
  auto registry = mock_registry(scenario, {"m1"});
  registry.complete(request_for("m1", "two words"));
  registry.complete(request_for("m1", "two words"));
  UsageTotals usage = registry.usage();
  CHECK(usage.requests == 2);
  CHECK(usage.input_tokens == 4);
  CHECK(usage.output_tokens == 6);
  CHECK(usage.failures == 0);
}

TEST_CASE("scenario files parse the documented schema") {
  test_support::TempDir dir("scenario");
  test_support::write_file(dir.file("s.json"), R"({
    "m1": [
      {"match": "hello", "reply": "world"},
      {"match": "next", "reply": "queued"},
      {"match": "boom", "error": "rate_limit"}
    ]
  })");
  ScriptedScenario scenario = ScriptedScenario::from_file(dir.file("s.json"));
  auto entry = scenario.next_reply("m1", "hello");
  REQUIRE(entry.has_value());
  CHECK(entry->reply == "world");
  auto queued = scenario.next_reply("m1", "something else");
  REQUIRE(queued.has_value());
  CHECK(queued->reply == "queued");
  auto boom = scenario.next_reply("m1", "boom");
  REQUIRE(boom.has_value());
  CHECK(boom->error == "rate_limit");
  CHECK_FALSE(scenario.next_reply("m2", "hello").has_value());
}

TEST_CASE("per-backend in-flight limit is honored") {
  class GateBackend : public ChatBackend {
   public:
    ChatResponse complete(const ModelSpec&, const ChatRequest&) override {
      int now = ++concurrent;
      int seen = peak.load();
      while (now > seen && !peak.compare_exchange_weak(seen, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      --concurrent;
      return ChatResponse{.text = "ok"};
    }
    std::atomic<int> concurrent{0};
    std::atomic<int> peak{0};
  };

  ModelRegistry registry(fast_retry(), /*per_backend_in_flight=*/2);
  auto backend = std::make_shared<GateBackend>();
  ModelSpec spec;
  spec.model_id = "gated";
  spec.endpoint = "custom";
  registry.register_backend(spec, backend);

  WorkerPool pool(8);
  parallel_for(&pool, 16, [&](std::size_t) { registry.complete(request_for("gated", "x")); });
  CHECK(backend->peak.load() <= 2);
}
