#include <doctest.h>

#include <algorithm>
#include <map>
#include <memory>
#include <random>
#include <set>

#include "crosscheck/errors.hpp"
#include "crosscheck/sampling.hpp"

using namespace crosscheck;

namespace {

std::vector<PromptVariant> make_variants(std::size_t count) {
  std::vector<PromptVariant> variants;
  for (std::size_t i = 0; i < count; ++i) {
    PromptVariant variant;
    variant.kind = kAllVariationKinds[i % kAllVariationKinds.size()];
    variant.text = "variant prompt " + std::to_string(i);
    variants.push_back(std::move(variant));
  }
  return variants;
}

std::vector<std::string> make_models(std::size_t count) {
  std::vector<std::string> models;
  for (std::size_t i = 0; i < count; ++i) models.push_back("model-" + std::to_string(i));
  return models;
}

std::multiset<std::size_t> usage_counts(const std::vector<SamplePlanEntry>& plan, bool by_model) {
  std::map<std::size_t, std::size_t> counts;
  for (const SamplePlanEntry& entry : plan) {
    ++counts[by_model ? entry.model_index : entry.variant_index];
  }
  std::multiset<std::size_t> result;
  for (const auto& [slot, count] : counts) result.insert(count);
  return result;
}

ModelRegistry sampler_registry(std::shared_ptr<ScriptedScenario> scenario) {
  RetryPolicy policy;
  policy.max_attempts = 2;
  policy.base_delay = std::chrono::milliseconds(0);
  ModelRegistry registry(policy);
  registry.attach_scenario(std::move(scenario));
  for (const char* id : {"good", "bad"}) {
    ModelSpec spec;
    spec.model_id = id;
    spec.endpoint = "mock";
    registry.register_backend(spec);
  }
  return registry;
}

std::vector<SamplePlanEntry> plan_for_models(const std::vector<std::string>& model_ids,
                                             const std::vector<PromptVariant>& variants) {
  std::vector<SamplePlanEntry> plan;
  for (std::size_t i = 0; i < model_ids.size(); ++i) {
    SamplePlanEntry entry;
    entry.index = i;
    entry.variant_index = i % variants.size();
    entry.variant_kind = variants[entry.variant_index].kind;
    entry.model_index = 0;
    entry.model_id = model_ids[i];
    plan.push_back(std::move(entry));
  }
  return plan;
}

}  // namespace

TEST_CASE("the modular rule picks slot (i mod V, i mod M)") {
  auto slots = round_robin_slots(10, 7, 4);
  REQUIRE(slots.size() == 10);
  CHECK(slots[8].first == 1);   // 8 mod 7
  CHECK(slots[8].second == 0);  // 8 mod 4
  CHECK(slots[0] == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK(slots[9] == std::pair<std::size_t, std::size_t>{2, 1});
}

TEST_CASE("ten samples over four models use them {3,3,2,2} times") {
  auto plan = build_plan(10, make_variants(7), make_models(4), 1234);
  REQUIRE(plan.size() == 10);
  std::multiset<std::size_t> expected = {3, 3, 2, 2};
  CHECK(usage_counts(plan, true) == expected);
}

TEST_CASE("plans are deterministic per seed and usage multisets are seed-independent") {
  auto variants = make_variants(7);
  auto models = make_models(4);
  auto plan_a = build_plan(10, variants, models, 42);
  auto plan_b = build_plan(10, variants, models, 42);
  REQUIRE(plan_a.size() == plan_b.size());
  for (std::size_t i = 0; i < plan_a.size(); ++i) {
    CHECK(plan_a[i].variant_index == plan_b[i].variant_index);
    CHECK(plan_a[i].model_id == plan_b[i].model_id);
  }
  auto plan_c = build_plan(10, variants, models, 43);
  CHECK(usage_counts(plan_a, true) == usage_counts(plan_c, true));
  CHECK(usage_counts(plan_a, false) == usage_counts(plan_c, false));
}

TEST_CASE("fair coverage: per-model and per-variant counts differ by at most one") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t n = 1 + gen() % 50;
    std::size_t v = 1 + gen() % 10;
    std::size_t m = 1 + gen() % 8;
    auto plan = build_plan(n, make_variants(v), make_models(m), gen());
    for (bool by_model : {false, true}) {
      auto counts = usage_counts(plan, by_model);
      CHECK(*counts.rbegin() - *counts.begin() <= 1);
    }
  }
}

TEST_CASE("empty inputs are rejected") {
  CHECK_THROWS_AS(build_plan(5, {}, make_models(2), 1), EmptyVariantListError);
  CHECK_THROWS_AS(build_plan(5, make_variants(2), {}, 1), EmptyModelListError);
}

TEST_CASE("generate_samples returns index-ordered Ok samples under the mock") {
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("good", {"*", "a generated sample", ""});
  auto registry = sampler_registry(scenario);
  auto variants = make_variants(3);
  auto plan = plan_for_models(std::vector<std::string>(10, "good"), variants);

  SamplingConfig config;
  auto samples = generate_samples(plan, variants, registry, config, nullptr);
  REQUIRE(samples.size() == 10);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(samples[i].index == i);
    CHECK(samples[i].status == SampleStatus::Ok);
    CHECK(samples[i].text == "a generated sample");
  }
}

TEST_CASE("failed samples are tolerated above the min_ok floor") {
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("good", {"*", "fine", ""});
  scenario->add("bad", {"*", "", "connection"});
  auto registry = sampler_registry(scenario);
  auto variants = make_variants(3);

  std::vector<std::string> models(10, "good");
  models[2] = "bad";
  models[7] = "bad";
  auto plan = plan_for_models(models, variants);

  SamplingConfig config;
  config.min_ok = 5;
  auto samples = generate_samples(plan, variants, registry, config, nullptr);
  std::size_t ok = 0;
  for (const Sample& sample : samples) {
    if (sample.status == SampleStatus::Ok) ++ok;
  }
  CHECK(ok == 8);
  CHECK(samples[2].status == SampleStatus::Failed);
  CHECK(samples[7].status == SampleStatus::Failed);
}

TEST_CASE("too many failures raise InsufficientSamples") {
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("good", {"*", "fine", ""});
  scenario->add("bad", {"*", "", "timeout"});
  auto registry = sampler_registry(scenario);
  auto variants = make_variants(3);

  std::vector<std::string> models(10, "bad");
  models[0] = "good";
  models[1] = "good";
  models[2] = "good";
  auto plan = plan_for_models(models, variants);

  SamplingConfig config;
  config.min_ok = 5;
  CHECK_THROWS_AS(generate_samples(plan, variants, registry, config, nullptr),
                  InsufficientSamplesError);
}

TEST_CASE("samples carry the variant prompt and temperature 1.0") {
  class Probe : public ChatBackend {
   public:
    ChatResponse complete(const ModelSpec&, const ChatRequest& request) override {
      CHECK(request.temperature == 1.0);
      ChatResponse response;
      response.text = "echo: " + request.prompt_text;
      return response;
    }
  };
  ModelRegistry registry;
  ModelSpec spec;
  spec.model_id = "probe";
  spec.endpoint = "custom";
  registry.register_backend(spec, std::make_shared<Probe>());

  auto variants = make_variants(2);
  auto plan = plan_for_models({"probe", "probe"}, variants);
  SamplingConfig config;
  config.min_ok = 1;
  auto samples = generate_samples(plan, variants, registry, config, nullptr);
  CHECK(samples[0].text == "echo: variant prompt 0");
  CHECK(samples[1].text == "echo: variant prompt 1");
  CHECK(samples[1].variant.text == "variant prompt 1");
}
