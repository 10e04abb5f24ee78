#include <doctest.h>

#include <memory>

#include "crosscheck/errors.hpp"
#include "crosscheck/templates.hpp"
#include "crosscheck/variation.hpp"
#include "../support/test_support.hpp"

using namespace crosscheck;

namespace {

ModelRegistry reformulator_registry(std::shared_ptr<ScriptedScenario> scenario) {
  RetryPolicy policy;
  policy.max_attempts = 1;
  policy.base_delay = std::chrono::milliseconds(0);
  ModelRegistry registry(policy);
  registry.attach_scenario(std::move(scenario));
  ModelSpec spec;
  spec.model_id = "reformulator";
  spec.endpoint = "mock";
  registry.register_backend(spec);
  return registry;
}

}  // namespace

TEST_CASE("static variations produce the fixed transformations") {
  PromptVariant identity = apply_static(VariationKind::Identity, "What is X?");
  CHECK(identity.text == "What is X?");

  PromptVariant cot = apply_static(VariationKind::ZeroShotCoT, "What is X?");
  CHECK(cot.text == "What is X?\nLet's think step by step");

  PromptVariant long_answer = apply_static(VariationKind::LongAnswer, "What is X?");
  CHECK(long_answer.text ==
        "Provide an answer with at least a 1000 words to the following prompt: What is X?");
}

TEST_CASE("apply_static is pure and rejects LLM kinds") {
  CHECK(apply_static(VariationKind::ZeroShotCoT, "Q").text ==
        apply_static(VariationKind::ZeroShotCoT, "Q").text);
  CHECK_THROWS_AS(apply_static(VariationKind::Rephrase, "Q"), WrongKindError);
  CHECK_THROWS_AS(apply_llm(VariationKind::Identity, "Q", "m", reformulator_registry(nullptr),
                            PromptTemplates()),
                  WrongKindError);
}

TEST_CASE("LLM variations embed the reformulation per kind") {
  PromptTemplates templates;
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("reformulator",
                {templates.render("rephrase", {{"PROMPT", "Q"}}), "Rephrased Q", ""});
  scenario->add("reformulator",
                {templates.render("expand_before", {{"PROMPT", "Q"}}), "Ctx.", ""});
  scenario->add("reformulator",
                {templates.render("expand_after", {{"PROMPT", "Q"}}), "Clarify?", ""});
  scenario->add("reformulator",
                {templates.render("break_down", {{"PROMPT", "Q"}}), "1. Sub-q one\n2. Sub-q two", ""});
  auto registry = reformulator_registry(scenario);

  CHECK(apply_llm(VariationKind::Rephrase, "Q", "reformulator", registry, templates).text ==
        "Rephrased Q");
  // context precedes the original prompt
  CHECK(apply_llm(VariationKind::ExpandBefore, "Q", "reformulator", registry, templates).text ==
        "Ctx.\nQ");
  CHECK(apply_llm(VariationKind::ExpandAfter, "Q", "reformulator", registry, templates).text ==
        "Q\nClarify?");
  CHECK(apply_llm(VariationKind::BreakDown, "Q", "reformulator", registry, templates).text ==
        "1. Sub-q one\n2. Sub-q two");
}

TEST_CASE("blank reformulation raises EmptyReformulation") {
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("reformulator", {"*", "   \n ", ""});
  auto registry = reformulator_registry(scenario);
  CHECK_THROWS_AS(apply_llm(VariationKind::Rephrase, "Q", "reformulator", registry,
                            PromptTemplates()),
                  EmptyReformulationError);
}

TEST_CASE("variant_set yields one variant per enabled kind in declaration order") {
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("reformulator", {"*", "Some reformulation", ""});
  auto registry = reformulator_registry(scenario);

  VariationConfig config;
  config.reformulation_model_id = "reformulator";
  std::vector<PromptVariant> variants =
      variant_set("Q", config, registry, PromptTemplates(), nullptr);

  REQUIRE(variants.size() == 7);
  for (std::size_t i = 0; i < variants.size(); ++i) {
    CHECK(variants[i].kind == kAllVariationKinds[i]);
  }
}

TEST_CASE("static-only variant sets never touch the gateway") {
  auto registry = reformulator_registry(std::make_shared<ScriptedScenario>());
  VariationConfig config;
  config.enabled = {VariationKind::Identity, VariationKind::ZeroShotCoT, VariationKind::LongAnswer};
  std::vector<PromptVariant> variants =
      variant_set("Q", config, registry, PromptTemplates(), nullptr);
  CHECK(variants.size() == 3);
  CHECK(registry.usage().requests == 0);
}

TEST_CASE("failed LLM variants fall back to identity text with the kind preserved") {
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("reformulator", {"*", "", "connection"});
  auto registry = reformulator_registry(scenario);

  VariationConfig config;
  config.reformulation_model_id = "reformulator";
  std::vector<PromptVariant> variants =
      variant_set("Q", config, registry, PromptTemplates(), nullptr);

  REQUIRE(variants.size() == 7);
  int fallbacks = 0;
  for (const PromptVariant& variant : variants) {
    if (variant.identity_fallback) {
      ++fallbacks;
      CHECK(variant.text == "Q");
      CHECK_FALSE(is_static_variation(variant.kind));
    }
  }
  CHECK(fallbacks == 4);

  config.replace_failed_with_identity = false;
  CHECK(variant_set("Q", config, registry, PromptTemplates(), nullptr).size() == 3);
}

TEST_CASE("template containment holds for every variant kind") {
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("reformulator", {"*", "Extra material", ""});
  auto registry = reformulator_registry(scenario);
  VariationConfig config;
  config.reformulation_model_id = "reformulator";
  const std::string prompt = "Why is the sky blue?";

  for (const PromptVariant& variant :
       variant_set(prompt, config, registry, PromptTemplates(), nullptr)) {
    switch (variant.kind) {
      case VariationKind::Identity:
        CHECK(variant.text == prompt);
        break;
      case VariationKind::ZeroShotCoT:
        CHECK(variant.text.ends_with(kCotSuffix));
        break;
      case VariationKind::LongAnswer:
        CHECK(variant.text.starts_with(kLongAnswerPrefix));
        break;
      case VariationKind::ExpandBefore:
        CHECK(variant.text.ends_with(prompt));
        break;
      case VariationKind::ExpandAfter:
        CHECK(variant.text.starts_with(prompt));
        break;
      default:
        CHECK_FALSE(variant.text.empty());
        break;
    }
  }
}

TEST_CASE("template files override the built-in defaults") {
  test_support::TempDir dir("templates");
  test_support::write_file(dir.file("rephrase.txt"), "Custom rephrase of {PROMPT}");
  PromptTemplates templates(dir.dir());
  CHECK(templates.render("rephrase", {{"PROMPT", "Q"}}) == "Custom rephrase of Q");
  // untouched templates keep their defaults
  CHECK(templates.raw("expand_before") == PromptTemplates().raw("expand_before"));
  CHECK_THROWS_AS(PromptTemplates("/nonexistent/dir"), ConfigError);
  CHECK_THROWS_AS(templates.raw("unknown_name"), ConfigError);
}

TEST_CASE("variation kind names round-trip") {
  for (VariationKind kind : kAllVariationKinds) {
    auto parsed = variation_kind_from_name(variation_kind_name(kind));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == kind);
  }
  CHECK_FALSE(variation_kind_from_name("nope").has_value());
}
