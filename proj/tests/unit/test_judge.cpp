#include <doctest.h>

#include <memory>

#include "crosscheck/errors.hpp"
#include "crosscheck/judge.hpp"

using namespace crosscheck;

namespace {

ModelRegistry judge_registry(std::shared_ptr<ScriptedScenario> scenario) {
  RetryPolicy policy;
  policy.max_attempts = 1;
  policy.base_delay = std::chrono::milliseconds(0);
  ModelRegistry registry(policy);
  registry.attach_scenario(std::move(scenario));
  ModelSpec spec;
  spec.model_id = "judge";
  spec.endpoint = "mock";
  registry.register_backend(spec);
  return registry;
}

JudgeConfig judge_config() {
  JudgeConfig config;
  config.judge_model_id = "judge";
  return config;
}

Block make_block(std::size_t index, const std::string& text) {
  Block block;
  block.index = index;
  block.text = text;
  return block;
}

Sample make_sample(std::size_t index, const std::string& text) {
  Sample sample;
  sample.index = index;
  sample.model_id = "sampler";
  sample.text = text;
  sample.status = SampleStatus::Ok;
  return sample;
}

}  // namespace

TEST_CASE("label parsing covers the structured and bare forms") {
  CHECK(parse_judge_label("LABEL: ACCURATE") ==
        std::pair<JudgeLabel, std::string>{JudgeLabel::Accurate, ""});
  CHECK(parse_judge_label("LABEL: CONTRADICTION\nREASON: dates disagree") ==
        std::pair<JudgeLabel, std::string>{JudgeLabel::Contradiction, "dates disagree"});
  CHECK(parse_judge_label("label: neutral \xE2\x80\x94 cannot verify") ==
        std::pair<JudgeLabel, std::string>{JudgeLabel::Neutral, "cannot verify"});
  CHECK(parse_judge_label("The block is ACCURATE.") ==
        std::pair<JudgeLabel, std::string>{JudgeLabel::Accurate, ""});
  CHECK(parse_judge_label("ACCURATE or CONTRADICTION, unclear").first == JudgeLabel::Unknown);
  CHECK(parse_judge_label("free text with no recognizable verdict").first == JudgeLabel::Unknown);
  CHECK(parse_judge_label("").first == JudgeLabel::Unknown);
}

TEST_CASE("label tokens only match on word boundaries") {
  CHECK(parse_judge_label("the text is INACCURATE here").first == JudgeLabel::Unknown);
  CHECK(parse_judge_label("NEUTRALITY is not a label").first == JudgeLabel::Unknown);
  CHECK(parse_judge_label("verdict: *NEUTRAL*").first == JudgeLabel::Neutral);
}

TEST_CASE("parse safety: no label emitted without its token present") {
  const char* replies[] = {"yes", "no", "maybe so", "LABEL: yes", "LABEL:", "1234", "??", "ok."};
  for (const char* reply : replies) {
    CHECK(parse_judge_label(reply).first == JudgeLabel::Unknown);
  }
}

TEST_CASE("structured field wins over tokens elsewhere in the reply") {
  auto [label, rationale] =
      parse_judge_label("LABEL: NEUTRAL\nREASON: the sample says ACCURATE things elsewhere");
  CHECK(label == JudgeLabel::Neutral);
  CHECK(rationale == "the sample says ACCURATE things elsewhere");
}

TEST_CASE("judge_pair fills the template and parses the reply") {
  PromptTemplates templates;
  std::string rendered = templates.render(
      "judge_pair", {{"PROMPT", "Q?"}, {"SAMPLE", "Sample text."}, {"BLOCK", "Block text."}});
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("judge", {rendered, "LABEL: CONTRADICTION\nREASON: numbers differ", ""});
  auto registry = judge_registry(scenario);

  PairJudgment judgment = judge_pair("Q?", make_block(3, "Block text."),
                                     make_sample(5, "Sample text."), judge_config(), registry,
                                     templates);
  CHECK(judgment.block_index == 3);
  CHECK(judgment.sample_index == 5);
  CHECK(judgment.label == JudgeLabel::Contradiction);
  CHECK(judgment.rationale == "numbers differ");
  CHECK(judgment.raw_reply == "LABEL: CONTRADICTION\nREASON: numbers differ");
}

TEST_CASE("judge failures become UNKNOWN judgments instead of exceptions") {
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("judge", {"*", "", "connection"});
  auto registry = judge_registry(scenario);

  PairJudgment judgment = judge_pair("Q?", make_block(0, "B"), make_sample(0, "S"), judge_config(),
                                     registry, PromptTemplates());
  CHECK(judgment.label == JudgeLabel::Unknown);
  CHECK(judgment.raw_reply.find("failed") != std::string::npos);
}

TEST_CASE("batch judging aligns numbered items with blocks") {
  auto scenario = std::make_shared<ScriptedScenario>();
  scenario->add("judge", {"*", "1: ACCURATE\n2: NEUTRAL - thin evidence\n3: CONTRADICTION", ""});
  auto registry = judge_registry(scenario);

  std::vector<Block> blocks = {make_block(0, "B0."), make_block(1, "B1."), make_block(2, "B2.")};
  auto judgments = judge_batch("Q?", blocks, make_sample(7, "S"), judge_config(), registry,
                               PromptTemplates());
  REQUIRE(judgments.size() == 3);
  CHECK(judgments[0].label == JudgeLabel::Accurate);
  CHECK(judgments[1].label == JudgeLabel::Neutral);
  CHECK(judgments[1].rationale == "thin evidence");
  CHECK(judgments[2].label == JudgeLabel::Contradiction);
  for (const PairJudgment& judgment : judgments) CHECK(judgment.sample_index == 7);
}

TEST_CASE("mismatched batch replies fall back per config") {
  std::vector<Block> blocks = {make_block(0, "B0."), make_block(1, "B1."), make_block(2, "B2.")};
  PromptTemplates templates;

  SUBCASE("per-pair fallback re-judges each block") {
    auto scenario = std::make_shared<ScriptedScenario>();
    // batch reply has only two items, then per-pair prompts get scripted labels
    std::string batch_prompt = templates.render(
        "judge_batch",
        {{"PROMPT", "Q?"}, {"SAMPLE", "S"}, {"BLOCKS", "1. B0.\n2. B1.\n3. B2.\n"}});
    scenario->add("judge", {batch_prompt, "1: ACCURATE\n2: NEUTRAL", ""});
    for (const Block& block : blocks) {
      std::string pair_prompt = templates.render(
          "judge_pair", {{"PROMPT", "Q?"}, {"SAMPLE", "S"}, {"BLOCK", block.text}});
      scenario->add("judge", {pair_prompt, "LABEL: CONTRADICTION", ""});
    }
    auto registry = judge_registry(scenario);
    auto judgments =
        judge_batch("Q?", blocks, make_sample(0, "S"), judge_config(), registry, templates);
    REQUIRE(judgments.size() == 3);
    for (const PairJudgment& judgment : judgments) {
      CHECK(judgment.label == JudgeLabel::Contradiction);
    }
  }

  SUBCASE("all-unknown fallback marks every pair") {
    auto scenario = std::make_shared<ScriptedScenario>();
    scenario->add("judge", {"*", "1: ACCURATE\n2: NEUTRAL", ""});
    auto registry = judge_registry(scenario);
    JudgeConfig config = judge_config();
    config.on_batch_mismatch = JudgeConfig::BatchMismatch::AllUnknown;
    auto judgments = judge_batch("Q?", blocks, make_sample(0, "S"), config, registry, templates);
    REQUIRE(judgments.size() == 3);
    for (const PairJudgment& judgment : judgments) {
      CHECK(judgment.label == JudgeLabel::Unknown);
    }
  }
}

TEST_CASE("error summaries collect contradiction evidence") {
  std::vector<PairJudgment> judgments;
  for (std::size_t i = 0; i < 4; ++i) {
    PairJudgment judgment;
    judgment.block_index = 2;
    judgment.sample_index = i;
    judgment.label = i < 2 ? JudgeLabel::Contradiction : JudgeLabel::Accurate;
    judgment.rationale = i < 2 ? "year mismatch " + std::to_string(i) : "fine";
    judgments.push_back(std::move(judgment));
  }

  SUBCASE("scripted summarizer text is used") {
    auto scenario = std::make_shared<ScriptedScenario>();
    scenario->add("judge", {"*", "Year stated as 1999; samples say 2001", ""});
    auto registry = judge_registry(scenario);
    ErrorSummary summary =
        summarize_errors("Q?", make_block(2, "B"), BlockLabel::Contradiction, judgments,
                         judge_config(), registry, PromptTemplates());
    CHECK(summary.text == "Year stated as 1999; samples say 2001");
    CHECK(summary.evidence_sample_indices == std::vector<std::size_t>{0, 1});
  }

  SUBCASE("gateway failure falls back to joined rationales") {
    auto scenario = std::make_shared<ScriptedScenario>();
    scenario->add("judge", {"*", "", "timeout"});
    auto registry = judge_registry(scenario);
    ErrorSummary summary =
        summarize_errors("Q?", make_block(2, "B"), BlockLabel::Neutral, judgments, judge_config(),
                         registry, PromptTemplates());
    CHECK(summary.text == "year mismatch 0; year mismatch 1");
  }

  SUBCASE("accurate blocks are rejected") {
    auto registry = judge_registry(std::make_shared<ScriptedScenario>());
    CHECK_THROWS_AS(summarize_errors("Q?", make_block(2, "B"), BlockLabel::Accurate, judgments,
                                     judge_config(), registry, PromptTemplates()),
                    PreconditionFailedError);
  }
}
