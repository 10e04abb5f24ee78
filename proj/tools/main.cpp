#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crosscheck/errors.hpp"
#include "crosscheck/pipeline.hpp"
#include "crosscheck/text_util.hpp"

namespace {

using namespace crosscheck;

// Exit codes: 0 all ok, 2 partial per-response failures, 1 config/schema error.
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;

struct CommonOptions {
  std::string config_file;
  std::string input_file;
  std::string out_dir = "out";
  std::string mock_scenario;
  std::string template_dir;
  std::string abbreviations_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> num_samples;
  std::optional<double> tau;
  std::optional<int> min_ok;
  std::optional<std::int64_t> retry_base_ms;
  std::optional<int> retry_attempts;
  bool batch_judge = false;
  bool response_level_judge = false;
  std::string samplers;  // comma-separated override
  std::string variants;  // comma-separated override
  std::string target;
  std::string judge;
  std::string improver;
  std::string reformulator;
};

void add_pipeline_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-i,--input", opts.input_file, "JSONL inputs: {prompt_id?, prompt, response?}")
      ->required();
  cmd->add_option("-o,--out-dir", opts.out_dir, "output directory for CSVs and predictions");
  cmd->add_option("-c,--config", opts.config_file, "JSON configuration file");
  cmd->add_option("--mock-scenario", opts.mock_scenario,
                  "scripted-backend scenario file; routes every model to the mock");
  cmd->add_option("--templates", opts.template_dir, "prompt template directory");
  cmd->add_option("--abbrev", opts.abbreviations_file, "abbreviation list for the segmenter");
  cmd->add_option("--seed", opts.seed, "sampling seed (default: derived from each prompt)");
  cmd->add_option("--workers", opts.workers, "worker count applied to every pool");
  cmd->add_option("--num-samples", opts.num_samples, "cross-model samples per response");
  cmd->add_option("--tau", opts.tau, "block labeling threshold");
  cmd->add_option("--min-ok", opts.min_ok, "minimum succeeded samples per response");
  cmd->add_option("--retry-base-ms", opts.retry_base_ms, "retry backoff base delay");
  cmd->add_option("--retry-attempts", opts.retry_attempts, "retry attempt cap");
  cmd->add_flag("--batch-judge", opts.batch_judge, "judge all blocks per sample in one query");
  cmd->add_flag("--response-level-judge", opts.response_level_judge,
                "disable fine-grained judging; one block per response");
  cmd->add_option("--samplers", opts.samplers, "comma-separated sampler model ids");
  cmd->add_option("--variants", opts.variants, "comma-separated variation kinds");
  cmd->add_option("--target", opts.target, "target model id");
  cmd->add_option("--judge", opts.judge, "judge model id");
  cmd->add_option("--improver", opts.improver, "improver model id (default: target)");
  cmd->add_option("--reformulator", opts.reformulator, "reformulation model id");
}

PipelineConfig build_config(const CommonOptions& opts, const CLI::App* cmd) {
  PipelineConfig config;
  if (!opts.config_file.empty()) config = PipelineConfig::from_json_file(opts.config_file);

  // flags win over the config file
  if (!opts.mock_scenario.empty()) config.mock_scenario_file = opts.mock_scenario;
  if (!opts.template_dir.empty()) config.template_dir = opts.template_dir;
  if (!opts.abbreviations_file.empty()) config.abbreviations_file = opts.abbreviations_file;
  if (opts.seed) config.seed = opts.seed;
  if (opts.workers) config.workers.set_all(*opts.workers);
  if (opts.num_samples) config.num_samples = *opts.num_samples;
  if (opts.tau) config.scoring.tau = *opts.tau;
  if (opts.min_ok) config.min_ok_samples = *opts.min_ok;
  if (opts.retry_base_ms) config.retry.base_delay = std::chrono::milliseconds(*opts.retry_base_ms);
  if (opts.retry_attempts) config.retry.max_attempts = *opts.retry_attempts;
  if (opts.batch_judge) config.batch_judge = true;
  if (opts.response_level_judge) config.fine_grained = false;
  if (!opts.samplers.empty()) config.sampler_models = split_list(opts.samplers, ',');
  if (!opts.variants.empty()) {
    config.variants.clear();
    for (const std::string& name : split_list(opts.variants, ',')) {
      auto kind = variation_kind_from_name(name);
      if (!kind) throw ConfigError("unknown variation kind: " + name);
      config.variants.push_back(*kind);
    }
  }
  if (!opts.target.empty()) config.target_model = opts.target;
  if (!opts.judge.empty()) config.judge_model = opts.judge;
  if (!opts.improver.empty()) config.improver_model = opts.improver;
  if (!opts.reformulator.empty()) config.reformulation_model = opts.reformulator;

  // Mitigation stage flags live on the mitigate subcommand only.
  auto flag_set = [&](const std::string& name) {
    const CLI::Option* option = cmd->get_option_no_throw(name);
    return option != nullptr && option->count() > 0;
  };
  if (flag_set("--no-block-correction")) config.block_correction = false;
  if (flag_set("--no-reflection")) config.reflection = false;
  if (flag_set("--contradiction-only")) config.correct_neutral = false;
  return config;
}

int run_pipeline(const CommonOptions& opts, const CLI::App* cmd, bool mitigate_stage) {
  PipelineConfig config = build_config(opts, cmd);
  std::vector<DetectionInput> inputs = load_detection_inputs(opts.input_file);
  Pipeline pipeline(std::move(config));
  RunReport report = mitigate_stage ? pipeline.run_mitigation(inputs, opts.out_dir)
                                    : pipeline.run_detection(inputs, opts.out_dir);
  std::cout << report.summary_text();
  std::cout << "outputs written to " << opts.out_dir << "\n";
  for (const ResponseOutcome& outcome : report.outcomes) {
    if (!outcome.ok) {
      std::cerr << "response " << outcome.input_index << " (" << outcome.prompt_id
                << ") failed: " << outcome.error << "\n";
    }
  }
  return report.stats.responses_failed > 0 ? kExitPartial : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-model consistency checking: hallucination detection, mitigation and "
               "evaluation for LLM responses"};
  app.require_subcommand(1);

  CommonOptions detect_opts;
  CLI::App* detect = app.add_subcommand("detect", "score each response block for consistency");
  add_pipeline_options(detect, detect_opts);

  CommonOptions mitigate_opts;
  CLI::App* mitigate = app.add_subcommand("mitigate", "detect, then correct flagged blocks");
  add_pipeline_options(mitigate, mitigate_opts);
  mitigate->add_flag("--no-block-correction", "skip the block-correction stage");
  mitigate->add_flag("--no-reflection", "skip the response-level reflection stage");
  mitigate->add_flag("--contradiction-only", "correct only CONTRADICTION blocks");

  std::string eval_mode;
  std::string eval_gold;
  std::string eval_pred;
  std::string eval_baseline;
  std::string eval_out;
  CLI::App* eval = app.add_subcommand("eval", "compare predictions against gold labels");
  eval->add_option("--mode", eval_mode, "detection | mcq")->required();
  eval->add_option("--gold", eval_gold, "gold file (annotated or MCQ JSONL)")->required();
  eval->add_option("--pred", eval_pred, "predictions file")->required();
  eval->add_option("--baseline", eval_baseline, "baseline predictions (mcq mode)");
  eval->add_option("-o,--out", eval_out, "metrics CSV output path");

  std::string import_in;
  std::string import_out;
  CLI::App* import_felm_cmd =
      app.add_subcommand("import-felm", "convert upstream annotated JSONL to the ingestion schema");
  import_felm_cmd->add_option("-i,--input", import_in, "source JSONL")->required();
  import_felm_cmd->add_option("-o,--output", import_out, "converted JSONL")->required();

  std::string mcq_in;
  std::string mcq_out;
  std::uint64_t mcq_seed = 0;
  CLI::App* import_mcq_cmd =
      app.add_subcommand("import-mcq", "convert raw multiple-choice records to lettered items");
  import_mcq_cmd->add_option("-i,--input", mcq_in, "source JSON/JSONL")->required();
  import_mcq_cmd->add_option("-o,--output", mcq_out, "converted JSONL")->required();
  import_mcq_cmd->add_option("--shuffle-seed", mcq_seed, "per-item choice shuffle seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (detect->parsed()) return run_pipeline(detect_opts, detect, false);
    if (mitigate->parsed()) return run_pipeline(mitigate_opts, mitigate, true);
    if (eval->parsed()) {
      if (eval_mode == "detection") {
        auto gold = load_annotated(eval_gold);
        auto pred = load_predictions(eval_pred);
        EvalDetectionReport report = run_eval_detection(gold, pred);
        std::cout << report.table_text();
        if (!eval_out.empty()) report.write_csv(eval_out);
      } else if (eval_mode == "mcq") {
        auto gold = load_mcq(eval_gold);
        auto pred = load_mcq_predictions(eval_pred);
        std::optional<std::vector<McqPrediction>> baseline;
        if (!eval_baseline.empty()) baseline = load_mcq_predictions(eval_baseline);
        EvalMcqReport report = run_eval_mcq(gold, pred, baseline);
        std::cout << report.table_text();
        if (!eval_out.empty()) report.write_csv(eval_out);
      } else {
        throw ConfigError("--mode must be 'detection' or 'mcq'");
      }
      return kExitOk;
    }
    if (import_felm_cmd->parsed()) {
      import_felm(import_in, import_out);
      return kExitOk;
    }
    if (import_mcq_cmd->parsed()) {
      import_mcq(mcq_in, mcq_out, mcq_seed);
      return kExitOk;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
