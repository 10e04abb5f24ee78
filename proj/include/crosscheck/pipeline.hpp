#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crosscheck/eval.hpp"
#include "crosscheck/gateway.hpp"
#include "crosscheck/mitigation.hpp"
#include "crosscheck/sampling.hpp"
#include "crosscheck/scoring.hpp"
#include "crosscheck/segmentation.hpp"
#include "crosscheck/templates.hpp"
#include "crosscheck/variation.hpp"
#include "crosscheck/worker_pool.hpp"

namespace crosscheck {

struct WorkerLimits {
  int responses_in_flight = 4;
  int sampler_workers = 4;
  int judge_workers = 4;
  int corrector_workers = 4;

  void set_all(int workers);
};

struct PipelineConfig {
  // model roster
  std::string target_model = "target";
  std::string reformulation_model = "reformulator";
  std::vector<std::string> sampler_models = {"sampler-a", "sampler-b", "sampler-c", "sampler-d"};
  std::string judge_model = "judge";
  std::string improver_model;  // empty -> same as target

  // detection hyperparameters
  int num_samples = 10;
  ScoringConfig scoring;
  bool batch_judge = false;
  bool fine_grained = true;  // false: judge the whole response as one block
  std::vector<VariationKind> variants{kAllVariationKinds.begin(), kAllVariationKinds.end()};
  bool replace_failed_variant_with_identity = true;
  int min_ok_samples = 3;

  // mitigation stages
  bool block_correction = true;
  bool reflection = true;
  bool correct_neutral = true;
  int representative_samples = 3;

  // execution
  WorkerLimits workers;
  std::optional<std::uint64_t> seed;
  std::string template_dir;
  std::string abbreviations_file;
  RetryPolicy retry;
  int per_backend_in_flight = 0;

  // backends
  std::vector<ModelSpec> models;
  std::string mock_scenario_file;

  std::string effective_improver() const {
    return improver_model.empty() ? target_model : improver_model;
  }

  void validate() const;

  static PipelineConfig from_json_file(const std::string& path);
  void apply_json_text(const std::string& text, const std::string& source);
};

struct DetectionInput {
  std::string prompt_id;
  std::string prompt;
  std::string response;  // empty: generated from the target model at temperature 0
};

std::vector<DetectionInput> load_detection_inputs(const std::string& path);

struct ResponseOutcome {
  std::size_t input_index = 0;
  std::string prompt_id;
  std::string prompt;
  std::string response;
  bool ok = false;
  std::string error;

  std::vector<PromptVariant> variants;
  std::vector<SamplePlanEntry> plan;
  std::vector<Sample> samples;
  std::vector<Block> blocks;
  ResponseAssessment assessment;
  std::optional<MitigationResult> mitigation;
};

struct RunStats {
  std::size_t responses_total = 0;
  std::size_t responses_ok = 0;
  std::size_t responses_failed = 0;
  std::size_t blocks_total = 0;
  std::size_t flagged_blocks = 0;
  double mean_response_score = 0.0;
  UsageTotals usage;
  std::int64_t wall_ms = 0;
};

struct RunReport {
  std::vector<ResponseOutcome> outcomes;
  RunStats stats;

  std::string summary_text() const;
};

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);
  Pipeline(PipelineConfig config, std::shared_ptr<ModelRegistry> registry);

  // Detection over a batch; per-response failures are isolated into failed
  // outcomes. Writes CSVs and predictions.jsonl under out_dir when non-empty.
  RunReport run_detection(const std::vector<DetectionInput>& inputs, const std::string& out_dir);

  // Detection followed by two-stage mitigation per response.
  RunReport run_mitigation(const std::vector<DetectionInput>& inputs, const std::string& out_dir);

  const PipelineConfig& config() const { return config_; }
  const ModelRegistry& registry() const { return *registry_; }
  const PromptTemplates& templates() const { return templates_; }

 private:
  ResponseOutcome process_response(std::size_t index, const DetectionInput& input, bool mitigate_stage);
  RunReport run(const std::vector<DetectionInput>& inputs, const std::string& out_dir,
                bool mitigate_stage);
  void write_outputs(const RunReport& report, const std::string& out_dir, bool mitigate_stage) const;

  PipelineConfig config_;
  std::shared_ptr<ModelRegistry> registry_;
  PromptTemplates templates_;
  SegmenterConfig segmenter_;
  std::unique_ptr<WorkerPool> response_pool_;
  std::unique_ptr<WorkerPool> sampler_pool_;
  std::unique_ptr<WorkerPool> judge_pool_;
  std::unique_ptr<WorkerPool> corrector_pool_;
};

// Builds a registry from config.models (plus auto-registered mock specs for
// roster models missing from the table when a scenario is in force).
std::shared_ptr<ModelRegistry> build_registry(const PipelineConfig& config);

// --- evaluation reports (eval subcommand) ---

struct PredictedBlock {
  std::size_t index = 0;
  std::size_t span_start = 0;
  std::size_t span_end = 0;
  std::string text;
  BlockLabel label = BlockLabel::Accurate;
  double score = 0.0;
};

struct PredictedResponse {
  std::string prompt_id;
  double response_score = 0.0;
  ResponseLabel response_label = ResponseLabel::Factual;
  std::vector<PredictedBlock> blocks;
};

std::vector<PredictedResponse> load_predictions(const std::string& path);

struct EvalDetectionReport {
  DetectionMetrics sentence_level;
  DetectionMetrics response_level;  // pearson/spearman populated here
  std::size_t responses_scored = 0;
  std::size_t segments_scored = 0;
  std::size_t unmatched_blocks = 0;

  std::string table_text() const;
  void write_csv(const std::string& path) const;
};

EvalDetectionReport run_eval_detection(const std::vector<AnnotatedResponse>& gold,
                                       const std::vector<PredictedResponse>& predictions);

struct McqItemResult {
  std::string item_id;
  std::optional<std::string> extracted;
  std::string gold_letter;
  bool correct = false;
};

struct EvalMcqReport {
  std::vector<McqItemResult> items;
  double accuracy = 0.0;  // percentage
  std::optional<double> baseline_accuracy;
  std::optional<double> delta;  // percentage, one decimal

  std::string table_text() const;
  void write_csv(const std::string& path) const;
};

struct McqPrediction {
  std::string item_id;
  std::string response;
};

std::vector<McqPrediction> load_mcq_predictions(const std::string& path);

EvalMcqReport run_eval_mcq(const std::vector<McqItem>& gold,
                           const std::vector<McqPrediction>& predictions,
                           const std::optional<std::vector<McqPrediction>>& baseline);

// --- dataset import (artifact-convention mappings) ---

// Upstream fine-grained factuality JSONL (index/prompt/response/
// segmented_response/labels[/type]) -> AnnotatedResponse JSONL.
void import_felm(const std::string& input_path, const std::string& output_path);

// {question, correct_answer, incorrect_answers[, explanation][, id]} records
// (JSON array or JSONL) -> lettered McqItem JSONL; per-item seeded shuffle.
void import_mcq(const std::string& input_path, const std::string& output_path,
                std::uint64_t shuffle_seed);

}  // namespace crosscheck
