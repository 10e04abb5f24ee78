#include "crosscheck/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "crosscheck/csv.hpp"
#include "crosscheck/errors.hpp"
#include "crosscheck/judge.hpp"
#include "crosscheck/text_util.hpp"

namespace crosscheck {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace fs = std::filesystem;

constexpr int kCsvFloatDigits = 6;

std::vector<Block> whole_response_block(std::string_view response) {
  std::string_view trimmed = trim(response);
  if (trimmed.empty()) return {};
  Block block;
  block.index = 0;
  block.span_start = static_cast<std::size_t>(trimmed.data() - response.data());
  block.span_end = block.span_start + trimmed.size();
  block.text = std::string(trimmed);
  return {block};
}

}  // namespace

void WorkerLimits::set_all(int workers) {
  responses_in_flight = workers;
  sampler_workers = workers;
  judge_workers = workers;
  corrector_workers = workers;
}

void PipelineConfig::validate() const {
  if (num_samples < 1) throw ConfigError("num_samples must be >= 1");
  if (workers.responses_in_flight < 1 || workers.sampler_workers < 1 ||
      workers.judge_workers < 1 || workers.corrector_workers < 1) {
    throw ConfigError("worker limits must be >= 1");
  }
  if (sampler_models.empty()) throw ConfigError("at least one sampler model is required");
  if (target_model.empty() || judge_model.empty()) {
    throw ConfigError("target and judge models must be named");
  }
  if (variants.empty()) throw ConfigError("at least one prompt variation must be enabled");
  if (representative_samples < 1) throw ConfigError("representative_samples must be >= 1");
  scoring.validate();
}

void PipelineConfig::apply_json_text(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& ex) {
    throw ConfigError(source + " is not valid JSON: " + ex.what());
  }
  if (!doc.is_object()) throw ConfigError(source + ": config root must be an object");

  target_model = doc.value("target_model", target_model);
  reformulation_model = doc.value("reformulation_model", reformulation_model);
  judge_model = doc.value("judge_model", judge_model);
  improver_model = doc.value("improver_model", improver_model);
  if (doc.contains("sampler_models")) {
    sampler_models = doc["sampler_models"].get<std::vector<std::string>>();
  }

  num_samples = doc.value("num_samples", num_samples);
  scoring.tau = doc.value("tau", scoring.tau);
  if (doc.contains("weights")) {
    const json& weights = doc["weights"];
    scoring.weight_accurate = weights.value("accurate", scoring.weight_accurate);
    scoring.weight_neutral = weights.value("neutral", scoring.weight_neutral);
    scoring.weight_contradiction = weights.value("contradiction", scoring.weight_contradiction);
    if (weights.contains("unknown") && weights["unknown"].get<double>() != 0.0) {
      throw ConfigError(source + ": UNKNOWN judgments always carry weight 0");
    }
  }
  scoring.zero_weight_fallback_score =
      doc.value("zero_weight_fallback_score", scoring.zero_weight_fallback_score);
  batch_judge = doc.value("batch_judge", batch_judge);
  fine_grained = doc.value("fine_grained", fine_grained);
  replace_failed_variant_with_identity =
      doc.value("replace_failed_variant_with_identity", replace_failed_variant_with_identity);
  min_ok_samples = doc.value("min_ok_samples", min_ok_samples);

  if (doc.contains("variants")) {
    variants.clear();
    for (const auto& name : doc["variants"]) {
      auto kind = variation_kind_from_name(name.get<std::string>());
      if (!kind) throw ConfigError(source + ": unknown variation '" + name.get<std::string>() + "'");
      variants.push_back(*kind);
    }
  }

  if (doc.contains("mitigation")) {
    const json& mitigation = doc["mitigation"];
    block_correction = mitigation.value("block_correction", block_correction);
    reflection = mitigation.value("reflection", reflection);
    correct_neutral = mitigation.value("correct_neutral", correct_neutral);
    representative_samples = mitigation.value("representative_samples", representative_samples);
  }

  if (doc.contains("workers")) {
    const json& w = doc["workers"];
    if (w.is_number_integer()) {
      workers.set_all(w.get<int>());
    } else {
      workers.responses_in_flight = w.value("responses", workers.responses_in_flight);
      workers.sampler_workers = w.value("sampling", workers.sampler_workers);
      workers.judge_workers = w.value("judging", workers.judge_workers);
      workers.corrector_workers = w.value("correction", workers.corrector_workers);
    }
  }

  if (doc.contains("seed")) seed = doc["seed"].get<std::uint64_t>();
  template_dir = doc.value("template_dir", template_dir);
  abbreviations_file = doc.value("abbreviations_file", abbreviations_file);
  per_backend_in_flight = doc.value("per_backend_in_flight", per_backend_in_flight);
  mock_scenario_file = doc.value("mock_scenario", mock_scenario_file);

  if (doc.contains("retry")) {
    const json& r = doc["retry"];
    retry.max_attempts = r.value("max_attempts", retry.max_attempts);
    retry.base_delay = std::chrono::milliseconds(
        r.value("base_delay_ms", static_cast<std::int64_t>(retry.base_delay.count())));
    retry.max_delay = std::chrono::milliseconds(
        r.value("max_delay_ms", static_cast<std::int64_t>(retry.max_delay.count())));
    retry.jitter = r.value("jitter", retry.jitter);
  }

  if (doc.contains("models")) {
    models.clear();
    for (const auto& m : doc["models"]) {
      ModelSpec spec;
      spec.model_id = m.value("model_id", std::string());
      spec.endpoint = m.value("endpoint", std::string("mock"));
      spec.default_temperature = m.value("default_temperature", 1.0);
      spec.max_output_tokens = m.value("max_output_tokens", 4096);
      spec.api_key_env = m.value("api_key_env", std::string());
      if (spec.model_id.empty()) throw ConfigError(source + ": models[].model_id is required");
      models.push_back(std::move(spec));
    }
  }
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  PipelineConfig config;
  config.apply_json_text(buffer.str(), path);
  return config;
}

std::vector<DetectionInput> load_detection_inputs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaViolationError("cannot open input file: " + path);
  std::vector<DetectionInput> inputs;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& ex) {
      throw SchemaViolationError(std::string("invalid JSON: ") + ex.what(), path, line_number);
    }
    DetectionInput input;
    input.prompt_id = record.value("prompt_id", std::string());
    input.prompt = record.value("prompt", std::string());
    input.response = record.value("response", std::string());
    if (input.prompt.empty()) {
      throw SchemaViolationError("'prompt' is required and must be non-empty", path, line_number);
    }
    inputs.push_back(std::move(input));
  }
  return inputs;
}

std::shared_ptr<ModelRegistry> build_registry(const PipelineConfig& config) {
  auto registry = std::make_shared<ModelRegistry>(config.retry, config.per_backend_in_flight);
  bool mock = !config.mock_scenario_file.empty();
  if (mock) {
    auto scenario =
        std::make_shared<ScriptedScenario>(ScriptedScenario::from_file(config.mock_scenario_file));
    registry->attach_scenario(std::move(scenario), /*force_mock=*/true);
  }

  for (const ModelSpec& spec : config.models) {
    registry->register_backend(spec);
  }

  std::vector<std::string> roster = {config.target_model, config.reformulation_model,
                                     config.judge_model, config.effective_improver()};
  roster.insert(roster.end(), config.sampler_models.begin(), config.sampler_models.end());
  for (const std::string& model_id : roster) {
    if (registry->has_model(model_id)) continue;
    if (!mock) {
      throw ConfigError("model '" + model_id + "' is used by the pipeline but not configured");
    }
    ModelSpec spec;
    spec.model_id = model_id;
    spec.endpoint = "mock";
    registry->register_backend(std::move(spec));
  }
  return registry;
}

Pipeline::Pipeline(PipelineConfig config) : Pipeline(std::move(config), nullptr) {}

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<ModelRegistry> registry)
    : config_(std::move(config)),
      registry_(registry ? std::move(registry) : build_registry(config_)),
      templates_(config_.template_dir) {
  config_.validate();
  if (!config_.abbreviations_file.empty()) {
    segmenter_.abbreviations = load_abbreviations(config_.abbreviations_file);
  }
  response_pool_ = std::make_unique<WorkerPool>(config_.workers.responses_in_flight);
  sampler_pool_ = std::make_unique<WorkerPool>(config_.workers.sampler_workers);
  judge_pool_ = std::make_unique<WorkerPool>(config_.workers.judge_workers);
  corrector_pool_ = std::make_unique<WorkerPool>(config_.workers.corrector_workers);
}

ResponseOutcome Pipeline::process_response(std::size_t index, const DetectionInput& input,
                                           bool mitigate_stage) {
  ResponseOutcome outcome;
  outcome.input_index = index;
  outcome.prompt_id =
      input.prompt_id.empty() ? "input-" + std::to_string(index) : input.prompt_id;
  outcome.prompt = input.prompt;

  try {
    outcome.response = input.response;
    if (outcome.response.empty()) {
      ChatRequest request;
      request.model_id = config_.target_model;
      request.prompt_text = input.prompt;
      request.temperature = 0.0;  // input response generation
      request.max_tokens = registry_->spec(config_.target_model).max_output_tokens;
      outcome.response = registry_->complete(request).text;
    }

    VariationConfig variation;
    variation.enabled = config_.variants;
    variation.reformulation_model_id = config_.reformulation_model;
    variation.replace_failed_with_identity = config_.replace_failed_variant_with_identity;
    variation.source_prompt_id = outcome.prompt_id;
    outcome.variants =
        variant_set(outcome.prompt, variation, *registry_, templates_, sampler_pool_.get());

    std::uint64_t seed = config_.seed ? *config_.seed : fnv1a64(outcome.prompt);
    outcome.plan = build_plan(static_cast<std::size_t>(config_.num_samples), outcome.variants,
                              config_.sampler_models, seed);

    SamplingConfig sampling;
    sampling.min_ok = config_.min_ok_samples;
    outcome.samples =
        generate_samples(outcome.plan, outcome.variants, *registry_, sampling, sampler_pool_.get());

    outcome.blocks = config_.fine_grained ? segment(outcome.response, segmenter_)
                                          : whole_response_block(outcome.response);

    std::vector<const Sample*> ok_samples;
    for (const Sample& sample : outcome.samples) {
      if (sample.status == SampleStatus::Ok) ok_samples.push_back(&sample);
    }

    JudgeConfig judge;
    judge.judge_model_id = config_.judge_model;

    std::vector<std::vector<PairJudgment>> per_block(outcome.blocks.size());
    if (!outcome.blocks.empty() && !ok_samples.empty()) {
      if (config_.batch_judge) {
        std::vector<std::vector<PairJudgment>> per_sample(ok_samples.size());
        parallel_for(judge_pool_.get(), ok_samples.size(), [&](std::size_t k) {
          per_sample[k] = judge_batch(outcome.prompt, outcome.blocks, *ok_samples[k], judge,
                                      *registry_, templates_);
        });
        for (auto& sample_judgments : per_sample) {
          for (PairJudgment& judgment : sample_judgments) {
            per_block.at(judgment.block_index).push_back(std::move(judgment));
          }
        }
      } else {
        std::size_t pair_count = outcome.blocks.size() * ok_samples.size();
        std::vector<PairJudgment> judgments(pair_count);
        parallel_for(judge_pool_.get(), pair_count, [&](std::size_t p) {
          std::size_t b = p / ok_samples.size();
          std::size_t s = p % ok_samples.size();
          judgments[p] = judge_pair(outcome.prompt, outcome.blocks[b], *ok_samples[s], judge,
                                    *registry_, templates_);
        });
        for (PairJudgment& judgment : judgments) {
          per_block.at(judgment.block_index).push_back(std::move(judgment));
        }
      }
      for (auto& judgments : per_block) {
        std::sort(judgments.begin(), judgments.end(),
                  [](const PairJudgment& a, const PairJudgment& b) {
                    return a.sample_index < b.sample_index;
                  });
      }
    }

    std::vector<BlockAssessment> assessments(outcome.blocks.size());
    for (std::size_t b = 0; b < outcome.blocks.size(); ++b) {
      assessments[b] =
          assess_block(outcome.blocks[b].index, std::move(per_block[b]), config_.scoring);
    }
    parallel_for(judge_pool_.get(), assessments.size(), [&](std::size_t b) {
      if (!is_flagged(assessments[b].label)) return;
      assessments[b].error_summary =
          summarize_errors(outcome.prompt, outcome.blocks[b], assessments[b].label,
                           assessments[b].judgments, judge, *registry_, templates_);
    });
    outcome.assessment = assess_response(outcome.prompt_id, std::move(assessments));

    if (mitigate_stage) {
      MitigationConfig mitigation;
      mitigation.improver_model_id = config_.effective_improver();
      mitigation.block_stage = config_.block_correction;
      mitigation.reflection_stage = config_.reflection;
      mitigation.correct_neutral = config_.correct_neutral;
      mitigation.representative_samples = config_.representative_samples;
      outcome.mitigation =
          mitigate(outcome.prompt, outcome.response, outcome.assessment, outcome.blocks,
                   outcome.samples, mitigation, *registry_, templates_, corrector_pool_.get());
    }

    outcome.ok = true;
  } catch (const std::exception& ex) {
    outcome.ok = false;
    outcome.error = ex.what();
  }
  return outcome;
}

RunReport Pipeline::run(const std::vector<DetectionInput>& inputs, const std::string& out_dir,
                        bool mitigate_stage) {
  auto start = std::chrono::steady_clock::now();
  registry_->reset_usage();

  RunReport report;
  report.outcomes.resize(inputs.size());
  parallel_for(response_pool_.get(), inputs.size(), [&](std::size_t i) {
    report.outcomes[i] = process_response(i, inputs[i], mitigate_stage);
  });

  RunStats& stats = report.stats;
  stats.responses_total = inputs.size();
  double score_sum = 0.0;
  for (const ResponseOutcome& outcome : report.outcomes) {
    if (!outcome.ok) {
      ++stats.responses_failed;
      continue;
    }
    ++stats.responses_ok;
    stats.blocks_total += outcome.assessment.blocks.size();
    for (const BlockAssessment& block : outcome.assessment.blocks) {
      if (is_flagged(block.label)) ++stats.flagged_blocks;
    }
    score_sum += outcome.assessment.response_score;
  }
  stats.mean_response_score =
      stats.responses_ok > 0 ? score_sum / static_cast<double>(stats.responses_ok) : 0.0;
  stats.usage = registry_->usage();
  stats.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();

  if (!out_dir.empty()) write_outputs(report, out_dir, mitigate_stage);
  return report;
}

RunReport Pipeline::run_detection(const std::vector<DetectionInput>& inputs,
                                  const std::string& out_dir) {
  return run(inputs, out_dir, /*mitigate_stage=*/false);
}

RunReport Pipeline::run_mitigation(const std::vector<DetectionInput>& inputs,
                                   const std::string& out_dir) {
  return run(inputs, out_dir, /*mitigate_stage=*/true);
}

void Pipeline::write_outputs(const RunReport& report, const std::string& out_dir,
                             bool mitigate_stage) const {
  fs::create_directories(out_dir);
  auto path = [&](const char* name) { return (fs::path(out_dir) / name).string(); };

  CsvWriter samples_csv(path("samples.csv"),
                        {"response_index", "prompt_id", "sample_index", "variant_kind", "model_id",
                         "status", "latency_ms", "text"});
  CsvWriter judgments_csv(path("judgments.csv"), {"response_index", "prompt_id", "block_index",
                                                  "sample_index", "label", "rationale"});
  CsvWriter blocks_csv(path("blocks.csv"),
                       {"response_index", "prompt_id", "block_index", "span_start", "span_end",
                        "score", "label", "error_summary", "text"});
  CsvWriter responses_csv(path("responses.csv"),
                          {"response_index", "prompt_id", "status", "num_blocks", "num_flagged",
                           "response_score", "response_label"});

  std::ofstream predictions(path("predictions.jsonl"), std::ios::binary | std::ios::trunc);

  // Row order is fixed by (response, block, sample) indices, never by
  // completion time.
  for (const ResponseOutcome& outcome : report.outcomes) {
    const std::string response_index = std::to_string(outcome.input_index);
    if (!outcome.ok) {
      responses_csv.write_row(
          {response_index, outcome.prompt_id, "failed", "0", "0", "", ""});
      continue;
    }

    for (const Sample& sample : outcome.samples) {
      samples_csv.write_row({response_index, outcome.prompt_id, std::to_string(sample.index),
                             std::string(variation_kind_name(sample.variant.kind)),
                             sample.model_id, std::string(sample_status_name(sample.status)),
                             std::to_string(sample.latency_ms), sample.text});
    }

    std::size_t flagged = 0;
    ordered_json pred_blocks = ordered_json::array();
    for (const BlockAssessment& block : outcome.assessment.blocks) {
      for (const PairJudgment& judgment : block.judgments) {
        judgments_csv.write_row({response_index, outcome.prompt_id,
                                 std::to_string(judgment.block_index),
                                 std::to_string(judgment.sample_index),
                                 std::string(judge_label_name(judgment.label)),
                                 judgment.rationale});
      }
      const Block& source = outcome.blocks.at(block.block_index);
      blocks_csv.write_row(
          {response_index, outcome.prompt_id, std::to_string(block.block_index),
           std::to_string(source.span_start), std::to_string(source.span_end),
           format_fixed(block.score, kCsvFloatDigits), std::string(block_label_name(block.label)),
           block.error_summary ? block.error_summary->text : "", source.text});
      if (is_flagged(block.label)) ++flagged;

      pred_blocks.push_back({{"index", block.block_index},
                             {"span_start", source.span_start},
                             {"span_end", source.span_end},
                             {"text", source.text},
                             {"label", std::string(block_label_name(block.label))},
                             {"score", block.score}});
    }

    responses_csv.write_row(
        {response_index, outcome.prompt_id, "ok", std::to_string(outcome.assessment.blocks.size()),
         std::to_string(flagged), format_fixed(outcome.assessment.response_score, kCsvFloatDigits),
         std::string(response_label_name(outcome.assessment.response_label))});

    ordered_json pred = {
        {"prompt_id", outcome.prompt_id},
        {"response_score", outcome.assessment.response_score},
        {"response_label", std::string(response_label_name(outcome.assessment.response_label))},
        {"blocks", pred_blocks},
    };
    predictions << pred.dump() << "\n";
  }

  if (mitigate_stage) {
    CsvWriter corrections_csv(path("corrections.csv"),
                              {"response_index", "prompt_id", "block_index", "label", "model_id",
                               "original", "corrected", "status"});
    CsvWriter mitigations_csv(path("mitigations.csv"),
                              {"response_index", "prompt_id", "improver_model_id",
                               "block_corrected_response", "final_response"});
    for (const ResponseOutcome& outcome : report.outcomes) {
      if (!outcome.ok || !outcome.mitigation) continue;
      const std::string response_index = std::to_string(outcome.input_index);
      for (const CorrectionRecord& record : outcome.mitigation->records) {
        const BlockAssessment& block = outcome.assessment.blocks.at(record.block_index);
        corrections_csv.write_row({response_index, outcome.prompt_id,
                                   std::to_string(record.block_index),
                                   std::string(block_label_name(block.label)), record.model_id,
                                   record.original_text, record.corrected_text,
                                   std::string(correction_status_name(record.status))});
      }
      mitigations_csv.write_row({response_index, outcome.prompt_id,
                                 outcome.mitigation->improver_model_id,
                                 outcome.mitigation->block_corrected_response,
                                 outcome.mitigation->final_response});
    }
  }
}

std::string RunReport::summary_text() const {
  std::ostringstream out;
  out << "responses: " << stats.responses_total << " total, " << stats.responses_ok << " ok, "
      << stats.responses_failed << " failed\n";
  out << "blocks: " << stats.blocks_total << " total, " << stats.flagged_blocks << " flagged\n";
  out << "mean response score: " << format_fixed(stats.mean_response_score, 4) << "\n";
  out << "model usage: " << stats.usage.requests << " requests, " << stats.usage.input_tokens
      << " input tokens, " << stats.usage.output_tokens << " output tokens, "
      << stats.usage.failures << " exhausted\n";
  out << "wall time: " << stats.wall_ms << " ms\n";
  return out.str();
}

// --- evaluation ---

std::vector<PredictedResponse> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaViolationError("cannot open predictions file: " + path);
  std::vector<PredictedResponse> predictions;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& ex) {
      throw SchemaViolationError(std::string("invalid JSON: ") + ex.what(), path, line_number);
    }
    PredictedResponse pred;
    pred.prompt_id = record.value("prompt_id", std::string());
    if (pred.prompt_id.empty()) {
      throw SchemaViolationError("'prompt_id' is required", path, line_number);
    }
    pred.response_score = record.value("response_score", 0.0);
    std::string label = record.value("response_label", std::string("FACTUAL"));
    pred.response_label =
        iequals(label, "NON_FACTUAL") ? ResponseLabel::NonFactual : ResponseLabel::Factual;
    for (const auto& block_json : record.value("blocks", json::array())) {
      PredictedBlock block;
      block.index = block_json.value("index", pred.blocks.size());
      block.span_start = block_json.value("span_start", 0u);
      block.span_end = block_json.value("span_end", 0u);
      block.text = block_json.value("text", std::string());
      block.score = block_json.value("score", 0.0);
      std::string block_label = block_json.value("label", std::string("ACCURATE"));
      if (iequals(block_label, "CONTRADICTION")) {
        block.label = BlockLabel::Contradiction;
      } else if (iequals(block_label, "NEUTRAL")) {
        block.label = BlockLabel::Neutral;
      } else {
        block.label = BlockLabel::Accurate;
      }
      pred.blocks.push_back(std::move(block));
    }
    predictions.push_back(std::move(pred));
  }
  return predictions;
}

EvalDetectionReport run_eval_detection(const std::vector<AnnotatedResponse>& gold,
                                       const std::vector<PredictedResponse>& predictions) {
  std::map<std::string, const PredictedResponse*> by_id;
  for (const PredictedResponse& pred : predictions) {
    by_id.emplace(pred.prompt_id, &pred);
  }

  std::string missing;
  std::set<std::string> gold_ids;
  for (const AnnotatedResponse& record : gold) {
    gold_ids.insert(record.prompt_id);
    if (by_id.count(record.prompt_id) == 0) missing += " " + record.prompt_id;
  }
  std::string extra;
  for (const PredictedResponse& pred : predictions) {
    if (gold_ids.count(pred.prompt_id) == 0) extra += " " + pred.prompt_id;
  }
  if (!missing.empty() || !extra.empty()) {
    throw AlignmentError("prediction/gold ids do not line up;" +
                         (missing.empty() ? std::string() : " missing predictions for:" + missing) +
                         (extra.empty() ? std::string() : " unmatched predictions:" + extra));
  }

  EvalDetectionReport report;
  std::vector<bool> sentence_pred;
  std::vector<bool> sentence_gold;
  std::vector<bool> response_pred;
  std::vector<bool> response_gold;
  std::vector<double> response_pred_scores;
  std::vector<double> response_gold_scores;

  for (const AnnotatedResponse& record : gold) {
    const PredictedResponse& pred = *by_id.at(record.prompt_id);

    std::vector<Block> blocks;
    blocks.reserve(pred.blocks.size());
    for (const PredictedBlock& pb : pred.blocks) {
      Block block;
      block.index = pb.index;
      block.span_start = pb.span_start;
      block.span_end = pb.span_end;
      block.text = pb.text;
      blocks.push_back(std::move(block));
    }
    std::vector<std::optional<std::size_t>> alignment =
        align_blocks_to_segments(blocks, record.segments);

    std::vector<bool> segment_flagged(record.segments.size(), false);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (!alignment[b]) {
        ++report.unmatched_blocks;
        continue;
      }
      if (predicted_positive(pred.blocks[b].label)) segment_flagged[*alignment[b]] = true;
    }

    std::size_t gold_non_factual = 0;
    for (std::size_t s = 0; s < record.segments.size(); ++s) {
      sentence_pred.push_back(segment_flagged[s]);
      bool is_nf = record.segments[s].gold == GoldLabel::NonFactual;
      sentence_gold.push_back(is_nf);
      if (is_nf) ++gold_non_factual;
    }
    report.segments_scored += record.segments.size();

    response_pred.push_back(pred.response_label == ResponseLabel::NonFactual);
    response_gold.push_back(gold_non_factual > 0);
    response_pred_scores.push_back(pred.response_score);
    response_gold_scores.push_back(record.segments.empty()
                                       ? 0.0
                                       : static_cast<double>(gold_non_factual) /
                                             static_cast<double>(record.segments.size()));
  }
  report.responses_scored = gold.size();

  report.sentence_level = metrics_from_confusion(count_confusion(sentence_pred, sentence_gold));
  report.response_level = metrics_from_confusion(count_confusion(response_pred, response_gold));
  report.response_level.pearson = pearson(response_pred_scores, response_gold_scores);
  report.response_level.spearman = spearman(response_pred_scores, response_gold_scores);
  return report;
}

namespace {

std::string correlation_cell(const std::optional<double>& value) {
  return value ? format_fixed(*value * 100.0, 1) : std::string("---");
}

void print_metric_row(std::ostringstream& out, const char* level, const DetectionMetrics& m) {
  out << level << "," << format_fixed(m.precision, 1) << "," << format_fixed(m.recall, 1) << ","
      << format_fixed(m.f1, 1) << "," << format_fixed(m.balanced_accuracy, 1) << ","
      << correlation_cell(m.pearson) << "," << correlation_cell(m.spearman) << "," << m.counts.tp
      << "," << m.counts.fp << "," << m.counts.tn << "," << m.counts.fn << "\n";
}

}  // namespace

std::string EvalDetectionReport::table_text() const {
  std::ostringstream out;
  out << "level      P       R       F1      BA      Pearson  Spearman\n";
  auto row = [&](const char* level, const DetectionMetrics& m) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-9s  %-6s  %-6s  %-6s  %-6s  %-7s  %-7s\n", level,
                  format_fixed(m.precision, 1).c_str(), format_fixed(m.recall, 1).c_str(),
                  format_fixed(m.f1, 1).c_str(), format_fixed(m.balanced_accuracy, 1).c_str(),
                  correlation_cell(m.pearson).c_str(), correlation_cell(m.spearman).c_str());
    out << buf;
  };
  row("sentence", sentence_level);
  row("response", response_level);
  out << "scored: " << responses_scored << " responses, " << segments_scored << " segments";
  if (unmatched_blocks > 0) out << ", " << unmatched_blocks << " unmatched predicted blocks";
  out << "\n";
  return out.str();
}

void EvalDetectionReport::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open metrics output: " + path);
  out << "level,precision,recall,f1,balanced_accuracy,pearson,spearman,tp,fp,tn,fn\n";
  std::ostringstream rows;
  print_metric_row(rows, "sentence", sentence_level);
  print_metric_row(rows, "response", response_level);
  out << rows.str();
}

std::vector<McqPrediction> load_mcq_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaViolationError("cannot open predictions file: " + path);
  std::vector<McqPrediction> predictions;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& ex) {
      throw SchemaViolationError(std::string("invalid JSON: ") + ex.what(), path, line_number);
    }
    McqPrediction pred;
    pred.item_id = record.value("item_id", std::string());
    pred.response = record.value("response", std::string());
    if (pred.item_id.empty()) {
      throw SchemaViolationError("'item_id' is required", path, line_number);
    }
    predictions.push_back(std::move(pred));
  }
  return predictions;
}

namespace {

double mcq_accuracy(const std::vector<McqItem>& gold,
                    const std::map<std::string, const McqPrediction*>& by_id,
                    std::vector<McqItemResult>* items_out) {
  std::size_t correct = 0;
  for (const McqItem& item : gold) {
    const McqPrediction& pred = *by_id.at(item.item_id);
    std::vector<std::string> letters;
    for (const McqChoice& choice : item.choices) letters.push_back(choice.letter);
    McqItemResult result;
    result.item_id = item.item_id;
    result.gold_letter = item.gold_letter;
    result.extracted = extract_answer_choice(pred.response, letters);
    result.correct = result.extracted && iequals(*result.extracted, item.gold_letter);
    if (result.correct) ++correct;
    if (items_out) items_out->push_back(std::move(result));
  }
  return gold.empty() ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(gold.size());
}

std::map<std::string, const McqPrediction*> index_mcq_predictions(
    const std::vector<McqItem>& gold, const std::vector<McqPrediction>& predictions,
    const char* which) {
  std::map<std::string, const McqPrediction*> by_id;
  for (const McqPrediction& pred : predictions) by_id.emplace(pred.item_id, &pred);
  std::string missing;
  for (const McqItem& item : gold) {
    if (by_id.count(item.item_id) == 0) missing += " " + item.item_id;
  }
  if (!missing.empty()) {
    throw AlignmentError(std::string(which) + " predictions missing for items:" + missing);
  }
  return by_id;
}

}  // namespace

EvalMcqReport run_eval_mcq(const std::vector<McqItem>& gold,
                           const std::vector<McqPrediction>& predictions,
                           const std::optional<std::vector<McqPrediction>>& baseline) {
  EvalMcqReport report;
  auto by_id = index_mcq_predictions(gold, predictions, "answer");
  report.accuracy = mcq_accuracy(gold, by_id, &report.items);
  if (baseline) {
    auto base_by_id = index_mcq_predictions(gold, *baseline, "baseline");
    report.baseline_accuracy = mcq_accuracy(gold, base_by_id, nullptr);
    if (*report.baseline_accuracy > 0.0) {
      report.delta = accuracy_delta(report.accuracy, *report.baseline_accuracy);
    }
  }
  return report;
}

std::string EvalMcqReport::table_text() const {
  std::ostringstream out;
  out << "items: " << items.size() << "\n";
  out << "answer accuracy: " << format_fixed(accuracy, 1) << "%";
  if (baseline_accuracy) {
    out << "  (baseline " << format_fixed(*baseline_accuracy, 1) << "%";
    if (delta) {
      out << ", delta " << (*delta >= 0 ? "+" : "") << format_fixed(*delta, 1) << "%";
    }
    out << ")";
  }
  out << "\n";
  return out.str();
}

void EvalMcqReport::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open metrics output: " + path);
  out << "item_id,extracted,gold,correct\n";
  for (const McqItemResult& item : items) {
    out << csv_escape(item.item_id) << "," << (item.extracted ? *item.extracted : "") << ","
        << csv_escape(item.gold_letter) << "," << (item.correct ? "1" : "0") << "\n";
  }
}

// --- dataset import ---

void import_felm(const std::string& input_path, const std::string& output_path) {
  std::ifstream in(input_path);
  if (!in) throw SchemaViolationError("cannot open file: " + input_path);
  std::ofstream out(output_path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open output file: " + output_path);

  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& ex) {
      throw SchemaViolationError(std::string("invalid JSON: ") + ex.what(), input_path,
                                 line_number);
    }

    std::string prompt_id;
    if (record.contains("index")) {
      prompt_id = record["index"].is_string() ? record["index"].get<std::string>()
                                              : std::to_string(record["index"].get<long long>());
    } else {
      prompt_id = std::to_string(line_number);
    }

    if (!record.contains("segmented_response") || !record["segmented_response"].is_array() ||
        !record.contains("labels") || !record["labels"].is_array()) {
      throw SchemaViolationError("expected 'segmented_response' and 'labels' arrays", input_path,
                                 line_number);
    }
    auto segments = record["segmented_response"].get<std::vector<std::string>>();
    const json& labels = record["labels"];
    if (segments.size() != labels.size()) {
      throw SchemaViolationError("'segmented_response' and 'labels' lengths differ", input_path,
                                 line_number);
    }

    std::string response = record.value("response", std::string());
    // The converter keeps the original response only when the segments embed
    // into it with whitespace-only gaps; otherwise it rebuilds the response
    // from the segments so the emitted record satisfies the ingestion schema.
    bool embeds = !response.empty();
    std::size_t cursor = 0;
    for (const std::string& segment : segments) {
      if (!embeds) break;
      std::size_t found = response.find(segment, cursor);
      if (segment.empty() || found == std::string::npos ||
          !trim(std::string_view(response).substr(cursor, found - cursor)).empty()) {
        embeds = false;
        break;
      }
      cursor = found + segment.size();
    }
    if (embeds && !trim(std::string_view(response).substr(cursor)).empty()) embeds = false;
    if (!embeds) {
      response.clear();
      for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i > 0) response += " ";
        response += segments[i];
      }
    }

    ordered_json converted = {
        {"prompt_id", prompt_id},
        {"prompt", record.value("prompt", std::string())},
        {"response", response},
        {"domain", record.value("domain", record.value("type", std::string()))},
    };
    ordered_json seg_array = ordered_json::array();
    for (std::size_t i = 0; i < segments.size(); ++i) {
      bool factual;
      if (labels[i].is_boolean()) {
        factual = labels[i].get<bool>();
      } else if (labels[i].is_number()) {
        factual = labels[i].get<int>() != 0;
      } else {
        throw SchemaViolationError("labels must be booleans or 0/1", input_path, line_number);
      }
      seg_array.push_back(
          {{"text", segments[i]}, {"gold_label", factual ? "factual" : "non-factual"}});
    }
    converted["segments"] = seg_array;
    out << converted.dump() << "\n";
  }
}

void import_mcq(const std::string& input_path, const std::string& output_path,
                std::uint64_t shuffle_seed) {
  std::ifstream in(input_path);
  if (!in) throw SchemaViolationError("cannot open file: " + input_path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string content = buffer.str();

  std::vector<json> records;
  std::string_view trimmed = trim(content);
  if (!trimmed.empty() && trimmed.front() == '[') {
    json doc;
    try {
      doc = json::parse(content);
    } catch (const json::exception& ex) {
      throw SchemaViolationError(std::string("invalid JSON: ") + ex.what(), input_path, 1);
    }
    for (const auto& record : doc) records.push_back(record);
  } else {
    std::size_t line_number = 0;
    for (std::string_view line : split_lines(content)) {
      ++line_number;
      if (trim(line).empty()) continue;
      try {
        records.push_back(json::parse(line));
      } catch (const json::exception& ex) {
        throw SchemaViolationError(std::string("invalid JSON: ") + ex.what(), input_path,
                                   line_number);
      }
    }
  }

  std::ofstream out(output_path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open output file: " + output_path);

  std::size_t item_number = 0;
  for (const json& record : records) {
    ++item_number;
    if (!record.contains("question") || !record.contains("correct_answer") ||
        !record.contains("incorrect_answers") || !record["incorrect_answers"].is_array()) {
      throw SchemaViolationError(
          "expected 'question', 'correct_answer' and 'incorrect_answers' fields", input_path,
          item_number);
    }
    std::string item_id = record.value("id", "q" + std::to_string(item_number));
    std::vector<std::string> answers;
    answers.push_back(record["correct_answer"].get<std::string>());
    for (const auto& wrong : record["incorrect_answers"]) {
      answers.push_back(wrong.get<std::string>());
    }
    if (answers.size() > 26) {
      throw SchemaViolationError("too many choices for letter assignment", input_path, item_number);
    }

    std::vector<std::size_t> order =
        shuffled_indices(answers.size(), shuffle_seed ^ fnv1a64(item_id));
    ordered_json choices = ordered_json::array();
    std::string gold_letter;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      std::string letter(1, static_cast<char>('A' + pos));
      choices.push_back({{"letter", letter}, {"text", answers[order[pos]]}});
      if (order[pos] == 0) gold_letter = letter;
    }

    ordered_json converted = {
        {"item_id", item_id},
        {"question", record["question"].get<std::string>()},
        {"choices", choices},
        {"gold_letter", gold_letter},
    };
    if (record.contains("explanation")) {
      converted["reference_explanation"] = record["explanation"].get<std::string>();
    }
    out << converted.dump() << "\n";
  }
}

}  // namespace crosscheck
