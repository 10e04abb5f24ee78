#include "crosscheck/mitigation.hpp"

#include <algorithm>
#include <set>

#include "crosscheck/errors.hpp"
#include "crosscheck/text_util.hpp"

namespace crosscheck {
namespace {

std::string format_evidence(std::span<const std::pair<std::size_t, std::string>> evidence) {
  if (evidence.empty()) return "- none recorded\n";
  std::string out;
  for (const auto& [sample_index, rationale] : evidence) {
    out += "- sample " + std::to_string(sample_index) + ": " +
           (rationale.empty() ? "contradicts this sentence" : rationale) + "\n";
  }
  return out;
}

std::string format_samples(const std::vector<const Sample*>& samples) {
  std::string out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out += "Reference " + std::to_string(i + 1) + " (" + samples[i]->model_id + "):\n" +
           samples[i]->text + "\n\n";
  }
  return out;
}

}  // namespace

std::string_view correction_status_name(CorrectionRecord::Status status) {
  switch (status) {
    case CorrectionRecord::Status::Applied:
      return "applied";
    case CorrectionRecord::Status::KeptOriginalBlankReply:
      return "kept_original_blank_reply";
    case CorrectionRecord::Status::KeptOriginalFailed:
      return "kept_original_failed";
  }
  return "kept_original_failed";
}

CorrectionRecord correct_block(const std::string& prompt, const Block& block,
                               const ErrorSummary* summary,
                               std::span<const PairJudgment> judgments,
                               const MitigationConfig& config, const ModelRegistry& registry,
                               const PromptTemplates& templates) {
  CorrectionRecord record;
  record.block_index = block.index;
  record.original_text = block.text;
  record.model_id = config.improver_model_id;
  if (summary != nullptr) record.error_summary_text = summary->text;
  for (const PairJudgment& judgment : judgments) {
    if (judgment.label == JudgeLabel::Contradiction) {
      record.evidence.emplace_back(judgment.sample_index, judgment.rationale);
    }
  }

  ChatRequest request;
  request.model_id = config.improver_model_id;
  request.prompt_text =
      templates.render("correction", {{"PROMPT", prompt},
                                      {"BLOCK", block.text},
                                      {"SUMMARY", record.error_summary_text.empty()
                                                      ? "no summary available"
                                                      : record.error_summary_text},
                                      {"EVIDENCE", format_evidence(record.evidence)}});
  request.temperature = config.temperature;
  request.max_tokens = registry.spec(config.improver_model_id).max_output_tokens;

  try {
    ChatResponse reply = registry.complete(request);
    std::string corrected(trim(reply.text));
    if (corrected.empty()) {
      record.corrected_text = block.text;
      record.status = CorrectionRecord::Status::KeptOriginalBlankReply;
    } else {
      record.corrected_text = std::move(corrected);
      record.status = CorrectionRecord::Status::Applied;
    }
  } catch (const Error&) {
    record.corrected_text = block.text;
    record.status = CorrectionRecord::Status::KeptOriginalFailed;
  }
  return record;
}

std::string reconstruct(std::string_view original, const std::vector<Block>& blocks,
                        const std::map<std::size_t, std::string>& corrections) {
  for (const auto& [index, text] : corrections) {
    if (index >= blocks.size()) {
      throw InvalidBlockIndexError("correction refers to block " + std::to_string(index) +
                                   " but only " + std::to_string(blocks.size()) + " blocks exist");
    }
  }
  std::string out;
  out.reserve(original.size());
  std::size_t cursor = 0;
  for (const Block& block : blocks) {
    out.append(original.substr(cursor, block.span_start - cursor));
    auto it = corrections.find(block.index);
    if (it != corrections.end()) {
      out.append(it->second);
    } else {
      out.append(original.substr(block.span_start, block.span_end - block.span_start));
    }
    cursor = block.span_end;
  }
  out.append(original.substr(cursor));
  return out;
}

std::string reflect_response(const std::string& prompt, const std::string& r_prime,
                             const std::vector<Sample>& samples, const MitigationConfig& config,
                             const ModelRegistry& registry, const PromptTemplates& templates) {
  // First Ok sample from each distinct model, plan order, up to K.
  std::vector<const Sample*> representatives;
  std::set<std::string> seen_models;
  for (const Sample& sample : samples) {
    if (sample.status != SampleStatus::Ok) continue;
    if (!seen_models.insert(sample.model_id).second) continue;
    representatives.push_back(&sample);
    if (representatives.size() >= static_cast<std::size_t>(std::max(config.representative_samples, 1))) {
      break;
    }
  }
  if (representatives.empty()) return r_prime;

  ChatRequest request;
  request.model_id = config.improver_model_id;
  request.prompt_text = templates.render("reflection", {{"PROMPT", prompt},
                                                        {"RESPONSE", r_prime},
                                                        {"SAMPLES", format_samples(representatives)}});
  request.temperature = config.temperature;
  request.max_tokens = registry.spec(config.improver_model_id).max_output_tokens;

  try {
    ChatResponse reply = registry.complete(request);
    std::string final_text(trim(reply.text));
    if (final_text.empty()) return r_prime;
    return final_text;
  } catch (const Error&) {
    return r_prime;
  }
}

MitigationResult mitigate(const std::string& prompt, std::string_view original_response,
                          const ResponseAssessment& assessment, const std::vector<Block>& blocks,
                          const std::vector<Sample>& samples, const MitigationConfig& config,
                          const ModelRegistry& registry, const PromptTemplates& templates,
                          WorkerPool* pool) {
  if (assessment.blocks.size() != blocks.size()) {
    throw PreconditionFailedError("assessment does not match the block list");
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (assessment.blocks[i].block_index != blocks[i].index) {
      throw PreconditionFailedError("assessment does not match the block list");
    }
  }

  MitigationResult result;
  result.improver_model_id = config.improver_model_id;

  // positions into blocks/assessment.blocks
  std::vector<std::size_t> flagged;
  for (std::size_t i = 0; i < assessment.blocks.size(); ++i) {
    const BlockAssessment& block = assessment.blocks[i];
    bool eligible = config.correct_neutral ? is_flagged(block.label)
                                           : block.label == BlockLabel::Contradiction;
    if (eligible) flagged.push_back(i);
  }

  std::map<std::size_t, std::string> corrections;
  if (config.block_stage && !flagged.empty()) {
    std::vector<CorrectionRecord> records(flagged.size());
    parallel_for(pool, flagged.size(), [&](std::size_t i) {
      const BlockAssessment& block_assessment = assessment.blocks[flagged[i]];
      const ErrorSummary* summary = block_assessment.error_summary.has_value()
                                        ? &*block_assessment.error_summary
                                        : nullptr;
      records[i] = correct_block(prompt, blocks[flagged[i]], summary,
                                 block_assessment.judgments, config, registry, templates);
    });
    for (CorrectionRecord& record : records) {
      if (record.status == CorrectionRecord::Status::Applied) {
        corrections.emplace(record.block_index, record.corrected_text);
      }
      result.records.push_back(std::move(record));
    }
  }

  result.block_corrected_response = reconstruct(original_response, blocks, corrections);
  result.final_response =
      config.reflection_stage
          ? reflect_response(prompt, result.block_corrected_response, samples, config, registry,
                             templates)
          : result.block_corrected_response;
  return result;
}

}  // namespace crosscheck
