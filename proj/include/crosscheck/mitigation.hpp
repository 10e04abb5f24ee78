#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crosscheck/gateway.hpp"
#include "crosscheck/judge.hpp"
#include "crosscheck/sampling.hpp"
#include "crosscheck/scoring.hpp"
#include "crosscheck/segmentation.hpp"
#include "crosscheck/templates.hpp"
#include "crosscheck/worker_pool.hpp"

namespace crosscheck {

struct CorrectionRecord {
  enum class Status { Applied, KeptOriginalBlankReply, KeptOriginalFailed };

  std::size_t block_index = 0;
  std::string original_text;
  std::string corrected_text;
  std::string error_summary_text;
  std::vector<std::pair<std::size_t, std::string>> evidence;  // (sample index, rationale)
  Status status = Status::Applied;
  std::string model_id;
};

std::string_view correction_status_name(CorrectionRecord::Status status);

struct MitigationConfig {
  std::string improver_model_id;
  bool block_stage = true;
  bool reflection_stage = true;
  bool correct_neutral = true;  // false restricts correction to CONTRADICTION blocks
  int representative_samples = 3;
  double temperature = 1.0;
};

struct MitigationResult {
  std::string block_corrected_response;  // r'
  std::string final_response;            // r''
  std::vector<CorrectionRecord> records;
  std::string improver_model_id;
};

// Rewrites one flagged block. A blank reply or a gateway failure keeps the
// original text, recorded in the status.
CorrectionRecord correct_block(const std::string& prompt, const Block& block,
                               const ErrorSummary* summary,
                               std::span<const PairJudgment> judgments,
                               const MitigationConfig& config, const ModelRegistry& registry,
                               const PromptTemplates& templates);

// Joins blocks in index order, substituting corrected texts and preserving the
// original inter-block gap characters. Throws InvalidBlockIndexError for a
// correction key that names no block.
std::string reconstruct(std::string_view original, const std::vector<Block>& blocks,
                        const std::map<std::size_t, std::string>& corrections);

// Cross-model reflection over r' and up to K representative samples (first Ok
// sample per distinct model). Degrades to r' when the improver is unreachable
// or replies blank.
std::string reflect_response(const std::string& prompt, const std::string& r_prime,
                             const std::vector<Sample>& samples, const MitigationConfig& config,
                             const ModelRegistry& registry, const PromptTemplates& templates);

// Block-correction stage then reflection stage, per config flags.
MitigationResult mitigate(const std::string& prompt, std::string_view original_response,
                          const ResponseAssessment& assessment, const std::vector<Block>& blocks,
                          const std::vector<Sample>& samples, const MitigationConfig& config,
                          const ModelRegistry& registry, const PromptTemplates& templates,
                          WorkerPool* pool = nullptr);

}  // namespace crosscheck
