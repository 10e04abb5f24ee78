#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crosscheck/gateway.hpp"
#include "crosscheck/labels.hpp"
#include "crosscheck/sampling.hpp"
#include "crosscheck/segmentation.hpp"
#include "crosscheck/templates.hpp"

namespace crosscheck {

enum class BlockLabel { Accurate, Neutral, Contradiction };

std::string_view block_label_name(BlockLabel label);
bool is_flagged(BlockLabel label);  // Contradiction or Neutral

struct JudgeConfig {
  std::string judge_model_id;
  double temperature = 1.0;
  enum class BatchMismatch { PerPairFallback, AllUnknown };
  BatchMismatch on_batch_mismatch = BatchMismatch::PerPairFallback;
};

// Case-insensitive label extraction: a "LABEL:"-style field naming exactly one
// of the three tokens wins, else a whole-reply scan that must find exactly one
// distinct token; anything else is Unknown. Text after the matched token (and
// any following lines, with REASON:-style prefixes stripped) is the rationale.
std::pair<JudgeLabel, std::string> parse_judge_label(std::string_view raw);

// Judges one (block, sample) pair. Gateway failures become Unknown judgments
// with the failure recorded in raw_reply; never throws past this boundary.
PairJudgment judge_pair(const std::string& prompt, const Block& block, const Sample& sample,
                        const JudgeConfig& config, const ModelRegistry& registry,
                        const PromptTemplates& templates);

// Judges every block against one sample in a single query. A reply whose
// numbered items do not line up with the block list falls back to per-pair
// judging or marks all pairs Unknown, per config.
std::vector<PairJudgment> judge_batch(const std::string& prompt, const std::vector<Block>& blocks,
                                      const Sample& sample, const JudgeConfig& config,
                                      const ModelRegistry& registry,
                                      const PromptTemplates& templates);

// Summarizes what is wrong with a flagged block from its contradiction
// rationales. Requires a flagged aggregate label; on gateway failure the
// summary text degrades to the joined rationales.
ErrorSummary summarize_errors(const std::string& prompt, const Block& block,
                              BlockLabel aggregate_label, std::span<const PairJudgment> judgments,
                              const JudgeConfig& config, const ModelRegistry& registry,
                              const PromptTemplates& templates);

}  // namespace crosscheck
