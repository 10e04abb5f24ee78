#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crosscheck/judge.hpp"
#include "crosscheck/labels.hpp"

namespace crosscheck {

enum class ResponseLabel { Factual, NonFactual };

std::string_view response_label_name(ResponseLabel label);

struct ScoringConfig {
  double tau = 0.33;
  double weight_accurate = 2.0;
  double weight_neutral = 1.0;
  double weight_contradiction = 4.0;
  // Unknown always weighs 0 and is excluded from aggregation.
  double zero_weight_fallback_score = 0.5;

  void validate() const;
};

// ACCURATE -> 0, NEUTRAL -> 0.5, CONTRADICTION -> 1.
double label_to_score(JudgeLabel label);

double label_to_weight(JudgeLabel label, const ScoringConfig& config);

// Weighted mean of judgment scores; the fallback score when total weight is
// zero (all Unknown or no judgments).
double block_score(std::span<const PairJudgment> judgments, const ScoringConfig& config);

// score <= tau -> ACCURATE, score >= 1-tau -> CONTRADICTION, else NEUTRAL.
// Boundary comparisons carry a 1e-12 tolerance.
BlockLabel block_label(double score, const ScoringConfig& config);

struct BlockAssessment {
  std::size_t block_index = 0;
  std::vector<PairJudgment> judgments;
  double score = 0.0;
  BlockLabel label = BlockLabel::Accurate;
  std::optional<ErrorSummary> error_summary;
};

BlockAssessment assess_block(std::size_t block_index, std::vector<PairJudgment> judgments,
                             const ScoringConfig& config);

struct ResponseAssessment {
  std::string prompt_id;
  std::vector<BlockAssessment> blocks;
  double response_score = 0.0;
  ResponseLabel response_label = ResponseLabel::Factual;
};

// Mean of block scores (empty list -> 0, FACTUAL); NON_FACTUAL iff any block
// is labeled CONTRADICTION.
ResponseAssessment assess_response(std::string prompt_id, std::vector<BlockAssessment> blocks);

}  // namespace crosscheck
