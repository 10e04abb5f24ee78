#include "crosscheck/scoring.hpp"

#include "crosscheck/errors.hpp"

namespace crosscheck {
namespace {

constexpr double kBoundaryEps = 1e-12;

}  // namespace

std::string_view response_label_name(ResponseLabel label) {
  return label == ResponseLabel::Factual ? "FACTUAL" : "NON_FACTUAL";
}

void ScoringConfig::validate() const {
  if (!(tau > 0.0 && tau < 0.5)) throw ConfigError("tau must lie in (0, 0.5)");
  if (weight_accurate < 0.0 || weight_neutral < 0.0 || weight_contradiction < 0.0) {
    throw ConfigError("judgment weights must be non-negative");
  }
  if (zero_weight_fallback_score < 0.0 || zero_weight_fallback_score > 1.0) {
    throw ConfigError("zero_weight_fallback_score must lie in [0, 1]");
  }
}

double label_to_score(JudgeLabel label) {
  switch (label) {
    case JudgeLabel::Accurate:
      return 0.0;
    case JudgeLabel::Neutral:
      return 0.5;
    case JudgeLabel::Contradiction:
      return 1.0;
    case JudgeLabel::Unknown:
      break;
  }
  throw UnknownLabelHasNoScoreError("UNKNOWN judgments have no score");
}

double label_to_weight(JudgeLabel label, const ScoringConfig& config) {
  switch (label) {
    case JudgeLabel::Accurate:
      return config.weight_accurate;
    case JudgeLabel::Neutral:
      return config.weight_neutral;
    case JudgeLabel::Contradiction:
      return config.weight_contradiction;
    case JudgeLabel::Unknown:
      return 0.0;
  }
  return 0.0;
}

double block_score(std::span<const PairJudgment> judgments, const ScoringConfig& config) {
  double weighted_sum = 0.0;
  double total_weight = 0.0;
  for (const PairJudgment& judgment : judgments) {
    if (judgment.label == JudgeLabel::Unknown) continue;
    double weight = label_to_weight(judgment.label, config);
    weighted_sum += weight * label_to_score(judgment.label);
    total_weight += weight;
  }
  if (total_weight <= 0.0) return config.zero_weight_fallback_score;
  return weighted_sum / total_weight;
}

BlockLabel block_label(double score, const ScoringConfig& config) {
  if (score <= config.tau + kBoundaryEps) return BlockLabel::Accurate;
  if (score >= 1.0 - config.tau - kBoundaryEps) return BlockLabel::Contradiction;
  return BlockLabel::Neutral;
}

BlockAssessment assess_block(std::size_t block_index, std::vector<PairJudgment> judgments,
                             const ScoringConfig& config) {
  BlockAssessment assessment;
  assessment.block_index = block_index;
  assessment.score = block_score(judgments, config);
  assessment.label = block_label(assessment.score, config);
  assessment.judgments = std::move(judgments);
  return assessment;
}

ResponseAssessment assess_response(std::string prompt_id, std::vector<BlockAssessment> blocks) {
  ResponseAssessment assessment;
  assessment.prompt_id = std::move(prompt_id);
  double sum = 0.0;
  bool any_contradiction = false;
  for (const BlockAssessment& block : blocks) {
    sum += block.score;
    if (block.label == BlockLabel::Contradiction) any_contradiction = true;
  }
  assessment.response_score = blocks.empty() ? 0.0 : sum / static_cast<double>(blocks.size());
  assessment.response_label =
      any_contradiction ? ResponseLabel::NonFactual : ResponseLabel::Factual;
  assessment.blocks = std::move(blocks);
  return assessment;
}

}  // namespace crosscheck
