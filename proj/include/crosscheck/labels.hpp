#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace crosscheck {

// Per-pair judge verdicts. Unknown marks unparseable or failed judge replies
// only; it carries weight 0 in scoring.
enum class JudgeLabel { Accurate, Contradiction, Neutral, Unknown };

std::string_view judge_label_name(JudgeLabel label);

struct PairJudgment {
  std::size_t block_index = 0;
  std::size_t sample_index = 0;
  JudgeLabel label = JudgeLabel::Unknown;
  std::string rationale;
  std::string raw_reply;
};

struct ErrorSummary {
  std::size_t block_index = 0;
  std::string text;
  std::vector<std::size_t> evidence_sample_indices;
};

}  // namespace crosscheck
