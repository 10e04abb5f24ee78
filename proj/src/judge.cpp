#include "crosscheck/judge.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "crosscheck/errors.hpp"
#include "crosscheck/text_util.hpp"

namespace crosscheck {
namespace {

struct TokenSpec {
  JudgeLabel label;
  std::string_view token;
};

constexpr TokenSpec kTokens[] = {
    {JudgeLabel::Accurate, "ACCURATE"},
    {JudgeLabel::Contradiction, "CONTRADICTION"},
    {JudgeLabel::Neutral, "NEUTRAL"},
};

bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// First word-bounded, case-insensitive occurrence of token.
std::size_t find_token(std::string_view text, std::string_view token) {
  std::string haystack = to_lower(text);
  std::string needle = to_lower(token);
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
    std::size_t after = pos + needle.size();
    bool right_ok = after >= haystack.size() || !is_word_char(haystack[after]);
    if (left_ok && right_ok) return pos;
    ++pos;
  }
  return std::string_view::npos;
}

// Trims separator punctuation left over after removing the label token.
std::string_view trim_separators(std::string_view s) {
  auto strip_front = [&](std::string_view text) {
    while (!text.empty()) {
      char c = text.front();
      if (is_ascii_space(c) || c == '-' || c == ':' || c == ',' || c == '.' || c == ';' ||
          c == '*' || c == ')' || c == '=') {
        text.remove_prefix(1);
        continue;
      }
      if (text.size() >= 3 && (text.substr(0, 3) == "\xE2\x80\x94" ||    // em dash
                               text.substr(0, 3) == "\xE2\x80\x93")) {   // en dash
        text.remove_prefix(3);
        continue;
      }
      break;
    }
    return text;
  };
  s = strip_front(s);
  while (!s.empty() && (is_ascii_space(s.back()) || s.back() == '*')) s.remove_suffix(1);
  return s;
}

// "LABEL:" / "label =" style field introducer on a line; returns the value
// start or npos. Tolerates markdown asterisks around the word.
std::size_t label_field_value(std::string_view line) {
  std::size_t pos = find_token(line, "label");
  if (pos == std::string_view::npos) return std::string_view::npos;
  std::size_t i = pos + 5;
  while (i < line.size() && (line[i] == '*' || is_ascii_space(line[i]))) ++i;
  if (i < line.size() && (line[i] == ':' || line[i] == '=')) return i + 1;
  return std::string_view::npos;
}

// Strips a "REASON:" style prefix from a rationale continuation line.
std::string_view strip_reason_prefix(std::string_view line) {
  for (std::string_view word : {"reason", "rationale", "explanation"}) {
    std::size_t pos = find_token(line, word);
    if (pos == std::string_view::npos) continue;
    // only accept as a prefix: nothing but decoration before the word
    bool prefix = true;
    for (std::size_t i = 0; i < pos; ++i) {
      if (!is_ascii_space(line[i]) && line[i] != '*' && line[i] != '-') prefix = false;
    }
    if (!prefix) continue;
    std::size_t i = pos + word.size();
    while (i < line.size() && (line[i] == '*' || is_ascii_space(line[i]))) ++i;
    if (i < line.size() && (line[i] == ':' || line[i] == '=')) return trim(line.substr(i + 1));
  }
  return trim(line);
}

// Exactly-one-distinct-token rule; returns the matched token position too.
std::optional<std::pair<JudgeLabel, std::size_t>> single_token(std::string_view text) {
  std::optional<std::pair<JudgeLabel, std::size_t>> found;
  for (const TokenSpec& spec : kTokens) {
    std::size_t pos = find_token(text, spec.token);
    if (pos == std::string_view::npos) continue;
    if (found) return std::nullopt;  // ambiguous
    found = {spec.label, pos};
  }
  return found;
}

std::string join_rationale(std::string_view head, std::span<const std::string_view> rest) {
  std::string rationale(trim_separators(head));
  for (std::string_view line : rest) {
    std::string_view cleaned = strip_reason_prefix(line);
    if (cleaned.empty()) continue;
    if (!rationale.empty()) rationale += "\n";
    rationale += std::string(cleaned);
  }
  return rationale;
}

std::string token_length_suffix(JudgeLabel label) {
  for (const TokenSpec& spec : kTokens) {
    if (spec.label == label) return std::string(spec.token);
  }
  return {};
}

ChatResponse ask(const std::string& model_id, std::string prompt, double temperature,
                 const ModelRegistry& registry) {
  ChatRequest request;
  request.model_id = model_id;
  request.prompt_text = std::move(prompt);
  request.temperature = temperature;
  request.max_tokens = registry.spec(model_id).max_output_tokens;
  return registry.complete(request);
}

std::string format_blocks_list(const std::vector<Block>& blocks) {
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    out += std::to_string(i + 1) + ". " + blocks[i].text + "\n";
  }
  return out;
}

}  // namespace

std::string_view judge_label_name(JudgeLabel label) {
  switch (label) {
    case JudgeLabel::Accurate:
      return "ACCURATE";
    case JudgeLabel::Contradiction:
      return "CONTRADICTION";
    case JudgeLabel::Neutral:
      return "NEUTRAL";
    case JudgeLabel::Unknown:
      return "UNKNOWN";
  }
  return "UNKNOWN";
}

std::string_view block_label_name(BlockLabel label) {
  switch (label) {
    case BlockLabel::Accurate:
      return "ACCURATE";
    case BlockLabel::Neutral:
      return "NEUTRAL";
    case BlockLabel::Contradiction:
      return "CONTRADICTION";
  }
  return "NEUTRAL";
}

bool is_flagged(BlockLabel label) {
  return label == BlockLabel::Contradiction || label == BlockLabel::Neutral;
}

std::pair<JudgeLabel, std::string> parse_judge_label(std::string_view raw) {
  std::vector<std::string_view> lines = split_lines(raw);

  // Structured field first.
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::size_t value_start = label_field_value(lines[i]);
    if (value_start == std::string_view::npos) continue;
    std::string_view value = lines[i].substr(value_start);
    auto hit = single_token(value);
    if (!hit) break;  // field present but absent/ambiguous token: fall through
    std::string_view after = value.substr(hit->second + token_length_suffix(hit->first).size());
    std::span<const std::string_view> rest(lines.data() + i + 1, lines.size() - i - 1);
    return {hit->first, join_rationale(after, rest)};
  }

  // Bare token anywhere; must be unambiguous across the whole reply.
  auto hit = single_token(raw);
  if (!hit) return {JudgeLabel::Unknown, ""};

  // Rationale: remainder of the token's line, then following lines.
  std::size_t token_end = hit->second + token_length_suffix(hit->first).size();
  std::size_t line_end = raw.find('\n', token_end);
  if (line_end == std::string_view::npos) line_end = raw.size();
  std::string_view after = raw.substr(token_end, line_end - token_end);
  std::vector<std::string_view> rest_lines =
      line_end < raw.size() ? split_lines(raw.substr(line_end + 1)) : std::vector<std::string_view>{};
  return {hit->first, join_rationale(after, rest_lines)};
}

PairJudgment judge_pair(const std::string& prompt, const Block& block, const Sample& sample,
                        const JudgeConfig& config, const ModelRegistry& registry,
                        const PromptTemplates& templates) {
  PairJudgment judgment;
  judgment.block_index = block.index;
  judgment.sample_index = sample.index;
  try {
    ChatResponse reply =
        ask(config.judge_model_id,
            templates.render("judge_pair",
                             {{"PROMPT", prompt}, {"SAMPLE", sample.text}, {"BLOCK", block.text}}),
            config.temperature, registry);
    judgment.raw_reply = reply.text;
    auto [label, rationale] = parse_judge_label(reply.text);
    judgment.label = label;
    judgment.rationale = std::move(rationale);
  } catch (const Error& ex) {
    judgment.label = JudgeLabel::Unknown;
    judgment.raw_reply = std::string("judge request failed: ") + ex.what();
  }
  return judgment;
}

std::vector<PairJudgment> judge_batch(const std::string& prompt, const std::vector<Block>& blocks,
                                      const Sample& sample, const JudgeConfig& config,
                                      const ModelRegistry& registry,
                                      const PromptTemplates& templates) {
  if (blocks.empty()) throw PreconditionFailedError("judge_batch requires at least one block");

  auto fallback = [&]() -> std::vector<PairJudgment> {
    std::vector<PairJudgment> judgments;
    judgments.reserve(blocks.size());
    if (config.on_batch_mismatch == JudgeConfig::BatchMismatch::PerPairFallback) {
      for (const Block& block : blocks) {
        judgments.push_back(judge_pair(prompt, block, sample, config, registry, templates));
      }
    } else {
      for (const Block& block : blocks) {
        PairJudgment judgment;
        judgment.block_index = block.index;
        judgment.sample_index = sample.index;
        judgment.label = JudgeLabel::Unknown;
        judgment.raw_reply = "batch reply did not align with the block list";
        judgments.push_back(std::move(judgment));
      }
    }
    return judgments;
  };

  std::string raw;
  try {
    ChatResponse reply =
        ask(config.judge_model_id,
            templates.render("judge_batch", {{"PROMPT", prompt},
                                             {"SAMPLE", sample.text},
                                             {"BLOCKS", format_blocks_list(blocks)}}),
            config.temperature, registry);
    raw = reply.text;
  } catch (const Error&) {
    return fallback();
  }

  // Parse numbered items; unnumbered lines continue the previous item.
  std::vector<std::pair<std::size_t, std::string>> items;  // (1-based number, text)
  for (std::string_view line : split_lines(raw)) {
    std::string_view body = trim(line);
    std::size_t digits = 0;
    while (digits < body.size() && std::isdigit(static_cast<unsigned char>(body[digits]))) {
      ++digits;
    }
    bool numbered = false;
    std::size_t value_start = 0;
    if (digits > 0 && digits < body.size()) {
      char sep = body[digits];
      if (sep == ':' || sep == '.' || sep == ')' || sep == '-') {
        numbered = true;
        value_start = digits + 1;
      }
    }
    if (numbered) {
      std::size_t number = 0;
      for (std::size_t i = 0; i < digits; ++i) number = number * 10 + (body[i] - '0');
      items.emplace_back(number, std::string(trim(body.substr(value_start))));
    } else if (!items.empty() && !body.empty()) {
      items.back().second += "\n" + std::string(body);
    }
  }

  if (items.size() != blocks.size()) return fallback();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].first != i + 1) return fallback();
  }

  std::vector<PairJudgment> judgments;
  judgments.reserve(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    PairJudgment judgment;
    judgment.block_index = blocks[i].index;
    judgment.sample_index = sample.index;
    judgment.raw_reply = items[i].second;
    auto [label, rationale] = parse_judge_label(items[i].second);
    judgment.label = label;
    judgment.rationale = std::move(rationale);
    judgments.push_back(std::move(judgment));
  }
  return judgments;
}

ErrorSummary summarize_errors(const std::string& prompt, const Block& block,
                              BlockLabel aggregate_label, std::span<const PairJudgment> judgments,
                              const JudgeConfig& config, const ModelRegistry& registry,
                              const PromptTemplates& templates) {
  if (!is_flagged(aggregate_label)) {
    throw PreconditionFailedError("error summaries exist only for CONTRADICTION or NEUTRAL blocks");
  }

  ErrorSummary summary;
  summary.block_index = block.index;

  std::string evidence;
  std::string joined_rationales;
  for (const PairJudgment& judgment : judgments) {
    if (judgment.label != JudgeLabel::Contradiction) continue;
    summary.evidence_sample_indices.push_back(judgment.sample_index);
    std::string line = "- sample " + std::to_string(judgment.sample_index) + ": " +
                       (judgment.rationale.empty() ? "contradicts this sentence"
                                                   : judgment.rationale);
    evidence += line + "\n";
    if (!judgment.rationale.empty()) {
      if (!joined_rationales.empty()) joined_rationales += "; ";
      joined_rationales += judgment.rationale;
    }
  }
  if (evidence.empty()) evidence = "- no direct contradictions; samples could not verify it\n";

  try {
    ChatResponse reply =
        ask(config.judge_model_id,
            templates.render("error_summary",
                             {{"PROMPT", prompt}, {"BLOCK", block.text}, {"EVIDENCE", evidence}}),
            config.temperature, registry);
    summary.text = std::string(trim(reply.text));
    if (summary.text.empty()) summary.text = joined_rationales;
  } catch (const Error&) {
    summary.text = joined_rationales;
  }
  return summary;
}

}  // namespace crosscheck
