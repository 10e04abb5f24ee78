#include "crosscheck/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>

#include <json.hpp>

#include "crosscheck/errors.hpp"
#include "crosscheck/text_util.hpp"

namespace crosscheck {
namespace {

using nlohmann::json;

double safe_ratio(double numerator, double denominator) {
  return denominator > 0.0 ? numerator / denominator : 0.0;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(values.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

json parse_jsonl_line(const std::string& line, const std::string& path, std::size_t line_number) {
  try {
    return json::parse(line);
  } catch (const json::exception& ex) {
    throw SchemaViolationError(std::string("invalid JSON: ") + ex.what(), path, line_number);
  }
}

std::string require_string(const json& record, const char* field, const std::string& path,
                           std::size_t line_number) {
  if (!record.contains(field) || !record[field].is_string()) {
    throw SchemaViolationError(std::string("missing or non-string field '") + field + "'", path,
                               line_number);
  }
  return record[field].get<std::string>();
}

}  // namespace

std::string_view gold_label_name(GoldLabel label) {
  return label == GoldLabel::Factual ? "factual" : "non-factual";
}

bool predicted_positive(BlockLabel label) { return label == BlockLabel::Contradiction; }

ConfusionCounts count_confusion(const std::vector<bool>& pred_positive,
                                const std::vector<bool>& gold_positive) {
  if (pred_positive.size() != gold_positive.size()) {
    throw LengthMismatchError("prediction and gold sequences differ in length");
  }
  ConfusionCounts counts;
  for (std::size_t i = 0; i < pred_positive.size(); ++i) {
    if (pred_positive[i] && gold_positive[i]) ++counts.tp;
    if (pred_positive[i] && !gold_positive[i]) ++counts.fp;
    if (!pred_positive[i] && !gold_positive[i]) ++counts.tn;
    if (!pred_positive[i] && gold_positive[i]) ++counts.fn;
  }
  return counts;
}

double f1_from_precision_recall(double precision, double recall) {
  return safe_ratio(2.0 * precision * recall, precision + recall);
}

DetectionMetrics metrics_from_confusion(const ConfusionCounts& counts) {
  DetectionMetrics metrics;
  metrics.counts = counts;
  double tp = static_cast<double>(counts.tp);
  double fp = static_cast<double>(counts.fp);
  double tn = static_cast<double>(counts.tn);
  double fn = static_cast<double>(counts.fn);
  metrics.precision = 100.0 * safe_ratio(tp, tp + fp);
  metrics.recall = 100.0 * safe_ratio(tp, tp + fn);
  metrics.f1 = f1_from_precision_recall(metrics.precision, metrics.recall);
  double tpr = safe_ratio(tp, tp + fn);
  double tnr = safe_ratio(tn, tn + fp);
  metrics.balanced_accuracy = 100.0 * (tpr + tnr) / 2.0;
  return metrics;
}

DetectionMetrics detection_metrics(const std::vector<BlockLabel>& pred,
                                   const std::vector<GoldLabel>& gold) {
  if (pred.size() != gold.size()) {
    throw LengthMismatchError("prediction and gold sequences differ in length");
  }
  std::vector<bool> pred_positive(pred.size());
  std::vector<bool> gold_positive(gold.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred_positive[i] = predicted_positive(pred[i]);
    gold_positive[i] = gold[i] == GoldLabel::NonFactual;
  }
  return metrics_from_confusion(count_confusion(pred_positive, gold_positive));
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw LengthMismatchError("correlation inputs differ in length");
  std::size_t n = xs.size();
  if (n < 2) return std::nullopt;
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = xs[i] - mean_x;
    double dy = ys[i] - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;  // constant sequence
  return sxy / std::sqrt(sxx * syy);
}

std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw LengthMismatchError("correlation inputs differ in length");
  if (xs.size() < 2) return std::nullopt;
  std::vector<double> rx = average_ranks(xs);
  std::vector<double> ry = average_ranks(ys);
  return pearson(rx, ry);
}

std::optional<std::string> extract_answer_choice(const std::string& response,
                                                 const std::vector<std::string>& valid_letters) {
  auto is_valid = [&](char c) -> std::optional<std::string> {
    std::string upper(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    for (const std::string& letter : valid_letters) {
      if (iequals(letter, upper)) return upper;
    }
    return std::nullopt;
  };

  // Explicit declarations outrank trailing standalone letters; within each
  // tier the last match wins.
  static const std::regex kDeclaration(
      R"(answer\s*(?:is\b|[:=])\s*\**\s*\(?\s*([A-Za-z])\b\s*\)?)",
      std::regex::icase);
  std::optional<std::string> best;
  for (auto it = std::sregex_iterator(response.begin(), response.end(), kDeclaration);
       it != std::sregex_iterator(); ++it) {
    if (auto letter = is_valid((*it)[1].str()[0])) best = letter;
  }
  if (best) return best;

  static const std::regex kStandalone(R"(\(\s*([A-Za-z])\s*\))");
  for (auto it = std::sregex_iterator(response.begin(), response.end(), kStandalone);
       it != std::sregex_iterator(); ++it) {
    if (auto letter = is_valid((*it)[1].str()[0])) best = letter;
  }
  return best;
}

double accuracy_delta(double new_acc, double base_acc) {
  if (base_acc <= 0.0) throw Error("baseline accuracy must be positive");
  double delta = (new_acc - base_acc) / base_acc * 100.0;
  return std::round(delta * 10.0) / 10.0;
}

std::vector<AnnotatedResponse> load_annotated(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaViolationError("cannot open file: " + path);

  std::vector<AnnotatedResponse> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    json record = parse_jsonl_line(line, path, line_number);

    AnnotatedResponse annotated;
    annotated.prompt_id = require_string(record, "prompt_id", path, line_number);
    annotated.prompt = require_string(record, "prompt", path, line_number);
    annotated.response = require_string(record, "response", path, line_number);
    annotated.domain = record.value("domain", std::string());

    if (!record.contains("segments") || !record["segments"].is_array() ||
        record["segments"].empty()) {
      throw SchemaViolationError("missing or empty 'segments' array", path, line_number);
    }

    // Segments must cover the response in order, whitespace-only gaps between.
    std::size_t cursor = 0;
    for (const auto& seg_json : record["segments"]) {
      AnnotatedSegment segment;
      if (!seg_json.is_object()) {
        throw SchemaViolationError("segment is not an object", path, line_number);
      }
      segment.text = require_string(seg_json, "text", path, line_number);
      std::string gold = require_string(seg_json, "gold_label", path, line_number);
      if (iequals(gold, "factual")) {
        segment.gold = GoldLabel::Factual;
      } else if (iequals(gold, "non-factual") || iequals(gold, "non_factual")) {
        segment.gold = GoldLabel::NonFactual;
      } else {
        throw SchemaViolationError("gold_label must be 'factual' or 'non-factual', got '" + gold +
                                       "'",
                                   path, line_number);
      }

      std::size_t found = annotated.response.find(segment.text, cursor);
      if (segment.text.empty() || found == std::string::npos ||
          !trim(std::string_view(annotated.response).substr(cursor, found - cursor)).empty()) {
        throw SchemaViolationError("segments do not concatenate to the response", path,
                                   line_number);
      }
      segment.span_start = found;
      segment.span_end = found + segment.text.size();
      cursor = segment.span_end;
      annotated.segments.push_back(std::move(segment));
    }
    if (!trim(std::string_view(annotated.response).substr(cursor)).empty()) {
      throw SchemaViolationError("segments do not cover the full response", path, line_number);
    }
    records.push_back(std::move(annotated));
  }
  return records;
}

std::vector<McqItem> load_mcq(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaViolationError("cannot open file: " + path);

  std::vector<McqItem> items;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    json record = parse_jsonl_line(line, path, line_number);

    McqItem item;
    item.item_id = require_string(record, "item_id", path, line_number);
    item.question = require_string(record, "question", path, line_number);
    item.gold_letter = require_string(record, "gold_letter", path, line_number);
    item.reference_explanation = record.value("reference_explanation", std::string());

    if (!record.contains("choices") || !record["choices"].is_array() ||
        record["choices"].empty()) {
      throw SchemaViolationError("missing or empty 'choices' array", path, line_number);
    }
    for (const auto& choice_json : record["choices"]) {
      McqChoice choice;
      choice.letter = require_string(choice_json, "letter", path, line_number);
      choice.text = require_string(choice_json, "text", path, line_number);
      for (const McqChoice& existing : item.choices) {
        if (iequals(existing.letter, choice.letter)) {
          throw SchemaViolationError("duplicate choice letter '" + choice.letter + "'", path,
                                     line_number);
        }
      }
      item.choices.push_back(std::move(choice));
    }

    bool gold_found = false;
    for (const McqChoice& choice : item.choices) {
      if (iequals(choice.letter, item.gold_letter)) gold_found = true;
    }
    if (!gold_found) {
      throw SchemaViolationError("gold_letter '" + item.gold_letter + "' is not a choice", path,
                                 line_number);
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<std::optional<std::size_t>> align_blocks_to_segments(
    const std::vector<Block>& blocks, const std::vector<AnnotatedSegment>& segments) {
  std::vector<std::optional<std::size_t>> alignment(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    std::size_t best_segment = 0;
    std::size_t best_overlap = 0;
    for (std::size_t s = 0; s < segments.size(); ++s) {
      std::size_t lo = std::max(blocks[b].span_start, segments[s].span_start);
      std::size_t hi = std::min(blocks[b].span_end, segments[s].span_end);
      std::size_t overlap = hi > lo ? hi - lo : 0;
      if (overlap > best_overlap) {
        best_overlap = overlap;
        best_segment = s;
      }
    }
    if (best_overlap > 0) alignment[b] = best_segment;
  }
  return alignment;
}

}  // namespace crosscheck
