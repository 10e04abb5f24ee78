#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crosscheck/judge.hpp"
#include "crosscheck/scoring.hpp"
#include "crosscheck/segmentation.hpp"

namespace crosscheck {

enum class GoldLabel { Factual, NonFactual };

std::string_view gold_label_name(GoldLabel label);

struct AnnotatedSegment {
  std::string text;
  GoldLabel gold = GoldLabel::Factual;
  std::size_t span_start = 0;
  std::size_t span_end = 0;
};

struct AnnotatedResponse {
  std::string prompt_id;
  std::string prompt;
  std::string response;
  std::string domain;
  std::vector<AnnotatedSegment> segments;
};

struct McqChoice {
  std::string letter;
  std::string text;
};

struct McqItem {
  std::string item_id;
  std::string question;
  std::vector<McqChoice> choices;
  std::string gold_letter;
  std::string reference_explanation;
};

// Positive class = hallucinated (non-factual).
struct ConfusionCounts {
  long long tp = 0;
  long long fp = 0;
  long long tn = 0;
  long long fn = 0;

  long long total() const { return tp + fp + tn + fn; }
};

// All values are percentages; correlations are raw in [-1, 1].
struct DetectionMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double balanced_accuracy = 0.0;
  std::optional<double> pearson;
  std::optional<double> spearman;
  ConfusionCounts counts;
};

// NEUTRAL predictions map to the negative (factual) class.
bool predicted_positive(BlockLabel label);

ConfusionCounts count_confusion(const std::vector<bool>& pred_positive,
                                const std::vector<bool>& gold_positive);

// 2PR/(P+R), 0 when P+R is 0; P and R given as percentages.
double f1_from_precision_recall(double precision, double recall);

DetectionMetrics metrics_from_confusion(const ConfusionCounts& counts);

// Throws LengthMismatchError when the sequences differ in length.
DetectionMetrics detection_metrics(const std::vector<BlockLabel>& pred,
                                   const std::vector<GoldLabel>& gold);

// Product-moment / rank correlation; nullopt for constant or too-short input.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);
std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys);

// Scans for explicit answer declarations ("the answer is (C)", "Answer: b"),
// last match wins; falls back to the last standalone "(X)". Absent when no
// valid letter is found.
std::optional<std::string> extract_answer_choice(const std::string& response,
                                                 const std::vector<std::string>& valid_letters);

// (new - base) / base * 100, rounded to one decimal. Requires base > 0.
double accuracy_delta(double new_acc, double base_acc);

// JSON-lines loaders; malformed rows raise SchemaViolationError with the line.
std::vector<AnnotatedResponse> load_annotated(const std::string& path);
std::vector<McqItem> load_mcq(const std::string& path);

// Maps each predicted block to the gold segment with maximal character-span
// overlap; nullopt for pathological zero-overlap blocks.
std::vector<std::optional<std::size_t>> align_blocks_to_segments(
    const std::vector<Block>& blocks, const std::vector<AnnotatedSegment>& segments);

}  // namespace crosscheck
