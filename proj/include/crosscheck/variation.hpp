#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crosscheck/gateway.hpp"
#include "crosscheck/templates.hpp"
#include "crosscheck/worker_pool.hpp"

namespace crosscheck {

// Declaration order is the stable output order of variant_set. The first
// three are static text transformations; the rest call a reformulation model.
enum class VariationKind {
  Identity,
  ZeroShotCoT,
  LongAnswer,
  Rephrase,
  ExpandBefore,
  ExpandAfter,
  BreakDown,
};

inline constexpr std::array<VariationKind, 7> kAllVariationKinds = {
    VariationKind::Identity,     VariationKind::ZeroShotCoT, VariationKind::LongAnswer,
    VariationKind::Rephrase,     VariationKind::ExpandBefore, VariationKind::ExpandAfter,
    VariationKind::BreakDown,
};

bool is_static_variation(VariationKind kind);
std::string_view variation_kind_name(VariationKind kind);
std::optional<VariationKind> variation_kind_from_name(std::string_view name);

inline constexpr std::string_view kCotSuffix = "Let's think step by step";
inline constexpr std::string_view kLongAnswerPrefix =
    "Provide an answer with at least a 1000 words to the following prompt: ";

struct PromptVariant {
  VariationKind kind = VariationKind::Identity;
  std::string text;
  std::string source_prompt_id;
  std::string reformulation_model_id;  // empty for static variants
  bool identity_fallback = false;      // LLM variant replaced by the original prompt
};

struct VariationConfig {
  std::vector<VariationKind> enabled{kAllVariationKinds.begin(), kAllVariationKinds.end()};
  std::string reformulation_model_id;
  bool replace_failed_with_identity = true;
  double temperature = 1.0;
  std::string source_prompt_id;
};

// Pure text transformation; throws WrongKindError for LLM-based kinds.
PromptVariant apply_static(VariationKind kind, const std::string& prompt);

// Reformulates via the model named in `model_id`; throws EmptyReformulationError
// on a blank reply and propagates gateway errors.
PromptVariant apply_llm(VariationKind kind, const std::string& prompt, const std::string& model_id,
                        const ModelRegistry& registry, const PromptTemplates& templates,
                        double temperature = 1.0);

// One variant per enabled kind, in declaration order regardless of completion
// order. LLM failures become Identity-texted fallbacks (flagged with the
// original kind) or are dropped, per config.
std::vector<PromptVariant> variant_set(const std::string& prompt, const VariationConfig& config,
                                       const ModelRegistry& registry,
                                       const PromptTemplates& templates,
                                       WorkerPool* pool = nullptr);

}  // namespace crosscheck
