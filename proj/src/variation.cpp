#include "crosscheck/variation.hpp"

#include <algorithm>

#include "crosscheck/errors.hpp"
#include "crosscheck/text_util.hpp"

namespace crosscheck {
namespace {

const char* template_name_for(VariationKind kind) {
  switch (kind) {
    case VariationKind::Rephrase:
      return "rephrase";
    case VariationKind::ExpandBefore:
      return "expand_before";
    case VariationKind::ExpandAfter:
      return "expand_after";
    case VariationKind::BreakDown:
      return "break_down";
    default:
      return nullptr;
  }
}

}  // namespace

bool is_static_variation(VariationKind kind) {
  return kind == VariationKind::Identity || kind == VariationKind::ZeroShotCoT ||
         kind == VariationKind::LongAnswer;
}

std::string_view variation_kind_name(VariationKind kind) {
  switch (kind) {
    case VariationKind::Identity:
      return "identity";
    case VariationKind::ZeroShotCoT:
      return "zero_shot_cot";
    case VariationKind::LongAnswer:
      return "long_answer";
    case VariationKind::Rephrase:
      return "rephrase";
    case VariationKind::ExpandBefore:
      return "expand_before";
    case VariationKind::ExpandAfter:
      return "expand_after";
    case VariationKind::BreakDown:
      return "break_down";
  }
  return "unknown";
}

std::optional<VariationKind> variation_kind_from_name(std::string_view name) {
  for (VariationKind kind : kAllVariationKinds) {
    if (iequals(variation_kind_name(kind), name)) return kind;
  }
  return std::nullopt;
}

PromptVariant apply_static(VariationKind kind, const std::string& prompt) {
  if (prompt.empty()) throw Error("prompt must be non-empty");
  if (!is_static_variation(kind)) {
    throw WrongKindError(std::string(variation_kind_name(kind)) +
                         " is an LLM-based variation, use apply_llm");
  }
  PromptVariant variant;
  variant.kind = kind;
  switch (kind) {
    case VariationKind::Identity:
      variant.text = prompt;
      break;
    case VariationKind::ZeroShotCoT:
      variant.text = prompt + "\n" + std::string(kCotSuffix);
      break;
    case VariationKind::LongAnswer:
      variant.text = std::string(kLongAnswerPrefix) + prompt;
      break;
    default:
      break;
  }
  return variant;
}

PromptVariant apply_llm(VariationKind kind, const std::string& prompt, const std::string& model_id,
                        const ModelRegistry& registry, const PromptTemplates& templates,
                        double temperature) {
  if (prompt.empty()) throw Error("prompt must be non-empty");
  const char* template_name = template_name_for(kind);
  if (template_name == nullptr) {
    throw WrongKindError(std::string(variation_kind_name(kind)) +
                         " is a static variation, use apply_static");
  }

  ChatRequest request;
  request.model_id = model_id;
  request.prompt_text = templates.render(template_name, {{"PROMPT", prompt}});
  request.temperature = temperature;
  request.max_tokens = registry.spec(model_id).max_output_tokens;
  ChatResponse reply = registry.complete(request);

  std::string reformulation(trim(reply.text));
  if (reformulation.empty()) {
    throw EmptyReformulationError("reformulation model returned a blank reply for " +
                                  std::string(variation_kind_name(kind)));
  }

  PromptVariant variant;
  variant.kind = kind;
  variant.reformulation_model_id = model_id;
  switch (kind) {
    case VariationKind::Rephrase:
    case VariationKind::BreakDown:
      variant.text = reformulation;
      break;
    case VariationKind::ExpandBefore:
      variant.text = reformulation + "\n" + prompt;
      break;
    case VariationKind::ExpandAfter:
      variant.text = prompt + "\n" + reformulation;
      break;
    default:
      break;
  }
  return variant;
}

std::vector<PromptVariant> variant_set(const std::string& prompt, const VariationConfig& config,
                                       const ModelRegistry& registry,
                                       const PromptTemplates& templates, WorkerPool* pool) {
  std::vector<std::optional<PromptVariant>> slots(config.enabled.size());

  parallel_for(pool, config.enabled.size(), [&](std::size_t i) {
    VariationKind kind = config.enabled[i];
    if (is_static_variation(kind)) {
      slots[i] = apply_static(kind, prompt);
      return;
    }
    try {
      slots[i] = apply_llm(kind, prompt, config.reformulation_model_id, registry, templates,
                           config.temperature);
    } catch (const Error&) {
      if (!config.replace_failed_with_identity) return;  // dropped
      PromptVariant fallback;
      fallback.kind = kind;
      fallback.text = prompt;
      fallback.reformulation_model_id = config.reformulation_model_id;
      fallback.identity_fallback = true;
      slots[i] = fallback;
    }
  });

  std::vector<PromptVariant> variants;
  variants.reserve(slots.size());
  for (auto& slot : slots) {
    if (!slot) continue;
    slot->source_prompt_id = config.source_prompt_id;
    variants.push_back(std::move(*slot));
  }
  // Declaration order, independent of the enabled list's order.
  std::stable_sort(variants.begin(), variants.end(), [](const auto& a, const auto& b) {
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });
  return variants;
}

}  // namespace crosscheck
