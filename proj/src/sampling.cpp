#include "crosscheck/sampling.hpp"

#include <random>

#include "crosscheck/errors.hpp"

namespace crosscheck {

std::string_view sample_status_name(SampleStatus status) {
  return status == SampleStatus::Ok ? "ok" : "failed";
}

std::vector<std::size_t> shuffled_indices(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> indices(count);
  for (std::size_t i = 0; i < count; ++i) indices[i] = i;
  std::mt19937_64 gen(seed);
  for (std::size_t i = count; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(gen() % i);
    std::swap(indices[i - 1], indices[j]);
  }
  return indices;
}

std::vector<std::pair<std::size_t, std::size_t>> round_robin_slots(std::size_t count,
                                                                   std::size_t num_variants,
                                                                   std::size_t num_models) {
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  slots.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    slots.emplace_back(i % num_variants, i % num_models);
  }
  return slots;
}

std::vector<SamplePlanEntry> build_plan(std::size_t num_samples,
                                        const std::vector<PromptVariant>& variants,
                                        const std::vector<std::string>& model_ids,
                                        std::uint64_t seed) {
  if (variants.empty()) throw EmptyVariantListError("cannot plan samples without prompt variants");
  if (model_ids.empty()) throw EmptyModelListError("cannot plan samples without sampler models");

  // Both lists are shuffled once; the same generator drives both draws so the
  // whole plan is a function of the seed.
  std::vector<std::size_t> variant_order = shuffled_indices(variants.size(), seed);
  std::vector<std::size_t> model_order = shuffled_indices(model_ids.size(), seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<SamplePlanEntry> plan;
  plan.reserve(num_samples);
  for (auto [variant_slot, model_slot] : round_robin_slots(num_samples, variants.size(), model_ids.size())) {
    SamplePlanEntry entry;
    entry.index = plan.size();
    entry.variant_index = variant_order[variant_slot];
    entry.model_index = model_order[model_slot];
    entry.variant_kind = variants[entry.variant_index].kind;
    entry.model_id = model_ids[entry.model_index];
    plan.push_back(std::move(entry));
  }
  return plan;
}

std::vector<Sample> generate_samples(const std::vector<SamplePlanEntry>& plan,
                                     const std::vector<PromptVariant>& variants,
                                     const ModelRegistry& registry, const SamplingConfig& config,
                                     WorkerPool* pool) {
  std::vector<Sample> samples(plan.size());

  parallel_for(pool, plan.size(), [&](std::size_t i) {
    const SamplePlanEntry& entry = plan[i];
    Sample& sample = samples[i];
    sample.index = entry.index;
    sample.variant = variants.at(entry.variant_index);
    sample.model_id = entry.model_id;

    ChatRequest request;
    request.model_id = entry.model_id;
    request.prompt_text = sample.variant.text;
    request.temperature = config.temperature;
    request.max_tokens = registry.spec(entry.model_id).max_output_tokens;
    try {
      ChatResponse reply = registry.complete(request);
      sample.text = reply.text;
      sample.latency_ms = reply.latency_ms;
      sample.status = reply.text.empty() ? SampleStatus::Failed : SampleStatus::Ok;
    } catch (const Error&) {
      sample.status = SampleStatus::Failed;
    }
  });

  std::size_t ok = 0;
  for (const Sample& sample : samples) {
    if (sample.status == SampleStatus::Ok) ++ok;
  }
  if (config.min_ok > 0 && ok < static_cast<std::size_t>(config.min_ok)) {
    throw InsufficientSamplesError("only " + std::to_string(ok) + " of " +
                                   std::to_string(plan.size()) + " samples succeeded (minimum " +
                                   std::to_string(config.min_ok) + ")");
  }
  return samples;
}

}  // namespace crosscheck
