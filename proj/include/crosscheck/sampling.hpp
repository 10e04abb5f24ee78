#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crosscheck/gateway.hpp"
#include "crosscheck/variation.hpp"
#include "crosscheck/worker_pool.hpp"

namespace crosscheck {

struct SamplePlanEntry {
  std::size_t index = 0;
  std::size_t variant_index = 0;  // into the caller's variant list
  std::size_t model_index = 0;    // into the caller's model list
  VariationKind variant_kind = VariationKind::Identity;
  std::string model_id;
};

enum class SampleStatus { Ok, Failed };

std::string_view sample_status_name(SampleStatus status);

struct Sample {
  std::size_t index = 0;
  PromptVariant variant;
  std::string model_id;
  std::string text;
  SampleStatus status = SampleStatus::Failed;
  std::int64_t latency_ms = 0;
};

// In-place Fisher-Yates driven by mt19937_64 with modulo reduction; spelled
// out instead of std::shuffle so plans are bit-identical everywhere.
std::vector<std::size_t> shuffled_indices(std::size_t count, std::uint64_t seed);

// The pure modular rule: entry i -> (i mod num_variants, i mod num_models).
std::vector<std::pair<std::size_t, std::size_t>> round_robin_slots(std::size_t count,
                                                                   std::size_t num_variants,
                                                                   std::size_t num_models);

// Shuffles both lists once with the seeded generator, then cycles through the
// shuffled lists. Deterministic per (inputs, seed).
std::vector<SamplePlanEntry> build_plan(std::size_t num_samples,
                                        const std::vector<PromptVariant>& variants,
                                        const std::vector<std::string>& model_ids,
                                        std::uint64_t seed);

struct SamplingConfig {
  int min_ok = 3;
  double temperature = 1.0;
};

// One Sample per plan entry, index-ordered regardless of completion order.
// Requests that exhaust retries are marked Failed; throws InsufficientSamplesError
// when fewer than config.min_ok samples come back Ok.
std::vector<Sample> generate_samples(const std::vector<SamplePlanEntry>& plan,
                                     const std::vector<PromptVariant>& variants,
                                     const ModelRegistry& registry, const SamplingConfig& config,
                                     WorkerPool* pool = nullptr);

}  // namespace crosscheck
