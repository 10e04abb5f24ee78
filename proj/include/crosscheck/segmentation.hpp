#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace crosscheck {

// A sentence-level segment of a response. `text` is the exact substring of
// the original at [span_start, span_end); everything between consecutive
// spans is whitespace, so span-based reassembly is lossless.
struct Block {
  std::size_t index = 0;
  std::string text;
  std::size_t span_start = 0;
  std::size_t span_end = 0;
};

std::vector<std::string> default_abbreviations();

// One token per line, UTF-8; '#' lines and blank lines ignored.
std::vector<std::string> load_abbreviations(const std::string& path);

struct SegmenterConfig {
  std::vector<std::string> abbreviations = default_abbreviations();
};

// Deterministic rule-based sentence segmentation: terminal punctuation
// followed by whitespace and an uppercase/digit/quote start, with protection
// for abbreviations, decimals and numbered list markers; newline-terminated
// list items and paragraph breaks are boundaries; fenced code regions are
// single blocks. Empty or whitespace-only input yields an empty list.
std::vector<Block> segment(std::string_view response, const SegmenterConfig& config = {});

// True iff span-based reassembly of `blocks` reproduces `original` exactly.
bool reconstruct_original(const std::vector<Block>& blocks, std::string_view original);

}  // namespace crosscheck
