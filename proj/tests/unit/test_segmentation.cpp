#include <doctest.h>

#include <fstream>
#include <random>

#include <json.hpp>

#include "crosscheck/errors.hpp"
#include "crosscheck/segmentation.hpp"
#include "../support/test_support.hpp"

using namespace crosscheck;

namespace {

std::vector<std::pair<std::string, std::vector<std::string>>> load_corpus() {
  std::ifstream in(std::string(TEST_DATA_DIR) + "/segmentation_corpus.jsonl");
  REQUIRE(in.good());
  std::vector<std::pair<std::string, std::vector<std::string>>> cases;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json record = nlohmann::json::parse(line);
    cases.emplace_back(record["text"].get<std::string>(),
                       record["blocks"].get<std::vector<std::string>>());
  }
  return cases;
}

}  // namespace

TEST_CASE("simple terminal punctuation splits into three blocks") {
  auto blocks = segment("A is B. C is D? E!");
  REQUIRE(blocks.size() == 3);
  CHECK(blocks[0].text == "A is B.");
  CHECK(blocks[1].text == "C is D?");
  CHECK(blocks[2].text == "E!");
}

TEST_CASE("abbreviations and decimals stay in one block") {
  auto blocks = segment("Dr. Smith arrived in 3.5 hours.");
  REQUIRE(blocks.size() == 1);
  CHECK(blocks[0].text == "Dr. Smith arrived in 3.5 hours.");
}

TEST_CASE("empty and whitespace-only input yield no blocks") {
  CHECK(segment("").empty());
  CHECK(segment(" \n\t  ").empty());
}

TEST_CASE("the hand-labeled corpus matches exactly") {
  for (const auto& [text, expected] : load_corpus()) {
    CAPTURE(text);
    auto blocks = segment(text);
    std::vector<std::string> actual;
    for (const Block& block : blocks) actual.push_back(block.text);
    CHECK(actual == expected);
    CHECK(reconstruct_original(blocks, text));
  }
}

TEST_CASE("spans are in-bounds, ordered and match the source substrings") {
  for (const auto& [text, expected] : load_corpus()) {
    auto blocks = segment(text);
    std::size_t previous_end = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const Block& block = blocks[i];
      CHECK(block.index == i);
      CHECK(block.span_start >= previous_end);
      CHECK(block.span_end > block.span_start);
      CHECK(block.span_end <= text.size());
      CHECK(text.substr(block.span_start, block.span_end - block.span_start) == block.text);
      previous_end = block.span_end;
    }
  }
}

TEST_CASE("segmenting an emitted block yields exactly one block") {
  for (const auto& [text, expected] : load_corpus()) {
    for (const Block& block : segment(text)) {
      CAPTURE(block.text);
      CHECK(segment(block.text).size() == 1);
    }
  }
}

TEST_CASE("tampered blocks fail reconstruction") {
  const std::string original = "One sentence. Another sentence.";
  auto blocks = segment(original);
  REQUIRE(blocks.size() == 2);

  auto tampered_span = blocks;
  tampered_span[1].span_start -= 1;
  CHECK_FALSE(reconstruct_original(tampered_span, original));

  auto tampered_text = blocks;
  tampered_text[0].text = "one sentence.";
  CHECK_FALSE(reconstruct_original(tampered_text, original));

  auto reordered = blocks;
  std::swap(reordered[0], reordered[1]);
  CHECK_FALSE(reconstruct_original(reordered, original));
}

TEST_CASE("multi-paragraph text with blank lines reconstructs byte for byte") {
  const std::string text = "First paragraph here.\n\n\nSecond one\nwraps over lines.\n\nThird.";
  CHECK(reconstruct_original(segment(text), text));
}

TEST_CASE("losslessness holds on generated texts") {
  std::mt19937_64 gen(20250810);
  for (int i = 0; i < 200; ++i) {
    std::string text = test_support::random_text(gen);
    CAPTURE(text);
    CHECK(reconstruct_original(segment(text), text));
  }
}

TEST_CASE("identical input produces identical spans") {
  const std::string text = "Same text. Every time! Deterministic?";
  auto a = segment(text);
  auto b = segment(text);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].span_start == b[i].span_start);
    CHECK(a[i].span_end == b[i].span_end);
  }
}

TEST_CASE("the abbreviation list is configurable") {
  const std::string text = "Dr. Smith spoke. Everyone listened.";
  CHECK(segment(text).size() == 2);

  SegmenterConfig no_abbrev;
  no_abbrev.abbreviations.clear();
  auto blocks = segment(text, no_abbrev);
  REQUIRE(blocks.size() == 3);
  CHECK(blocks[0].text == "Dr.");

  test_support::TempDir dir("abbrev");
  test_support::write_file(dir.file("abbrev.txt"), "# comment line\nDr.\n\nMr.\n");
  SegmenterConfig from_file;
  from_file.abbreviations = load_abbreviations(dir.file("abbrev.txt"));
  CHECK(from_file.abbreviations == std::vector<std::string>{"Dr.", "Mr."});
  CHECK(segment(text, from_file).size() == 2);

  CHECK_THROWS_AS(load_abbreviations(dir.file("missing.txt")), ConfigError);
}
