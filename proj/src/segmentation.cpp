#include "crosscheck/segmentation.hpp"

#include <cctype>
#include <fstream>

#include "crosscheck/errors.hpp"
#include "crosscheck/text_util.hpp"

namespace crosscheck {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool matches_at(std::string_view text, std::size_t pos, std::string_view needle) {
  return text.size() - pos >= needle.size() && text.substr(pos, needle.size()) == needle;
}

// Closing quote/bracket characters allowed between terminal punctuation and
// the sentence gap. Returns the byte length of the closer at pos, or 0.
std::size_t closer_length(std::string_view text, std::size_t pos) {
  char c = text[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  if (matches_at(text, pos, "\xE2\x80\x9D") || matches_at(text, pos, "\xE2\x80\x99")) return 3;
  return 0;
}

// Uppercase letter, digit or opening quote marks a plausible sentence start.
bool is_sentence_start(std::string_view text, std::size_t pos) {
  char c = text[pos];
  if (is_upper(c) || is_digit(c) || c == '"' || c == '\'') return true;
  return matches_at(text, pos, "\xE2\x80\x9C") || matches_at(text, pos, "\xE2\x80\x98");
}

// A bullet or numbered marker at the start of a line (after indentation).
// Returns the position right after the marker and its trailing space, or npos.
std::size_t list_marker_end(std::string_view text, std::size_t line_start) {
  std::size_t i = line_start;
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  if (i >= text.size()) return std::string_view::npos;
  char c = text[i];
  if (c == '-' || c == '*' || c == '+') {
    if (i + 1 < text.size() && (text[i + 1] == ' ' || text[i + 1] == '\t')) return i + 2;
    return std::string_view::npos;
  }
  if (matches_at(text, i, "\xE2\x80\xA2")) {  // bullet character
    if (i + 3 < text.size() && (text[i + 3] == ' ' || text[i + 3] == '\t')) return i + 4;
    return std::string_view::npos;
  }
  std::size_t digits = 0;
  while (i + digits < text.size() && is_digit(text[i + digits]) && digits < 4) ++digits;
  if (digits == 0) return std::string_view::npos;
  std::size_t after = i + digits;
  if (after < text.size() && (text[after] == '.' || text[after] == ')')) {
    if (after + 1 < text.size() && (text[after + 1] == ' ' || text[after + 1] == '\t')) {
      return after + 2;
    }
  }
  return std::string_view::npos;
}

bool is_list_item_line(std::string_view text, std::size_t line_start) {
  return list_marker_end(text, line_start) != std::string_view::npos;
}

// The token ending right before `dot_pos` plus the dot itself, e.g. "Dr." or
// "e.g."; letters and interior dots only.
std::string token_ending_at(std::string_view text, std::size_t dot_pos) {
  std::size_t begin = dot_pos;
  while (begin > 0) {
    char c = text[begin - 1];
    if (is_alpha(c) || c == '.') {
      --begin;
    } else {
      break;
    }
  }
  if (begin == dot_pos) return {};
  return std::string(text.substr(begin, dot_pos - begin + 1));
}

bool line_is_blank(std::string_view text, std::size_t pos) {
  while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\r')) ++pos;
  return pos >= text.size() || text[pos] == '\n';
}

class Segmenter {
 public:
  Segmenter(std::string_view text, const SegmenterConfig& config) : text_(text) {
    for (const auto& abbrev : config.abbreviations) {
      abbreviations_.push_back(to_lower(abbrev));
    }
  }

  std::vector<Block> run() {
    std::size_t i = 0;
    while (i < text_.size()) {
      if (pending_start_ == npos) {
        if (text_[i] == '\n') line_start_ = i + 1;
        if (is_ascii_space(text_[i])) {
          ++i;
          continue;
        }
        if (at_fence_start(i)) {
          i = consume_fence(i);
          continue;
        }
        pending_start_ = i;
      }

      char c = text_[i];
      if (is_terminal(c)) {
        i = handle_terminal(i);
        continue;
      }
      if (c == '\n') {
        std::size_t ended_line = line_start_;
        line_start_ = i + 1;
        if (newline_is_boundary(ended_line, i)) {
          flush(i);
        }
        ++i;
        continue;
      }
      ++i;
    }
    flush(text_.size());
    return std::move(blocks_);
  }

 private:
  static constexpr std::size_t npos = std::string_view::npos;

  bool is_abbreviation(const std::string& token) const {
    if (token.empty()) return false;
    std::string lowered = to_lower(token);
    for (const auto& abbrev : abbreviations_) {
      if (abbrev == lowered) return true;
    }
    return false;
  }

  // True when [line_start, i) is all whitespace and a fence opens at i.
  bool at_fence_start(std::size_t i) const {
    if (!matches_at(text_, i, "```")) return false;
    for (std::size_t p = line_start_; p < i; ++p) {
      if (text_[p] != ' ' && text_[p] != '\t') return false;
    }
    return true;
  }

  bool fence_opens_line(std::size_t line_begin) const {
    std::size_t p = line_begin;
    while (p < text_.size() && (text_[p] == ' ' || text_[p] == '\t')) ++p;
    return matches_at(text_, p, "```");
  }

  // Emits the whole fenced region as one block; returns the resume position.
  std::size_t consume_fence(std::size_t fence_start) {
    std::size_t line_end = text_.find('\n', fence_start);
    std::size_t search = line_end == npos ? text_.size() : line_end + 1;
    std::size_t end = text_.size();
    while (search < text_.size()) {
      std::size_t close = text_.find("```", search);
      if (close == npos) break;
      std::size_t close_line_end = text_.find('\n', close);
      end = close_line_end == npos ? text_.size() : close_line_end;
      // trim trailing CR / spaces on the closing line
      search = close + 3;
      break;
    }
    std::size_t block_end = end;
    while (block_end > fence_start && is_ascii_space(text_[block_end - 1])) --block_end;
    emit(fence_start, block_end);
    if (end < text_.size() && text_[end] == '\n') line_start_ = end + 1;
    return end;
  }

  std::size_t handle_terminal(std::size_t punct_start) {
    std::size_t punct_end = punct_start;
    while (punct_end < text_.size() && is_terminal(text_[punct_end])) ++punct_end;

    std::size_t close_end = punct_end;
    while (close_end < text_.size()) {
      std::size_t len = closer_length(text_, close_end);
      if (len == 0) break;
      close_end += len;
    }

    bool protected_dot = false;
    if (punct_end - punct_start == 1 && text_[punct_start] == '.') {
      // decimal: 3.5
      if (punct_start > 0 && is_digit(text_[punct_start - 1]) && punct_end < text_.size() &&
          is_digit(text_[punct_end])) {
        protected_dot = true;
      }
      // numbered list marker: the digits before the dot open the line
      if (!protected_dot && punct_start > 0 && is_digit(text_[punct_start - 1])) {
        std::size_t p = line_start_;
        while (p < text_.size() && (text_[p] == ' ' || text_[p] == '\t')) ++p;
        bool all_digits = p < punct_start;
        for (; p < punct_start && all_digits; ++p) {
          if (!is_digit(text_[p])) all_digits = false;
        }
        if (all_digits) protected_dot = true;
      }
      if (!protected_dot && is_abbreviation(token_ending_at(text_, punct_start))) {
        protected_dot = true;
      }
    }

    if (protected_dot) return punct_end;

    std::size_t j = close_end;
    bool saw_space = false;
    while (j < text_.size() && is_ascii_space(text_[j])) {
      saw_space = true;
      ++j;
    }
    bool boundary = j >= text_.size() || (saw_space && is_sentence_start(text_, j));
    if (!boundary) return close_end;

    flush(close_end);
    return close_end;
  }

  // A newline ends the pending block when the finished line is a list item,
  // the next line is blank (paragraph break), or the next line opens a list.
  bool newline_is_boundary(std::size_t ended_line_start, std::size_t newline_pos) {
    if (pending_start_ == npos) return false;
    if (is_list_item_line(text_, ended_line_start)) return true;
    std::size_t next_line = newline_pos + 1;
    if (next_line >= text_.size()) return false;  // final flush covers it
    if (line_is_blank(text_, next_line)) return true;
    if (is_list_item_line(text_, next_line)) return true;
    if (fence_opens_line(next_line)) return true;
    return false;
  }

  void flush(std::size_t end_limit) {
    if (pending_start_ == npos) return;
    std::size_t end = end_limit;
    while (end > pending_start_ && is_ascii_space(text_[end - 1])) --end;
    emit(pending_start_, end);
    pending_start_ = npos;
  }

  void emit(std::size_t start, std::size_t end) {
    if (end <= start) return;
    Block block;
    block.index = blocks_.size();
    block.span_start = start;
    block.span_end = end;
    block.text = std::string(text_.substr(start, end - start));
    blocks_.push_back(std::move(block));
  }

  std::string_view text_;
  std::vector<std::string> abbreviations_;
  std::vector<Block> blocks_;
  std::size_t pending_start_ = npos;
  std::size_t line_start_ = 0;
};

}  // namespace

std::vector<std::string> default_abbreviations() {
  return {"Dr.",  "Mr.",  "Mrs.", "Ms.",  "Prof.", "St.",   "e.g.", "i.e.",
          "etc.", "vs.",  "cf.",  "al.",  "Fig.",  "Eq.",   "No.",  "Vol.",
          "Jr.",  "Sr.",  "p.",   "pp.",  "approx."};
}

std::vector<std::string> load_abbreviations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open abbreviation list: " + path);
  std::vector<std::string> abbreviations;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view token = trim(line);
    if (token.empty() || token.front() == '#') continue;
    abbreviations.emplace_back(token);
  }
  return abbreviations;
}

std::vector<Block> segment(std::string_view response, const SegmenterConfig& config) {
  if (trim(response).empty()) return {};
  return Segmenter(response, config).run();
}

bool reconstruct_original(const std::vector<Block>& blocks, std::string_view original) {
  std::string rebuilt;
  rebuilt.reserve(original.size());
  std::size_t cursor = 0;
  for (const Block& block : blocks) {
    if (block.span_start < cursor || block.span_end < block.span_start ||
        block.span_end > original.size()) {
      return false;
    }
    rebuilt.append(original.substr(cursor, block.span_start - cursor));
    rebuilt.append(block.text);
    cursor = block.span_end;
  }
  rebuilt.append(original.substr(cursor));
  return rebuilt == original;
}

}  // namespace crosscheck
