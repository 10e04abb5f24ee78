#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace crosscheck {

bool is_ascii_space(char c);

std::string_view trim(std::string_view s);

std::string to_lower(std::string_view s);

bool iequals(std::string_view lhs, std::string_view rhs);

std::vector<std::string_view> split_lines(std::string_view text);

std::vector<std::string> split_list(std::string_view text, char sep);

// Replaces every occurrence of `needle` in `text`.
std::string replace_all(std::string text, std::string_view needle, std::string_view replacement);

// Substitutes {KEY} placeholders; keys are given without braces.
std::string render_placeholders(std::string_view tmpl, const std::map<std::string, std::string>& values);

// FNV-1a, 64 bit. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view s);

// Whitespace-delimited token count; used for mock usage accounting.
std::int64_t word_count(std::string_view s);

// Fixed-point decimal formatting ("%.*f"); pinned so CSV bytes are reproducible.
std::string format_fixed(double value, int digits);

}  // namespace crosscheck
