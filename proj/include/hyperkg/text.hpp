#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hkg::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::size_t word_count(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool contains_ci(std::string_view haystack, std::string_view needle);

// Splits on sentence-final punctuation followed by whitespace. Fragments are trimmed; empties dropped.
std::vector<std::string> split_sentences(std::string_view s);

// First balanced JSON object/array in `raw` that parses. Tolerates code fences and prose.
std::optional<std::string> first_json_value(std::string_view raw);

std::string sha256_hex(std::string_view data);

}  // namespace hkg::text
