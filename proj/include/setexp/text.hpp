#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Byte-level text utilities shared by ingestion, term extraction and context
// extraction. Everything here treats UTF-8 multi-byte sequences as opaque word
// characters, except the General Punctuation block (bullets, dashes, quotes).
namespace setexp::text {

struct RawToken {
  std::string text;
  std::size_t begin = 0;  // byte offset, inclusive
  std::size_t end = 0;    // byte offset, exclusive
};

// Splits on whitespace and punctuation boundaries. Internal connectors
// (apostrophe, hyphen, dot, underscore between word characters) stay inside a
// token, dotted initialisms such as "U.S." keep their final dot, and trailing
// '+'/'#' runs are kept ("C++", "C#").
std::vector<RawToken> tokenize(std::string_view input, std::size_t base_offset = 0);

bool is_punctuation(std::string_view token);
bool is_stopword(std::string_view lowercase_token);
bool starts_upper_or_digit(std::string_view token);

std::string to_lower(std::string_view s);

// Lowercase, '-'/'_' to spaces, collapsed whitespace, punctuation stripped from
// both ends. Throws Error{EmptyNormalization} when nothing remains.
std::string normalize_term(std::string_view surface);

std::size_t levenshtein(std::string_view a, std::string_view b);
// levenshtein / max(|a|, |b|); 0 for two empty strings.
double normalized_levenshtein(std::string_view a, std::string_view b);

// First letters of the space-separated words; empty for single-word phrases.
std::string initialism(std::string_view normalized_phrase);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace setexp::text
