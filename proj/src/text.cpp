#include "setexp/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include "setexp/error.hpp"

namespace setexp::text {

namespace {

// Length of the UTF-8 General Punctuation sequence (U+2000..U+206F) at `i`, or 0.
std::size_t general_punct_len(std::string_view s, std::size_t i) {
  if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2) {
    const auto c1 = static_cast<unsigned char>(s[i + 1]);
    if (c1 == 0x80 || c1 == 0x81) return 3;
  }
  return 0;
}

bool is_word_byte(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c < 0x80) return std::isalnum(c) != 0;
  // Continuation bytes belong to whatever started the sequence.
  return general_punct_len(s, i) == 0;
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_connector(char c) { return c == '\'' || c == '-' || c == '.' || c == '_'; }

bool is_dotted_initialism(std::string_view tok) {
  // L.L or L.L.L ... (each segment a single letter)
  if (tok.size() < 3) return false;
  for (std::size_t i = 0; i < tok.size(); ++i) {
    const auto c = static_cast<unsigned char>(tok[i]);
    if (i % 2 == 0) {
      if (c >= 0x80 || std::isalpha(c) == 0) return false;
    } else if (tok[i] != '.') {
      return false;
    }
  }
  return tok.size() % 2 == 1;
}

bool is_strip_char(unsigned char c) {
  if (c >= 0x80) return false;
  if (c == '+' || c == '#') return false;
  return std::ispunct(c) != 0;
}

const std::unordered_set<std::string_view>& stopwords() {
  static const std::unordered_set<std::string_view> words = {
      "a",     "an",     "the",    "and",   "or",    "but",     "nor",   "if",    "then",   "else",
      "of",    "in",     "on",     "at",    "to",    "from",    "by",    "with",  "without", "for",
      "as",    "into",   "onto",   "over",  "under", "about",   "after", "before", "between", "through",
      "during", "than",  "that",   "this",  "these", "those",   "there", "here",  "it",     "its",
      "is",    "are",    "was",    "were",  "be",    "been",    "being", "am",    "do",     "does",
      "did",   "has",    "have",   "had",   "will",  "would",   "shall", "should", "can",   "could",
      "may",   "might",  "must",   "not",   "no",    "so",      "such",  "very",  "also",   "just",
      "i",     "you",    "he",     "she",   "we",    "they",    "me",    "him",   "her",    "us",
      "them",  "my",     "your",   "his",   "our",   "their",   "who",   "whom",  "which",  "what",
      "when",  "where",  "why",    "how",   "all",   "any",     "both",  "each",  "few",    "more",
      "most",  "other",  "some",   "own",   "same",  "too",     "only",  "up",    "down",   "out",
      "off",   "again",  "further", "once", "while", "because", "until", "above", "below",  "against",
      "either", "neither", "rather", "well", "per",  "via",     "among", "within", "upon",  "whether"};
  return words;
}

}  // namespace

std::vector<RawToken> tokenize(std::string_view s, std::size_t base) {
  std::vector<RawToken> out;
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (const std::size_t gp = general_punct_len(s, i); gp > 0) {
      i += gp;
      out.push_back({std::string(s.substr(start, gp)), base + start, base + i});
      continue;
    }
    if (is_word_byte(s, i)) {
      while (i < n) {
        if (is_word_byte(s, i)) {
          ++i;
        } else if (is_connector(s[i]) && i + 1 < n && is_word_byte(s, i + 1)) {
          ++i;
        } else {
          break;
        }
      }
      while (i < n && (s[i] == '+' || s[i] == '#') ) ++i;
      if (i < n && s[i] == '.' && is_dotted_initialism(s.substr(start, i - start))) ++i;
      out.push_back({std::string(s.substr(start, i - start)), base + start, base + i});
      continue;
    }
    if (s[i] == '.') {
      while (i < n && s[i] == '.') ++i;
    } else {
      ++i;
    }
    out.push_back({std::string(s.substr(start, i - start)), base + start, base + i});
  }
  return out;
}

bool is_punctuation(std::string_view tok) {
  if (tok.empty()) return true;
  std::size_t i = 0;
  while (i < tok.size()) {
    if (const std::size_t gp = general_punct_len(tok, i); gp > 0) {
      i += gp;
      continue;
    }
    const auto c = static_cast<unsigned char>(tok[i]);
    if (c >= 0x80 || std::isalnum(c) != 0) return false;
    ++i;
  }
  return true;
}

bool is_stopword(std::string_view w) { return stopwords().contains(w); }

bool starts_upper_or_digit(std::string_view tok) {
  if (tok.empty()) return false;
  const auto c = static_cast<unsigned char>(tok.front());
  return c < 0x80 && (std::isupper(c) != 0 || std::isdigit(c) != 0);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string normalize_term(std::string_view surface) {
  std::string lowered = to_lower(surface);
  std::string collapsed;
  collapsed.reserve(lowered.size());
  bool pending_space = false;
  for (char ch : lowered) {
    const auto c = static_cast<unsigned char>(ch);
    if (ch == '-' || ch == '_' || is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !collapsed.empty()) collapsed.push_back(' ');
    pending_space = false;
    collapsed.push_back(ch);
  }
  std::size_t b = 0;
  std::size_t e = collapsed.size();
  while (b < e) {
    const auto c = static_cast<unsigned char>(collapsed[b]);
    if (is_strip_char(c) || c == ' ') {
      ++b;
    } else if (is_strip_char(static_cast<unsigned char>(collapsed[e - 1])) || collapsed[e - 1] == ' ') {
      --e;
    } else {
      break;
    }
  }
  if (b >= e) throw Error(ErrorKind::EmptyNormalization, "term normalizes to nothing: '" + std::string(surface) + "'");
  return collapsed.substr(b, e - b);
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

double normalized_levenshtein(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

std::string initialism(std::string_view phrase) {
  std::string out;
  bool at_word_start = true;
  std::size_t words = 0;
  for (char ch : phrase) {
    if (ch == ' ') {
      at_word_start = true;
      continue;
    }
    if (at_word_start) {
      out.push_back(ch);
      ++words;
    }
    at_word_start = false;
  }
  return words >= 2 ? out : std::string{};
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace setexp::text
