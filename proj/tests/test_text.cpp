#include <gtest/gtest.h>

#include "setexp/error.hpp"
#include "setexp/text.hpp"

using namespace setexp;

namespace {

std::vector<std::string> surfaces(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& t : text::tokenize(s)) out.push_back(t.text);
  return out;
}

TEST(Tokenize, SplitsFinalPeriod) {
  EXPECT_EQ(surfaces("Siri uses voice queries."), (std::vector<std::string>{"Siri", "uses", "voice", "queries", "."}));
}

TEST(Tokenize, KeepsInternalConnectorsAndInitialisms) {
  EXPECT_EQ(surfaces("King's well-known U.S. state"),
            (std::vector<std::string>{"King's", "well-known", "U.S.", "state"}));
  EXPECT_EQ(surfaces("C++ and C#, too"), (std::vector<std::string>{"C++", "and", "C#", ",", "too"}));
}

TEST(Tokenize, ByteOffsets) {
  const auto toks = text::tokenize("ab, cd", 10);
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(toks[1].text, ",");
  EXPECT_EQ(toks[1].begin, 12u);
  EXPECT_EQ(toks[2].begin, 14u);
  EXPECT_EQ(toks[2].end, 16u);
}

TEST(Tokenize, GeneralPunctuationIsSeparate) {
  EXPECT_EQ(surfaces("a\xE2\x80\x94" "b"), (std::vector<std::string>{"a", "\xE2\x80\x94", "b"}));
  EXPECT_TRUE(text::is_punctuation("\xE2\x80\xA2"));
}

TEST(Normalize, Examples) {
  EXPECT_EQ(text::normalize_term("New-York"), "new york");
  EXPECT_EQ(text::normalize_term("new   york "), "new york");
  EXPECT_EQ(text::normalize_term("\"Computer Vision,\""), "computer vision");
  EXPECT_EQ(text::normalize_term("C++"), "c++");
  try {
    text::normalize_term("--");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyNormalization);
  }
}

TEST(Normalize, Idempotent) {
  for (const char* s : {"New-York City", "  Signal_processing ", "U.S. state"}) {
    const auto once = text::normalize_term(s);
    EXPECT_EQ(text::normalize_term(once), once);
  }
}

TEST(Levenshtein, HandValues) {
  EXPECT_EQ(text::levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(text::levenshtein("", "abc"), 3u);
  EXPECT_DOUBLE_EQ(text::normalized_levenshtein("color", "colour"), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(text::normalized_levenshtein("", ""), 0.0);
}

TEST(Initialism, Words) {
  EXPECT_EQ(text::initialism("new york city"), "nyc");
  EXPECT_EQ(text::initialism("york"), "");
}

TEST(Stopwords, Basic) {
  EXPECT_TRUE(text::is_stopword("and"));
  EXPECT_TRUE(text::is_stopword("a"));
  EXPECT_FALSE(text::is_stopword("siri"));
}

}  // namespace
