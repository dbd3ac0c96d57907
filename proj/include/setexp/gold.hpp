#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "setexp/terms.hpp"

namespace setexp {

// A gold class as written on disk: raw member strings.
struct RawGoldClass {
  std::string name;
  std::vector<std::string> members;
};

struct GoldClass {
  std::string name;
  std::vector<GroupId> members;  // sorted, distinct
};

// `class_name \t member \t member ...`, one class per line.
std::vector<RawGoldClass> load_gold_file(const std::filesystem::path& path);
void save_gold_file(const std::vector<RawGoldClass>& classes, const std::filesystem::path& path);

// Resolves members through normalization and the lexicon; unresolved members
// are dropped, classes left with fewer than two members are dropped.
std::vector<GoldClass> resolve_gold(const std::vector<RawGoldClass>& raw, const TermLexicon& lexicon);

}  // namespace setexp
