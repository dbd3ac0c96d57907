#include "setexp/gold.hpp"

#include <algorithm>
#include <fstream>

#include "setexp/error.hpp"
#include "setexp/text.hpp"

namespace setexp {

std::vector<RawGoldClass> load_gold_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read gold file " + path.string());
  std::vector<RawGoldClass> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto cols = text::split(line, '\t');
    RawGoldClass cls{cols[0], {}};
    for (std::size_t i = 1; i < cols.size(); ++i) {
      if (!cols[i].empty()) cls.members.push_back(std::move(cols[i]));
    }
    if (cls.name.empty() || cls.members.size() < 2) throw ParseError(line_no, "gold class needs a name and >= 2 members");
    out.push_back(std::move(cls));
  }
  return out;
}

void save_gold_file(const std::vector<RawGoldClass>& classes, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& c : classes) {
    out << c.name;
    for (const auto& m : c.members) out << '\t' << m;
    out << '\n';
  }
}

std::vector<GoldClass> resolve_gold(const std::vector<RawGoldClass>& raw, const TermLexicon& lexicon) {
  std::vector<GoldClass> out;
  for (const auto& r : raw) {
    GoldClass g{r.name, {}};
    for (const auto& m : r.members) {
      try {
        if (auto gid = lexicon.lookup(text::normalize_term(m))) g.members.push_back(*gid);
      } catch (const Error&) {
      }
    }
    std::sort(g.members.begin(), g.members.end());
    g.members.erase(std::unique(g.members.begin(), g.members.end()), g.members.end());
    if (g.members.size() >= 2) out.push_back(std::move(g));
  }
  return out;
}

}  // namespace setexp
