#include "setexp/context.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>

#include "setexp/error.hpp"
#include "setexp/text.hpp"

namespace setexp {

std::string_view to_string(ContextType t) {
  switch (t) {
    case ContextType::Linear: return "linear";
    case ContextType::List: return "list";
    case ContextType::Dep: return "dep";
    case ContextType::SP: return "sp";
    case ContextType::UP: return "up";
  }
  return "linear";
}

ContextType context_type_from_string(std::string_view name) {
  const std::string lower = text::to_lower(name);
  for (ContextType t : kContextTypes) {
    if (to_string(t) == lower) return t;
  }
  throw Error(ErrorKind::Format, "unknown context type '" + std::string(name) + "'");
}

UnitSequence resolve_units(const Sentence& sentence, std::span<const Occurrence> occurrences,
                           const OccurrenceIndex& index) {
  UnitSequence units;
  std::size_t next_occ = 0;
  std::size_t i = 0;
  while (i < sentence.tokens.size()) {
    if (next_occ < occurrences.size() && occurrences[next_occ].start == i) {
      const Occurrence& o = occurrences[next_occ++];
      units.push_back({Unit::Kind::Term, o.start, o.end, o.group_id, index.label(o.group_id)});
      i = o.end;
      continue;
    }
    const Token& t = sentence.tokens[i];
    const auto kind = text::is_punctuation(t.surface) ? Unit::Kind::Punct : Unit::Kind::Word;
    units.push_back({kind, i, i + 1, -1, t.surface});
    ++i;
  }
  return units;
}

UnitSequence resolve_units(const Sentence& sentence, const OccurrenceIndex& index) {
  const auto occs = find_occurrences(sentence, index.lexicon());
  return resolve_units(sentence, occs, index);
}

PatternInventory PatternInventory::defaults() {
  return from_strings({"X and Y", "X or Y", "X rather than Y", "X as well as Y", "X but not Y", "from X to Y",
                       "either X or Y", "neither X nor Y"});
}

PatternInventory PatternInventory::from_strings(const std::vector<std::string>& patterns) {
  PatternInventory inv;
  for (const auto& p : patterns) {
    std::vector<std::string> toks;
    for (auto& t : text::split(p, ' ')) {
      if (!t.empty()) toks.push_back(t == "X" || t == "Y" ? t : text::to_lower(t));
    }
    const auto xs = std::count(toks.begin(), toks.end(), "X");
    const auto ys = std::count(toks.begin(), toks.end(), "Y");
    if (xs != 1 || ys != 1) throw Error(ErrorKind::Config, "pattern needs exactly one X and one Y slot: '" + p + "'");
    inv.templates.push_back(std::move(toks));
  }
  return inv;
}

namespace {

std::vector<const Unit*> non_punct(const UnitSequence& units, bool stoplist) {
  std::vector<const Unit*> out;
  for (const auto& u : units) {
    if (u.kind == Unit::Kind::Punct) continue;
    if (stoplist && u.kind == Unit::Kind::Word && text::is_stopword(text::to_lower(u.label))) continue;
    out.push_back(&u);
  }
  return out;
}

bool is_word(const Unit& u, std::string_view lower) {
  return u.kind == Unit::Kind::Word && text::to_lower(u.label) == lower;
}

bool is_list_separator(const Unit& u) { return u.kind == Unit::Kind::Punct && (u.label == "," || u.label == ";"); }

bool is_conjunction(const Unit& u) { return is_word(u, "and") || is_word(u, "or"); }

void emit_all_ordered(const std::vector<const Unit*>& members, ContextType type, std::vector<ContextPair>& out) {
  for (const Unit* a : members) {
    for (const Unit* b : members) {
      if (a == b || a->group == b->group) continue;
      out.push_back({type, a->group, b->label});
    }
  }
}

}  // namespace

std::vector<ContextPair> extract_linear(const UnitSequence& units, std::size_t win, bool stoplist) {
  std::vector<ContextPair> out;
  if (win == 0) return out;
  const auto seq = non_punct(units, stoplist);
  for (std::size_t p = 0; p < seq.size(); ++p) {
    if (!seq[p]->is_term()) continue;
    const std::size_t lo = p >= win ? p - win : 0;
    const std::size_t hi = std::min(seq.size(), p + win + 1);
    for (std::size_t q = lo; q < hi; ++q) {
      if (q != p) out.push_back({ContextType::Linear, seq[p]->group, seq[q]->label});
    }
  }
  return out;
}

std::vector<ContextPair> extract_lists(const UnitSequence& units) {
  std::vector<ContextPair> out;
  std::size_t i = 0;
  while (i < units.size()) {
    if (!units[i].is_term()) {
      ++i;
      continue;
    }
    std::vector<const Unit*> members{&units[i]};
    std::size_t j = i + 1;
    bool closed = false;
    while (!closed && j < units.size()) {
      auto term_at = [&](std::size_t k) { return k < units.size() && units[k].is_term(); };
      if (is_list_separator(units[j]) && term_at(j + 1)) {
        members.push_back(&units[j + 1]);
        j += 2;
      } else if (is_list_separator(units[j]) && j + 1 < units.size() && is_conjunction(units[j + 1]) &&
                 term_at(j + 2) && members.size() >= 2) {
        members.push_back(&units[j + 2]);
        j += 3;
        closed = true;
      } else if (is_conjunction(units[j]) && term_at(j + 1) && members.size() >= 2) {
        members.push_back(&units[j + 1]);
        j += 2;
        closed = true;
      } else {
        break;
      }
    }
    if (members.size() >= 3) {
      emit_all_ordered(members, ContextType::List, out);
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

std::vector<ContextPair> extract_bullet_lists(std::span<const UnitSequence> lines) {
  std::vector<ContextPair> out;
  std::vector<const Unit*> block;
  auto flush = [&] {
    if (block.size() >= 3) emit_all_ordered(block, ContextType::List, out);
    block.clear();
  };
  for (const auto& line : lines) {
    auto it = std::find_if(line.begin(), line.end(), [](const Unit& u) { return u.is_term(); });
    if (it == line.end()) {
      flush();
      continue;
    }
    block.push_back(&*it);
  }
  flush();
  return out;
}

namespace {

struct Arc {
  std::size_t head;
  std::size_t dep;
  std::string rel;
};

bool is_prep_marker(const std::string& rel) { return rel == "case" || rel == "prep"; }

// Dependency arcs with prepositions collapsed into prep_<lemma> relations and
// punctuation arcs dropped.
std::vector<Arc> collapsed_arcs(const Sentence& s) {
  const auto& toks = s.tokens;
  const std::size_t n = toks.size();
  std::vector<std::optional<std::string>> case_lemma(n);
  std::vector<char> dropped(n, 0);
  std::vector<Arc> arcs;

  for (std::size_t d = 0; d < n; ++d) {
    const Token& t = toks[d];
    if (!t.head || t.deprel != "case") continue;
    case_lemma[static_cast<std::size_t>(*t.head)] = t.lemma;
    dropped[d] = 1;
  }
  for (std::size_t d = 0; d < n; ++d) {
    const Token& t = toks[d];
    if (!t.head || dropped[d]) continue;
    const auto h = static_cast<std::size_t>(*t.head);
    if (t.deprel == "punct" || text::is_punctuation(t.surface)) continue;
    if (t.deprel == "prep") {
      // Stanford style: g --prep--> p --pobj--> o  becomes  g --prep_p--> o.
      bool has_object = false;
      for (std::size_t o = 0; o < n; ++o) {
        if (toks[o].head && static_cast<std::size_t>(*toks[o].head) == d && toks[o].deprel == "pobj") {
          arcs.push_back({h, o, "prep_" + t.lemma});
          dropped[o] = 1;
          has_object = true;
        }
      }
      if (has_object) continue;
    }
    if (t.deprel == "pobj" && toks[h].deprel == "prep") continue;
    std::string rel = t.deprel;
    if (case_lemma[d] && !is_prep_marker(rel)) rel = "prep_" + *case_lemma[d];
    arcs.push_back({h, d, std::move(rel)});
  }
  return arcs;
}

}  // namespace

std::vector<ContextPair> extract_dependency(const Sentence& sentence, const UnitSequence& units) {
  std::vector<ContextPair> out;
  if (!sentence.has_dependencies()) return out;
  const std::size_t n = sentence.tokens.size();
  // token -> owning unit, and whether the token is that unit's syntactic head
  std::vector<const Unit*> owner(n, nullptr);
  std::vector<char> is_unit_head(n, 0);
  for (const auto& u : units) {
    for (std::size_t t = u.start; t < u.end; ++t) owner[t] = &u;
    for (std::size_t t = u.start; t < u.end; ++t) {
      const auto& h = sentence.tokens[t].head;
      if (!h || static_cast<std::size_t>(*h) < u.start || static_cast<std::size_t>(*h) >= u.end) {
        is_unit_head[t] = 1;
        break;
      }
    }
  }
  auto label = [&](std::size_t tok) -> const std::string& {
    return is_unit_head[tok] ? owner[tok]->label : sentence.tokens[tok].surface;
  };
  for (const Arc& arc : collapsed_arcs(sentence)) {
    if (owner[arc.head] == owner[arc.dep]) continue;
    if (owner[arc.head]->is_term() && is_unit_head[arc.head])
      out.push_back({ContextType::Dep, owner[arc.head]->group, label(arc.dep) + "/" + arc.rel});
    if (owner[arc.dep]->is_term() && is_unit_head[arc.dep])
      out.push_back({ContextType::Dep, owner[arc.dep]->group, label(arc.head) + "/" + arc.rel + "-1"});
  }
  return out;
}

std::vector<ContextPair> extract_symmetric(const UnitSequence& units, const PatternInventory& patterns) {
  std::vector<ContextPair> out;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& tmpl : patterns.templates) {
    if (tmpl.size() > units.size()) continue;
    for (std::size_t start = 0; start + tmpl.size() <= units.size(); ++start) {
      std::size_t x = 0;
      std::size_t y = 0;
      bool ok = true;
      for (std::size_t k = 0; k < tmpl.size() && ok; ++k) {
        const Unit& u = units[start + k];
        if (tmpl[k] == "X" || tmpl[k] == "Y") {
          ok = u.is_term();
          (tmpl[k] == "X" ? x : y) = start + k;
        } else {
          ok = is_word(u, tmpl[k]);
        }
      }
      if (!ok || units[x].group == units[y].group) continue;
      const auto key = std::minmax(x, y);
      if (!seen.insert(key).second) continue;
      out.push_back({ContextType::SP, units[x].group, units[y].label});
      out.push_back({ContextType::SP, units[y].group, units[x].label});
    }
  }
  return out;
}

std::vector<ContextPair> extract_unary(const UnitSequence& units) {
  // (left, right) context widths of the six n-gram templates.
  static constexpr std::array<std::pair<std::size_t, std::size_t>, 6> kTemplates = {
      {{3, 1}, {2, 2}, {2, 1}, {1, 3}, {1, 2}, {1, 1}}};
  std::vector<ContextPair> out;
  const auto seq = non_punct(units, false);
  auto ngram = [&](std::size_t p, std::size_t left, std::size_t right) {
    std::string s;
    for (std::size_t q = p - left; q <= p + right; ++q) {
      if (!s.empty()) s.push_back(' ');
      s += q == p ? std::string("__") : seq[q]->label;
    }
    return s;
  };
  for (std::size_t p = 0; p < seq.size(); ++p) {
    if (!seq[p]->is_term()) continue;
    const std::size_t avail_left = p;
    const std::size_t avail_right = seq.size() - p - 1;
    for (const auto& [left, right] : kTemplates) {
      if (left <= avail_left && right <= avail_right)
        out.push_back({ContextType::UP, seq[p]->group, ngram(p, left, right)});
    }
    // At a sentence edge the widest template degrades to its one-sided part.
    if (avail_right == 0 && avail_left >= 3) out.push_back({ContextType::UP, seq[p]->group, ngram(p, 3, 0)});
    if (avail_left == 0 && avail_right >= 3) out.push_back({ContextType::UP, seq[p]->group, ngram(p, 0, 3)});
  }
  return out;
}

std::vector<ContextPair> extract_linear(const Sentence& s, const OccurrenceIndex& index, std::size_t win) {
  return extract_linear(resolve_units(s, index), win);
}
std::vector<ContextPair> extract_lists(const Sentence& s, const OccurrenceIndex& index) {
  return extract_lists(resolve_units(s, index));
}
std::vector<ContextPair> extract_dependency(const Sentence& s, const OccurrenceIndex& index) {
  return extract_dependency(s, resolve_units(s, index));
}
std::vector<ContextPair> extract_symmetric(const Sentence& s, const OccurrenceIndex& index,
                                           const PatternInventory& patterns) {
  return extract_symmetric(resolve_units(s, index), patterns);
}
std::vector<ContextPair> extract_unary(const Sentence& s, const OccurrenceIndex& index) {
  return extract_unary(resolve_units(s, index));
}

std::vector<std::string> content_units(const std::vector<ContextPair>& pairs) {
  std::vector<std::string> out;
  for (const auto& p : pairs) {
    if (!text::is_stopword(text::to_lower(p.context))) out.push_back(p.context);
  }
  return out;
}

void PairStream::add(GroupId focus, const std::string& context) {
  auto [it, inserted] = context_ids_.try_emplace(context, static_cast<std::int32_t>(contexts_.size()));
  if (inserted) {
    contexts_.push_back(context);
    context_counts_.push_back(0);
  }
  ++context_counts_[static_cast<std::size_t>(it->second)];
  ++focus_counts_[focus];
  pairs_.emplace_back(focus, it->second);
}

std::int32_t PairStream::find_context(const std::string& context) const {
  auto it = context_ids_.find(context);
  return it == context_ids_.end() ? -1 : it->second;
}

PairStreams extract_all(const Corpus& corpus, const OccurrenceIndex& index, const ExtractionConfig& cfg) {
  PairStreams streams;
  auto sink = [&](const std::vector<ContextPair>& pairs) {
    for (const auto& p : pairs) streams[p.type].add(p.focus, p.context);
  };
  const auto& docs = corpus.documents();
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::vector<UnitSequence> bullet_block;
    for (std::size_t si = 0; si < docs[d].sentences.size(); ++si) {
      const Sentence& s = docs[d].sentences[si];
      const UnitSequence units = resolve_units(s, index.in_sentence(d, si), index);
      sink(extract_linear(units, cfg.linear_window, cfg.linear_stoplist));
      sink(extract_lists(units));
      sink(extract_dependency(s, units));
      sink(extract_symmetric(units, cfg.patterns));
      sink(extract_unary(units));
      if (s.list_item) {
        bullet_block.push_back(units);
      } else if (!bullet_block.empty()) {
        sink(extract_bullet_lists(bullet_block));
        bullet_block.clear();
      }
    }
    if (!bullet_block.empty()) sink(extract_bullet_lists(bullet_block));
  }
  return streams;
}

void write_pair_dump(const PairStream& stream, std::ostream& out) {
  const std::string_view type = to_string(stream.type());
  for (const auto& [focus, ctx] : stream.pairs())
    out << type << '\t' << focus << '\t' << stream.contexts()[static_cast<std::size_t>(ctx)] << '\n';
}

void write_pair_dump(const PairStreams& streams, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& s : streams.streams) write_pair_dump(s, out);
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

PairStreams read_pair_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  PairStreams streams;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw ParseError(line_no, "expected three tab-separated fields");
    const ContextType type = context_type_from_string(std::string_view(line).substr(0, t1));
    GroupId focus = 0;
    try {
      focus = std::stoi(line.substr(t1 + 1, t2 - t1 - 1));
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad focus id");
    }
    streams[type].add(focus, line.substr(t2 + 1));
  }
  return streams;
}

}  // namespace setexp
