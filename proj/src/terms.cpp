#include "setexp/terms.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "setexp/error.hpp"
#include "setexp/text.hpp"

namespace setexp {

namespace fs = std::filesystem;

namespace {

bool is_nominal(const std::string& pos) { return pos == "NOUN" || pos == "PROPN"; }
bool is_np_part(const std::string& pos) { return pos == "ADJ" || is_nominal(pos); }

std::string join_surfaces(const Sentence& s, std::size_t start, std::size_t end) {
  std::string out;
  for (std::size_t i = start; i < end; ++i) {
    out += s.tokens[i].surface;
    if (i + 1 < end && s.tokens[i].space_after) out.push_back(' ');
  }
  return out;
}

std::optional<std::string> try_normalize(std::string_view surface) {
  try {
    return text::normalize_term(surface);
  } catch (const Error&) {
    return std::nullopt;
  }
}

bool is_content_word(const Token& t) {
  if (text::is_punctuation(t.surface)) return false;
  const std::string lower = text::to_lower(t.surface);
  if (text::is_stopword(lower)) return false;
  return !std::all_of(lower.begin(), lower.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

std::vector<TermSpan> chunk_noun_phrases(const Sentence& sentence) {
  std::vector<TermSpan> spans;
  const auto& toks = sentence.tokens;
  std::size_t i = 0;
  while (i < toks.size()) {
    if (!is_np_part(toks[i].pos)) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < toks.size() && is_np_part(toks[run_end].pos)) ++run_end;
    std::size_t start = i;
    while (start < run_end) {
      std::size_t end = std::min(start + kMaxChunkTokens, run_end);
      while (end > start && !is_nominal(toks[end - 1].pos)) --end;
      if (end == start) {
        ++start;
        continue;
      }
      spans.push_back({sentence.doc_id, sentence.sent_index, start, end, join_surfaces(sentence, start, end)});
      start = end;
    }
    i = run_end;
  }
  return spans;
}

TermVocabulary count_candidate_terms(const Corpus& corpus, const CandidateConfig& cfg) {
  std::map<std::string, std::size_t> counts;
  auto bump = [&](std::string_view surface) {
    if (auto norm = try_normalize(surface)) ++counts[*norm];
  };
  for (const auto& doc : corpus.documents()) {
    for (const auto& s : doc.sentences) {
      if (s.has_pos()) {
        for (const auto& span : chunk_noun_phrases(s)) bump(span.surface);
        continue;
      }
      for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        if (!is_content_word(s.tokens[i])) continue;
        bump(s.tokens[i].surface);
        if (i + 1 < s.tokens.size() && is_content_word(s.tokens[i + 1])) bump(join_surfaces(s, i, i + 2));
      }
    }
  }
  TermVocabulary vocab;
  for (const auto& [term, count] : counts) {
    if (count < cfg.min_count) continue;
    vocab.terms.push_back(term);
    vocab.counts.push_back(count);
  }
  return vocab;
}

std::vector<std::string> TermGroup::active_members() const {
  std::vector<std::string> out;
  for (const auto& m : members) {
    if (!excluded.contains(m)) out.push_back(m);
  }
  return out;
}

bool TermGroup::has_member(const std::string& m) const {
  return std::binary_search(members.begin(), members.end(), m);
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

const std::vector<std::pair<std::string, std::string>>& builtin_abbreviations() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"nyc", "new york city"},        {"ny", "new york"},
      {"nyc", "new york"},             {"usa", "united states"},
      {"us", "united states of america"},
      {"la", "los angeles"},           {"sf", "san francisco"},
      {"usa", "united states of america"}, {"us", "united states"},
      {"uk", "united kingdom"},        {"eu", "european union"},
      {"un", "united nations"},        {"ai", "artificial intelligence"},
      {"ml", "machine learning"},      {"nlp", "natural language processing"},
      {"cv", "computer vision"},       {"js", "javascript"},
      {"ts", "typescript"},            {"os", "operating system"},
      {"db", "database"},              {"gpu", "graphics processing unit"},
      {"cpu", "central processing unit"}, {"ram", "random access memory"},
      {"api", "application programming interface"}, {"ui", "user interface"},
      {"qa", "quality assurance"},     {"hr", "human resources"},
      {"ceo", "chief executive officer"}, {"cto", "chief technology officer"},
  };
  return table;
}

// Levenshtein distance if it is <= k, otherwise k + 1. Banded DP.
std::size_t bounded_levenshtein(std::string_view a, std::string_view b, std::size_t k) {
  const std::size_t diff = a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
  if (diff > k) return k + 1;
  const std::size_t inf = k + 1;
  std::vector<std::size_t> prev(b.size() + 1, inf), cur(b.size() + 1, inf);
  for (std::size_t j = 0; j <= std::min(b.size(), k); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    const std::size_t lo = i > k ? i - k : 0;
    const std::size_t hi = std::min(b.size(), i + k);
    std::fill(cur.begin(), cur.end(), inf);
    if (lo == 0) cur[0] = i;
    std::size_t row_min = cur[0];
    for (std::size_t j = std::max<std::size_t>(lo, 1); j <= hi; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1, inf});
      row_min = std::min(row_min, cur[j]);
    }
    if (row_min > k) return k + 1;
    std::swap(prev, cur);
  }
  return std::min(prev[b.size()], inf);
}

std::string without_dots(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != '.') out.push_back(c);
  }
  return out;
}

}  // namespace

std::vector<TermGroup> group_terms(const TermVocabulary& vocab, const TermSimilarity& similarity,
                                   const GroupingConfig& cfg) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(cfg.edit_threshold) || !in_unit(cfg.sim_threshold))
    throw Error(ErrorKind::Config, "grouping thresholds must lie in [0, 1]");

  // (a) identical normalization collapses entries into one key.
  std::map<std::string, std::size_t> norm_index;
  std::vector<std::string> norms;
  std::vector<std::size_t> norm_counts;
  std::vector<std::size_t> vocab_to_norm(vocab.terms.size());
  for (std::size_t i = 0; i < vocab.terms.size(); ++i) {
    auto norm = try_normalize(vocab.terms[i]);
    if (!norm) throw Error(ErrorKind::EmptyNormalization, "candidate term normalizes to nothing");
    auto [it, inserted] = norm_index.emplace(*norm, norms.size());
    if (inserted) {
      norms.push_back(*norm);
      norm_counts.push_back(0);
    }
    vocab_to_norm[i] = it->second;
    norm_counts[it->second] += i < vocab.counts.size() ? vocab.counts[i] : 1;
  }
  DisjointSets sets(norms.size());

  // (b) initialisms and the abbreviation table.
  std::unordered_map<std::string, std::vector<std::size_t>> by_initialism;
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (const std::string ini = text::initialism(norms[i]); ini.size() >= 2) by_initialism[ini].push_back(i);
  }
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (norms[i].find(' ') != std::string::npos) continue;
    const std::string compact = without_dots(norms[i]);
    if (compact.size() < 2) continue;
    if (auto it = by_initialism.find(compact); it != by_initialism.end()) {
      for (std::size_t j : it->second) sets.unite(i, j);
    }
  }
  auto apply_pairs = [&](const std::vector<std::pair<std::string, std::string>>& pairs) {
    for (const auto& [short_form, long_form] : pairs) {
      auto a = try_normalize(short_form);
      auto b = try_normalize(long_form);
      if (!a || !b) continue;
      auto ia = norm_index.find(*a);
      auto ib = norm_index.find(*b);
      if (ia != norm_index.end() && ib != norm_index.end()) sets.unite(ia->second, ib->second);
    }
  };
  if (cfg.builtin_abbreviations) apply_pairs(builtin_abbreviations());
  apply_pairs(cfg.abbreviations);

  // (c) small edit distance confirmed by embedding similarity.
  if (similarity) {
    std::vector<std::size_t> first_vocab(norms.size(), vocab.terms.size());
    for (std::size_t i = 0; i < vocab.terms.size(); ++i) {
      auto& slot = first_vocab[vocab_to_norm[i]];
      slot = std::min(slot, i);
    }
    std::vector<std::size_t> order(norms.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return norms[a].size() < norms[b].size(); });
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
      const std::string& a = norms[order[oi]];
      for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
        const std::string& b = norms[order[oj]];
        const auto budget = static_cast<std::size_t>(std::floor(cfg.edit_threshold * static_cast<double>(b.size()) + 1e-12));
        if (b.size() - a.size() > budget) break;
        if (budget == 0) continue;
        const std::size_t d = bounded_levenshtein(a, b, budget);
        if (d > budget) continue;
        if (static_cast<double>(d) / static_cast<double>(b.size()) > cfg.edit_threshold) continue;
        const auto sim = similarity(first_vocab[order[oi]], first_vocab[order[oj]]);
        if (sim && *sim >= cfg.sim_threshold) sets.unite(order[oi], order[oj]);
      }
    }
  }

  // (d) user aliases; members absent from the vocabulary join as new entries.
  for (const auto& alias_group : cfg.aliases) {
    std::optional<std::size_t> anchor;
    for (const auto& raw : alias_group) {
      auto norm = try_normalize(raw);
      if (!norm) continue;
      auto it = norm_index.find(*norm);
      if (it == norm_index.end()) continue;
      if (anchor) sets.unite(*anchor, it->second);
      else anchor = it->second;
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> components;
  for (std::size_t i = 0; i < norms.size(); ++i) components[sets.find(i)].push_back(i);

  struct Draft {
    std::vector<std::string> members;
    std::size_t total = 0;
    std::size_t best_count = 0;
    std::string best;
  };
  std::vector<Draft> drafts;
  for (const auto& [root, idx] : components) {
    Draft d;
    for (std::size_t i : idx) {
      d.members.push_back(norms[i]);
      d.total += norm_counts[i];
      if (norm_counts[i] > d.best_count || (norm_counts[i] == d.best_count && norms[i] < d.best)) {
        d.best_count = norm_counts[i];
        d.best = norms[i];
      }
    }
    std::sort(d.members.begin(), d.members.end());
    drafts.push_back(std::move(d));
  }
  std::sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
    if (a.total != b.total) return a.total > b.total;
    return a.members.front() < b.members.front();
  });
  std::vector<TermGroup> groups;
  groups.reserve(drafts.size());
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    TermGroup g;
    g.group_id = static_cast<GroupId>(i);
    g.members = std::move(drafts[i].members);
    g.display_name = drafts[i].best;
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<std::vector<std::string>> load_alias_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read alias file " + path.string());
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> members;
    for (auto& m : text::split(line, '\t')) {
      if (!m.empty()) members.push_back(std::move(m));
    }
    if (members.size() >= 2) out.push_back(std::move(members));
  }
  return out;
}

void save_groups(const std::vector<TermGroup>& groups, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& g : groups) {
    out << g.group_id;
    for (const auto& m : g.members) out << '\t' << (g.excluded.contains(m) ? "!" : "") << m;
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<TermGroup> load_groups(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::vector<TermGroup> groups;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = text::split(line, '\t');
    TermGroup g;
    try {
      g.group_id = std::stoi(cols[0]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Format, "bad group id at line " + std::to_string(line_no));
    }
    for (std::size_t i = 1; i < cols.size(); ++i) {
      std::string m = cols[i];
      const bool excluded = !m.empty() && m.front() == '!';
      if (excluded) m.erase(0, 1);
      if (m.empty()) continue;
      if (excluded) g.excluded.insert(m);
      g.members.push_back(std::move(m));
    }
    if (g.members.empty()) throw Error(ErrorKind::Format, "group without members at line " + std::to_string(line_no));
    std::sort(g.members.begin(), g.members.end());
    const auto active = g.active_members();
    g.display_name = active.empty() ? g.members.front() : active.front();
    groups.push_back(std::move(g));
  }
  return groups;
}

TermLexicon::TermLexicon(const std::vector<TermGroup>& groups) {
  for (const auto& g : groups) {
    for (const auto& m : g.members) {
      if (!g.excluded.contains(m)) member_to_group_.emplace(m, g.group_id);
    }
  }
}

std::optional<GroupId> TermLexicon::lookup(const std::string& normalized) const {
  if (auto it = member_to_group_.find(normalized); it != member_to_group_.end()) return it->second;
  return std::nullopt;
}

std::vector<Occurrence> find_occurrences(const Sentence& s, const TermLexicon& lexicon) {
  std::vector<Occurrence> out;
  const std::size_t n = s.tokens.size();
  std::vector<char> punct(n);
  for (std::size_t i = 0; i < n; ++i) punct[i] = text::is_punctuation(s.tokens[i].surface) ? 1 : 0;
  std::size_t i = 0;
  while (i < n) {
    if (punct[i]) {
      ++i;
      continue;
    }
    std::size_t matched = 0;
    GroupId gid = 0;
    for (std::size_t len = std::min(kMaxMatchTokens, n - i); len >= 1; --len) {
      if (punct[i + len - 1]) continue;
      const auto norm = try_normalize(join_surfaces(s, i, i + len));
      if (!norm) continue;
      if (auto g = lexicon.lookup(*norm)) {
        matched = len;
        gid = *g;
        break;
      }
    }
    if (matched == 0) {
      ++i;
      continue;
    }
    out.push_back({0, 0, i, i + matched, gid});
    i += matched;
  }
  return out;
}

OccurrenceIndex::OccurrenceIndex(const Corpus& corpus, const std::vector<TermGroup>& groups) : lexicon_(groups) {
  for (const auto& g : groups) by_group_[g.group_id];
  std::map<GroupId, std::map<std::string, std::size_t>> surfaces;
  const auto& docs = corpus.documents();
  by_sentence_.resize(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    by_sentence_[d].resize(docs[d].sentences.size());
    for (std::size_t si = 0; si < docs[d].sentences.size(); ++si) {
      const Sentence& s = docs[d].sentences[si];
      auto occs = find_occurrences(s, lexicon_);
      for (auto& o : occs) {
        o.doc = d;
        o.sent = si;
        by_group_[o.group_id].push_back(o);
        ++surfaces[o.group_id][join_surfaces(s, o.start, o.end)];
      }
      by_sentence_[d][si] = std::move(occs);
    }
  }
  for (const auto& g : groups) labels_[g.group_id] = g.display_name;
  for (const auto& [gid, counts] : surfaces) {
    const auto best = std::max_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
      return a.second < b.second || (a.second == b.second && a.first > b.first);
    });
    labels_[gid] = best->first;
  }
}

const std::vector<Occurrence>& OccurrenceIndex::of(GroupId g) const {
  static const std::vector<Occurrence> kEmpty;
  auto it = by_group_.find(g);
  return it == by_group_.end() ? kEmpty : it->second;
}

const std::vector<Occurrence>& OccurrenceIndex::in_sentence(std::size_t doc, std::size_t sent) const {
  return by_sentence_.at(doc).at(sent);
}

const std::string& OccurrenceIndex::label(GroupId g) const {
  static const std::string kEmpty;
  auto it = labels_.find(g);
  return it == labels_.end() ? kEmpty : it->second;
}

const ImportanceScore* ImportanceTable::find(GroupId g) const {
  for (const auto& s : groups) {
    if (s.group_id == g) return &s;
  }
  return nullptr;
}

ImportanceTable score_importance(const Corpus& corpus, const std::vector<TermGroup>& groups,
                                 const OccurrenceIndex& occurrences) {
  ImportanceTable table;
  const auto& docs = corpus.documents();
  const double n_docs = static_cast<double>(docs.size());
  for (const auto& g : groups) {
    const auto& occs = occurrences.of(g.group_id);
    if (occs.empty()) continue;
    std::map<std::size_t, std::size_t> tf;
    std::map<std::string, std::map<std::size_t, std::size_t>> member_tf;
    for (const auto& o : occs) {
      ++tf[o.doc];
      const Sentence& s = docs[o.doc].sentences[o.sent];
      if (auto norm = try_normalize(join_surfaces(s, o.start, o.end))) ++member_tf[*norm][o.doc];
    }
    const double idf = std::log(n_docs / static_cast<double>(tf.size()));
    ImportanceScore score{g.group_id, 0.0, occs.size(), tf.size()};
    for (const auto& [doc, count] : tf) score.tfidf += static_cast<double>(count) * idf;
    table.groups.push_back(score);
    for (const auto& [member, per_doc] : member_tf) {
      const double member_idf = std::log(n_docs / static_cast<double>(per_doc.size()));
      MemberScore ms;
      for (const auto& [doc, count] : per_doc) {
        ms.tfidf += static_cast<double>(count) * member_idf;
        ms.frequency += count;
      }
      table.members[member] = ms;
    }
  }
  return table;
}

void assign_display_names(std::vector<TermGroup>& groups, const ImportanceTable& importance) {
  for (auto& g : groups) {
    const auto active = g.active_members();
    if (active.empty()) continue;
    const std::string* best = nullptr;
    MemberScore best_score;
    for (const auto& m : active) {
      auto it = importance.members.find(m);
      const MemberScore score = it == importance.members.end() ? MemberScore{} : it->second;
      const bool better = best == nullptr || score.tfidf > best_score.tfidf ||
                          (score.tfidf == best_score.tfidf && score.frequency > best_score.frequency);
      if (better) {
        best = &m;
        best_score = score;
      }
    }
    g.display_name = *best;
  }
}

std::vector<RankedGroup> top_groups(const std::vector<TermGroup>& groups, const ImportanceTable& importance,
                                    std::size_t n, const std::string& filter, std::size_t offset) {
  std::unordered_map<GroupId, const TermGroup*> by_id;
  for (const auto& g : groups) by_id[g.group_id] = &g;
  const std::string needle = text::to_lower(filter);
  std::vector<RankedGroup> ranked;
  for (const auto& score : importance.groups) {
    auto it = by_id.find(score.group_id);
    if (it == by_id.end()) continue;
    const TermGroup* g = it->second;
    const auto active = g->active_members();
    if (active.empty()) continue;
    if (!needle.empty() && std::none_of(active.begin(), active.end(), [&](const std::string& m) {
          return text::to_lower(m).find(needle) != std::string::npos;
        }))
      continue;
    ranked.push_back({g, score});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedGroup& a, const RankedGroup& b) {
    if (a.score.tfidf != b.score.tfidf) return a.score.tfidf > b.score.tfidf;
    if (a.score.frequency != b.score.frequency) return a.score.frequency > b.score.frequency;
    if (a.group->display_name != b.group->display_name) return a.group->display_name < b.group->display_name;
    return a.group->group_id < b.group->group_id;
  });
  if (offset >= ranked.size()) return {};
  ranked.erase(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(offset));
  if (ranked.size() > n) ranked.resize(n);
  return ranked;
}

std::vector<Snippet> snippets_for_group(const Corpus& corpus, const OccurrenceIndex& occurrences,
                                        const TermGroup& group, std::size_t max) {
  if (!occurrences.knows(group.group_id))
    throw Error(ErrorKind::UnknownTerm, "unknown term group " + std::to_string(group.group_id));
  std::map<std::pair<std::size_t, std::size_t>, Snippet> by_sentence;
  const auto& docs = corpus.documents();
  for (const auto& o : occurrences.of(group.group_id)) {
    auto& snip = by_sentence[{o.doc, o.sent}];
    if (snip.highlight_spans.empty()) {
      const Sentence& s = docs[o.doc].sentences[o.sent];
      snip.doc_id = s.doc_id;
      snip.sent_index = s.sent_index;
      snip.text = s.text();
    }
    snip.highlight_spans.emplace_back(o.start, o.end);
  }
  std::vector<Snippet> out;
  for (auto& [key, snip] : by_sentence) out.push_back(std::move(snip));
  std::stable_sort(out.begin(), out.end(), [](const Snippet& a, const Snippet& b) {
    if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
    return a.sent_index < b.sent_index;
  });
  if (out.size() > max) out.resize(max);
  return out;
}

}  // namespace setexp
