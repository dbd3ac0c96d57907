#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "setexp/corpus.hpp"

namespace setexp {

using GroupId = int;

struct TermSpan {
  std::string doc_id;
  std::size_t sent_index = 0;
  std::size_t start = 0;  // token range, half-open
  std::size_t end = 0;
  std::string surface;
};

// Maximal spans matching (ADJ|NOUN|PROPN)* (NOUN|PROPN)+, at most five tokens,
// chosen greedily left to right.
std::vector<TermSpan> chunk_noun_phrases(const Sentence& sentence);

inline constexpr std::size_t kMaxChunkTokens = 5;

struct CandidateConfig {
  std::size_t min_count = 5;
};

// Normalized candidate terms with corpus frequency >= min_count. Tagged
// sentences contribute noun-phrase chunks; untagged sentences contribute
// content-word unigrams and bigrams.
struct TermVocabulary {
  std::vector<std::string> terms;
  std::vector<std::size_t> counts;
};
TermVocabulary count_candidate_terms(const Corpus& corpus, const CandidateConfig& cfg = {});

struct TermGroup {
  GroupId group_id = 0;
  std::vector<std::string> members;  // normalized, sorted, distinct
  std::string display_name;
  std::set<std::string> excluded;

  std::vector<std::string> active_members() const;
  bool has_member(const std::string& m) const;
  friend bool operator==(const TermGroup&, const TermGroup&) = default;
};

struct GroupingConfig {
  double edit_threshold = 0.15;
  double sim_threshold = 0.5;
  bool builtin_abbreviations = true;
  // Extra (short form, long form) pairs, both normalized.
  std::vector<std::pair<std::string, std::string>> abbreviations;
  // Each inner list is one alias group (raw or normalized members).
  std::vector<std::vector<std::string>> aliases;
};

// Optional similarity between two vocabulary entries (by index).
using TermSimilarity = std::function<std::optional<double>(std::size_t, std::size_t)>;

// Union-find grouping: identical normalization, initialisms / abbreviation
// table, small edit distance backed by embedding similarity, explicit aliases.
// Throws Error{Config} when a threshold lies outside [0, 1].
std::vector<TermGroup> group_terms(const TermVocabulary& vocab, const TermSimilarity& similarity,
                                   const GroupingConfig& cfg = {});

std::vector<std::vector<std::string>> load_alias_file(const std::filesystem::path& path);

// Line-delimited: group_id, tab, members; excluded members prefixed with '!'.
void save_groups(const std::vector<TermGroup>& groups, const std::filesystem::path& path);
std::vector<TermGroup> load_groups(const std::filesystem::path& path);

// Maps normalized (non-excluded) members to their group.
class TermLexicon {
 public:
  TermLexicon() = default;
  explicit TermLexicon(const std::vector<TermGroup>& groups);

  std::optional<GroupId> lookup(const std::string& normalized) const;
  std::size_t size() const noexcept { return member_to_group_.size(); }

 private:
  std::unordered_map<std::string, GroupId> member_to_group_;
};

struct Occurrence {
  std::size_t doc = 0;   // index into Corpus::documents()
  std::size_t sent = 0;  // index into Document::sentences
  std::size_t start = 0;
  std::size_t end = 0;
  GroupId group_id = 0;
};

// Greedy longest match (up to kMaxMatchTokens tokens) of token windows against
// the lexicon; windows that start or end on punctuation never match.
inline constexpr std::size_t kMaxMatchTokens = 6;
std::vector<Occurrence> find_occurrences(const Sentence& sentence, const TermLexicon& lexicon);

class OccurrenceIndex {
 public:
  OccurrenceIndex() = default;
  OccurrenceIndex(const Corpus& corpus, const std::vector<TermGroup>& groups);

  bool knows(GroupId g) const { return by_group_.contains(g); }
  const std::vector<Occurrence>& of(GroupId g) const;
  // Occurrences of one sentence, ordered by start token.
  const std::vector<Occurrence>& in_sentence(std::size_t doc, std::size_t sent) const;
  // Most frequent surface form of the group's occurrences; falls back to the
  // display name for groups never seen.
  const std::string& label(GroupId g) const;
  const TermLexicon& lexicon() const noexcept { return lexicon_; }

 private:
  TermLexicon lexicon_;
  std::map<GroupId, std::vector<Occurrence>> by_group_;
  std::vector<std::vector<std::vector<Occurrence>>> by_sentence_;
  std::unordered_map<GroupId, std::string> labels_;
};

struct ImportanceScore {
  GroupId group_id = 0;
  double tfidf = 0.0;
  std::size_t frequency = 0;
  std::size_t doc_frequency = 0;
};

struct MemberScore {
  double tfidf = 0.0;
  std::size_t frequency = 0;
};

struct ImportanceTable {
  std::vector<ImportanceScore> groups;  // groups with >= 1 occurrence
  std::map<std::string, MemberScore> members;

  const ImportanceScore* find(GroupId g) const;
};

// tfidf = sum over documents of tf(g, d) * ln(N / df(g)).
ImportanceTable score_importance(const Corpus& corpus, const std::vector<TermGroup>& groups,
                                 const OccurrenceIndex& occurrences);

// Display name = active member with the highest member score, then higher
// frequency, then lexicographic.
void assign_display_names(std::vector<TermGroup>& groups, const ImportanceTable& importance);

struct RankedGroup {
  const TermGroup* group = nullptr;
  ImportanceScore score;
};

// Descending tfidf, ties by frequency then display name; the filter is a
// case-insensitive substring over active members.
std::vector<RankedGroup> top_groups(const std::vector<TermGroup>& groups, const ImportanceTable& importance,
                                    std::size_t n = 5000, const std::string& filter = {}, std::size_t offset = 0);

// Throws Error{UnknownTerm} when the index has never seen the group.
std::vector<Snippet> snippets_for_group(const Corpus& corpus, const OccurrenceIndex& occurrences,
                                        const TermGroup& group, std::size_t max);

}  // namespace setexp
