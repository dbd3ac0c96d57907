#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "setexp/corpus.hpp"
#include "setexp/terms.hpp"

namespace setexp {

enum class ContextType : std::uint8_t { Linear = 0, List = 1, Dep = 2, SP = 3, UP = 4 };

inline constexpr std::size_t kNumContextTypes = 5;
inline constexpr std::array<ContextType, kNumContextTypes> kContextTypes = {
    ContextType::Linear, ContextType::List, ContextType::Dep, ContextType::SP, ContextType::UP};

std::string_view to_string(ContextType t);
// Accepts the lowercase names used in dumps ("linear", "list", "dep", "sp", "up").
ContextType context_type_from_string(std::string_view name);
constexpr std::size_t index_of(ContextType t) { return static_cast<std::size_t>(t); }

struct ContextPair {
  ContextType type = ContextType::Linear;
  GroupId focus = 0;
  std::string context;
  friend bool operator==(const ContextPair&, const ContextPair&) = default;
};

// A sentence seen as a sequence of context units: term-group occurrences
// (one unit however many tokens they span), single words and punctuation.
struct Unit {
  enum class Kind : std::uint8_t { Term, Word, Punct };
  Kind kind = Kind::Word;
  std::size_t start = 0;  // token range
  std::size_t end = 0;
  GroupId group = -1;     // valid for Term
  std::string label;      // group label for terms, surface otherwise

  bool is_term() const { return kind == Kind::Term; }
};
using UnitSequence = std::vector<Unit>;

UnitSequence resolve_units(const Sentence& sentence, std::span<const Occurrence> occurrences,
                           const OccurrenceIndex& index);
UnitSequence resolve_units(const Sentence& sentence, const OccurrenceIndex& index);

struct PatternInventory {
  // Token templates; X and Y mark the two slots, other tokens match words
  // case-insensitively.
  std::vector<std::vector<std::string>> templates;

  static PatternInventory defaults();
  // Throws Error{Config} for templates lacking an X or a Y slot.
  static PatternInventory from_strings(const std::vector<std::string>& patterns);
};

struct ExtractionConfig {
  std::size_t linear_window = 5;
  // Drop stopwords before building linear windows.
  bool linear_stoplist = false;
  PatternInventory patterns = PatternInventory::defaults();
};

std::vector<ContextPair> extract_linear(const UnitSequence& units, std::size_t win = 5, bool stoplist = false);
std::vector<ContextPair> extract_lists(const UnitSequence& units);
// One pair per ordered pair of distinct terms across a block of >= 3
// consecutive bullet lines; each line contributes its first term.
std::vector<ContextPair> extract_bullet_lists(std::span<const UnitSequence> bullet_lines);
std::vector<ContextPair> extract_dependency(const Sentence& sentence, const UnitSequence& units);
std::vector<ContextPair> extract_symmetric(const UnitSequence& units, const PatternInventory& patterns);
std::vector<ContextPair> extract_unary(const UnitSequence& units);

std::vector<ContextPair> extract_linear(const Sentence& s, const OccurrenceIndex& index, std::size_t win = 5);
std::vector<ContextPair> extract_lists(const Sentence& s, const OccurrenceIndex& index);
std::vector<ContextPair> extract_dependency(const Sentence& s, const OccurrenceIndex& index);
std::vector<ContextPair> extract_symmetric(const Sentence& s, const OccurrenceIndex& index,
                                           const PatternInventory& patterns = PatternInventory::defaults());
std::vector<ContextPair> extract_unary(const Sentence& s, const OccurrenceIndex& index);

// Context units of a Linear extraction with stopwords removed, for display.
std::vector<std::string> content_units(const std::vector<ContextPair>& pairs);

// Interned (focus, context) pairs of one context type.
class PairStream {
 public:
  explicit PairStream(ContextType type = ContextType::Linear) : type_(type) {}

  void add(GroupId focus, const std::string& context);

  ContextType type() const noexcept { return type_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  const std::vector<std::pair<GroupId, std::int32_t>>& pairs() const noexcept { return pairs_; }
  const std::vector<std::string>& contexts() const noexcept { return contexts_; }
  const std::vector<std::size_t>& context_counts() const noexcept { return context_counts_; }
  const std::map<GroupId, std::size_t>& focus_counts() const noexcept { return focus_counts_; }
  std::int32_t find_context(const std::string& context) const;

 private:
  ContextType type_;
  std::vector<std::string> contexts_;
  std::unordered_map<std::string, std::int32_t> context_ids_;
  std::vector<std::size_t> context_counts_;
  std::map<GroupId, std::size_t> focus_counts_;
  std::vector<std::pair<GroupId, std::int32_t>> pairs_;
};

struct PairStreams {
  std::array<PairStream, kNumContextTypes> streams{PairStream(ContextType::Linear), PairStream(ContextType::List),
                                                   PairStream(ContextType::Dep), PairStream(ContextType::SP),
                                                   PairStream(ContextType::UP)};

  PairStream& operator[](ContextType t) { return streams[index_of(t)]; }
  const PairStream& operator[](ContextType t) const { return streams[index_of(t)]; }
};

PairStreams extract_all(const Corpus& corpus, const OccurrenceIndex& index, const ExtractionConfig& cfg = {});

// `ctx_type \t focus_group_id \t context_string`, one pair per line.
void write_pair_dump(const PairStream& stream, std::ostream& out);
void write_pair_dump(const PairStreams& streams, const std::filesystem::path& path);
PairStreams read_pair_dump(const std::filesystem::path& path);

}  // namespace setexp
