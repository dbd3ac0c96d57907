#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace setexp {

struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct Token {
  std::string surface;
  std::string lemma;           // lowercased surface when the source has none
  std::string pos = "X";       // UPOS
  std::optional<int> head;     // sentence-local index; absent for the root and unparsed input
  std::string deprel;          // empty when unparsed
  CharSpan span;               // byte offsets into the source file
  bool space_after = true;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::string doc_id;
  std::size_t sent_index = 0;
  // The sentence is one line of a bullet block ("- x", "* x", "• x", "1. x").
  bool list_item = false;

  bool has_dependencies() const;
  bool has_pos() const;
  // Surfaces joined according to space_after.
  std::string text() const;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;
  friend bool operator==(const Document&, const Document&) = default;
};

struct CorpusStats {
  std::size_t tokens = 0;
  std::size_t sentences = 0;
  std::size_t documents = 0;
  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

class Corpus {
 public:
  Corpus() = default;
  // Throws Error{Config} on duplicate doc ids.
  explicit Corpus(std::vector<Document> documents);

  const std::vector<Document>& documents() const noexcept { return documents_; }
  const CorpusStats& stats() const noexcept { return stats_; }
  bool empty() const noexcept { return stats_.tokens == 0; }

  friend bool operator==(const Corpus& a, const Corpus& b) { return a.documents_ == b.documents_; }

 private:
  std::vector<Document> documents_;
  CorpusStats stats_;
};

struct IngestConfig {
  // Blank-line separated blocks become separate documents.
  bool doc_per_block = false;
};

// Plain UTF-8 text. `path` may also be a directory, in which case every
// regular file inside (sorted by name) is loaded as its own document source.
Corpus load_plain_text(const std::filesystem::path& path, const IngestConfig& cfg = {});
Corpus parse_plain_text(std::string_view content, const std::string& doc_prefix, const IngestConfig& cfg = {});

Corpus load_conllu(const std::filesystem::path& path);
Corpus parse_conllu(std::string_view content, const std::string& default_doc_id = "doc");

// Validates head ranges, self loops, cycles and single-rootedness.
// Throws Error{InvalidTree}.
void validate_tree(const Sentence& sentence);

// Line-delimited cache format headed by SETEXP-CORPUS-v1.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

struct Snippet {
  std::string doc_id;
  std::size_t sent_index = 0;
  std::string text;
  std::vector<std::pair<std::size_t, std::size_t>> highlight_spans;  // half-open token ranges
};

}  // namespace setexp
