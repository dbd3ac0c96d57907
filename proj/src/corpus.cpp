#include "setexp/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "setexp/error.hpp"
#include "setexp/text.hpp"

namespace setexp {

namespace fs = std::filesystem;

bool Sentence::has_dependencies() const {
  return std::any_of(tokens.begin(), tokens.end(), [](const Token& t) { return !t.deprel.empty(); });
}

bool Sentence::has_pos() const {
  return std::any_of(tokens.begin(), tokens.end(), [](const Token& t) { return t.pos != "X"; });
}

std::string Sentence::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out += tokens[i].surface;
    if (i + 1 < tokens.size() && tokens[i].space_after) out.push_back(' ');
  }
  return out;
}

Corpus::Corpus(std::vector<Document> documents) : documents_(std::move(documents)) {
  std::unordered_set<std::string> ids;
  for (const auto& doc : documents_) {
    if (!ids.insert(doc.doc_id).second) throw Error(ErrorKind::Config, "duplicate doc id: " + doc.doc_id);
    stats_.sentences += doc.sentences.size();
    for (const auto& s : doc.sentences) stats_.tokens += s.tokens.size();
  }
  stats_.documents = documents_.size();
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "read failed: " + path.string());
  return ss.str();
}

bool is_terminal(const std::string& tok) {
  return !tok.empty() && std::all_of(tok.begin(), tok.end(), [](char c) { return c == '.' || c == '!' || c == '?'; });
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

// Returns the byte length of a bullet marker (including trailing blank) or 0.
std::size_t bullet_marker(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  auto followed_by_space = [&](std::size_t at) { return at < line.size() && (line[at] == ' ' || line[at] == '\t'); };
  if (i < line.size() && (line[i] == '-' || line[i] == '*') && followed_by_space(i + 1)) return i + 2;
  if (line.substr(i, 3) == "\xE2\x80\xA2" && followed_by_space(i + 3)) return i + 4;
  std::size_t j = i;
  while (j < line.size() && line[j] >= '0' && line[j] <= '9') ++j;
  if (j > i && j < line.size() && line[j] == '.' && followed_by_space(j + 1)) return j + 2;
  return 0;
}

Token make_plain_token(const text::RawToken& raw) {
  Token t;
  t.surface = raw.text;
  t.lemma = text::to_lower(raw.text);
  t.span = {raw.begin, raw.end};
  return t;
}

class PlainSentenceBuilder {
 public:
  explicit PlainSentenceBuilder(std::string doc_id) { doc_.doc_id = std::move(doc_id); }

  void add_running(const std::vector<text::RawToken>& raws) {
    for (const auto& raw : raws) pending_.push_back(raw);
  }

  void flush_running() {
    std::vector<text::RawToken> current;
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      current.push_back(pending_[i]);
      const bool boundary = i + 1 < pending_.size() && is_terminal(pending_[i].text) &&
                            pending_[i + 1].begin > pending_[i].end &&
                            text::starts_upper_or_digit(pending_[i + 1].text);
      if (boundary) emit(std::move(current), false), current.clear();
    }
    if (!current.empty()) emit(std::move(current), false);
    pending_.clear();
  }

  void add_bullet(std::vector<text::RawToken> raws) {
    flush_running();
    if (!raws.empty()) emit(std::move(raws), true);
  }

  Document take() {
    flush_running();
    return std::move(doc_);
  }

  bool empty() const { return doc_.sentences.empty() && pending_.empty(); }

 private:
  void emit(std::vector<text::RawToken> raws, bool list_item) {
    Sentence s;
    s.doc_id = doc_.doc_id;
    s.sent_index = doc_.sentences.size();
    s.list_item = list_item;
    for (std::size_t i = 0; i < raws.size(); ++i) {
      Token t = make_plain_token(raws[i]);
      t.space_after = i + 1 >= raws.size() || raws[i + 1].begin > raws[i].end;
      s.tokens.push_back(std::move(t));
    }
    doc_.sentences.push_back(std::move(s));
  }

  Document doc_;
  std::vector<text::RawToken> pending_;
};

void parse_plain_into(std::string_view content, const std::string& doc_prefix, const IngestConfig& cfg,
                      std::vector<Document>& docs) {
  std::size_t block_no = 0;
  auto block_id = [&] { return cfg.doc_per_block ? doc_prefix + "#" + std::to_string(block_no) : doc_prefix; };
  PlainSentenceBuilder builder(block_id());
  auto close_doc = [&] {
    Document d = builder.take();
    if (!d.sentences.empty()) docs.push_back(std::move(d));
  };

  std::size_t pos = 0;
  bool in_block = false;
  while (pos <= content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    const std::string_view line = content.substr(pos, eol - pos);
    if (is_blank(line)) {
      builder.flush_running();
      if (cfg.doc_per_block && in_block) {
        close_doc();
        ++block_no;
        builder = PlainSentenceBuilder(block_id());
      }
      in_block = false;
    } else {
      in_block = true;
      if (const std::size_t marker = bullet_marker(line); marker > 0) {
        builder.add_bullet(text::tokenize(line.substr(marker), pos + marker));
      } else {
        builder.add_running(text::tokenize(line, pos));
      }
    }
    if (eol == content.size()) break;
    pos = eol + 1;
  }
  close_doc();
}

}  // namespace

Corpus parse_plain_text(std::string_view content, const std::string& doc_prefix, const IngestConfig& cfg) {
  std::vector<Document> docs;
  parse_plain_into(content, doc_prefix, cfg, docs);
  Corpus corpus(std::move(docs));
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "corpus contains no tokens");
  return corpus;
}

Corpus load_plain_text(const fs::path& path, const IngestConfig& cfg) {
  std::vector<fs::path> files;
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    if (!fs::exists(path, ec)) throw Error(ErrorKind::Io, "no such file: " + path.string());
    files.push_back(path);
  }
  std::vector<Document> docs;
  for (const auto& f : files) parse_plain_into(read_file(f), f.filename().string(), cfg, docs);
  Corpus corpus(std::move(docs));
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "corpus contains no tokens: " + path.string());
  return corpus;
}

void validate_tree(const Sentence& s) {
  if (!s.has_dependencies()) return;
  const int n = static_cast<int>(s.tokens.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const Token& t = s.tokens[static_cast<std::size_t>(i)];
    if (t.deprel.empty()) throw Error(ErrorKind::InvalidTree, "token " + std::to_string(i + 1) + " lacks a relation");
    if (!t.head) {
      ++roots;
      continue;
    }
    if (*t.head < 0 || *t.head >= n)
      throw Error(ErrorKind::InvalidTree, "head of token " + std::to_string(i + 1) + " out of range");
    if (*t.head == i) throw Error(ErrorKind::InvalidTree, "token " + std::to_string(i + 1) + " is its own head");
  }
  if (roots != 1) throw Error(ErrorKind::InvalidTree, "expected exactly one root, found " + std::to_string(roots));
  for (int i = 0; i < n; ++i) {
    int cur = i;
    for (int steps = 0; steps <= n; ++steps) {
      const auto& h = s.tokens[static_cast<std::size_t>(cur)].head;
      if (!h) break;
      cur = *h;
      if (steps == n) throw Error(ErrorKind::InvalidTree, "cycle through token " + std::to_string(i + 1));
    }
  }
}

namespace {

bool parse_int(std::string_view s, int& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

Corpus parse_conllu(std::string_view content, const std::string& default_doc_id) {
  std::vector<Document> docs;
  Document doc{default_doc_id, {}};
  Sentence sent;
  std::size_t offset = 0;
  std::size_t line_no = 0;

  auto finish_sentence = [&] {
    if (sent.tokens.empty()) return;
    validate_tree(sent);
    sent.doc_id = doc.doc_id;
    sent.sent_index = doc.sentences.size();
    sent.tokens.back().space_after = true;
    doc.sentences.push_back(std::move(sent));
    sent = Sentence{};
    offset += 1;
  };
  auto finish_doc = [&] {
    finish_sentence();
    if (!doc.sentences.empty()) docs.push_back(std::move(doc));
    doc = Document{};
  };

  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view line = content.substr(pos, eol - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty() || is_blank(line)) {
      finish_sentence();
    } else if (line.front() == '#') {
      constexpr std::string_view kNewDoc = "# newdoc id =";
      if (line.starts_with(kNewDoc)) {
        finish_doc();
        std::string id(line.substr(kNewDoc.size()));
        id.erase(0, id.find_first_not_of(' '));
        doc.doc_id = id;
      }
    } else {
      const auto cols = text::split(line, '\t');
      if (cols.size() != 10) throw ParseError(line_no, "expected 10 columns, got " + std::to_string(cols.size()));
      if (cols[0].find_first_of("-.") != std::string::npos) {
        // multiword token range or empty node
      } else {
        int id = 0;
        if (!parse_int(cols[0], id)) throw ParseError(line_no, "bad token id '" + cols[0] + "'");
        if (id != static_cast<int>(sent.tokens.size()) + 1)
          throw ParseError(line_no, "token id " + cols[0] + " out of sequence");
        Token t;
        t.surface = cols[1];
        t.lemma = cols[2] == "_" ? text::to_lower(cols[1]) : cols[2];
        t.pos = cols[3] == "_" ? "X" : cols[3];
        if (cols[6] != "_") {
          int head = 0;
          if (!parse_int(cols[6], head)) throw ParseError(line_no, "bad head '" + cols[6] + "'");
          if (head < 0) throw ParseError(line_no, "negative head");
          if (head > 0) t.head = head - 1;
        }
        t.deprel = cols[7] == "_" ? std::string{} : cols[7];
        if (!t.deprel.empty() && cols[6] == "_") throw ParseError(line_no, "relation without head");
        if (t.deprel.empty() && cols[6] != "_") t.deprel = "dep";
        t.space_after = cols[9].find("SpaceAfter=No") == std::string::npos;
        t.span = {offset, offset + t.surface.size()};
        offset = t.span.end + (t.space_after ? 1 : 0);
        if (t.surface.empty()) throw ParseError(line_no, "empty FORM");
        sent.tokens.push_back(std::move(t));
      }
    }
    if (eol == content.size()) break;
    pos = eol + 1;
  }
  finish_doc();
  Corpus corpus(std::move(docs));
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "CoNLL-U input contains no tokens");
  return corpus;
}

Corpus load_conllu(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw Error(ErrorKind::Io, "no such file: " + path.string());
  return parse_conllu(read_file(path), path.stem().string());
}

void save_corpus(const Corpus& corpus, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "SETEXP-CORPUS-v1\n";
  for (const auto& doc : corpus.documents()) {
    out << "D\t" << doc.doc_id << '\n';
    for (const auto& s : doc.sentences) {
      out << "S\t" << (s.list_item ? 1 : 0) << '\n';
      for (const auto& t : s.tokens) {
        out << "T\t" << t.surface << '\t' << t.lemma << '\t' << t.pos << '\t';
        if (t.head) out << *t.head;
        out << '\t' << t.deprel << '\t' << t.span.begin << '\t' << t.span.end << '\t' << (t.space_after ? 1 : 0)
            << '\n';
      }
    }
  }
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

Corpus load_corpus(const fs::path& path) {
  const std::string content = read_file(path);
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line) || line != "SETEXP-CORPUS-v1") throw Error(ErrorKind::Format, "not a corpus cache: " + path.string());
  std::vector<Document> docs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cols = text::split(line, '\t');
    if (cols[0] == "D" && cols.size() == 2) {
      docs.push_back(Document{cols[1], {}});
    } else if (cols[0] == "S" && cols.size() == 2 && !docs.empty()) {
      Sentence s;
      s.doc_id = docs.back().doc_id;
      s.sent_index = docs.back().sentences.size();
      s.list_item = cols[1] == "1";
      docs.back().sentences.push_back(std::move(s));
    } else if (cols[0] == "T" && cols.size() == 9 && !docs.empty() && !docs.back().sentences.empty()) {
      Token t;
      t.surface = cols[1];
      t.lemma = cols[2];
      t.pos = cols[3];
      if (!cols[4].empty()) {
        int h = 0;
        if (!parse_int(cols[4], h)) throw Error(ErrorKind::Format, "bad head at line " + std::to_string(line_no));
        t.head = h;
      }
      t.deprel = cols[5];
      t.span = {std::stoull(cols[6]), std::stoull(cols[7])};
      t.space_after = cols[8] == "1";
      docs.back().sentences.back().tokens.push_back(std::move(t));
    } else {
      throw Error(ErrorKind::Format, "bad corpus record at line " + std::to_string(line_no));
    }
  }
  return Corpus(std::move(docs));
}

}  // namespace setexp
