#include "setexp/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "setexp/error.hpp"
#include "setexp/text.hpp"

namespace setexp {

namespace fs = std::filesystem;
using nlohmann::json;

double average_precision_at_n(std::span<const GroupId> ranked, const std::set<GroupId>& relevant, std::size_t n) {
  if (relevant.empty()) throw Error(ErrorKind::UndefinedMetric, "average precision needs at least one relevant item");
  if (n == 0) return 0.0;
  const std::size_t depth = std::min(n, ranked.size());
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    if (!relevant.contains(ranked[i])) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(std::min(relevant.size(), n));
}

std::vector<EvalQuery> sample_queries(const std::vector<GoldClass>& gold, const EvalConfig& cfg) {
  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<EvalQuery> out;
  for (const auto& cls : gold) {
    if (cls.members.size() < 2) continue;
    const std::size_t hi = std::min(cfg.max_seeds, cls.members.size() - 1);
    const std::size_t lo = std::min(std::max<std::size_t>(cfg.min_seeds, 1), hi);
    std::uniform_int_distribution<std::size_t> size_dist(lo, hi);
    for (std::size_t q = 0; q < cfg.queries_per_class; ++q) {
      std::vector<GroupId> members = cls.members;
      std::shuffle(members.begin(), members.end(), rng);
      const std::size_t k = size_dist(rng);
      EvalQuery query;
      query.class_name = cls.name;
      query.seeds.assign(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(k));
      query.relevant.insert(members.begin() + static_cast<std::ptrdiff_t>(k), members.end());
      out.push_back(std::move(query));
    }
  }
  return out;
}

EvalReport map_at_n(const Ranker& ranker, const std::vector<GoldClass>& gold, const EvalConfig& cfg) {
  if (cfg.cutoffs.empty()) throw Error(ErrorKind::Config, "no cutoffs requested");
  const std::size_t depth = *std::max_element(cfg.cutoffs.begin(), cfg.cutoffs.end());
  EvalReport report;
  std::map<std::string, ClassReport> per_class;
  std::map<std::size_t, double> totals;
  for (const auto& query : sample_queries(gold, cfg)) {
    std::vector<GroupId> ranked;
    try {
      ranked = ranker(SeedSet(query.seeds, query.class_name), depth);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoSignal) throw;
      report.warnings.push_back(query.class_name + ": query skipped, " + e.what());
      continue;
    }
    std::erase_if(ranked, [&](GroupId g) { return std::find(query.seeds.begin(), query.seeds.end(), g) != query.seeds.end(); });
    auto& cls = per_class[query.class_name];
    cls.name = query.class_name;
    ++cls.queries;
    ++report.queries;
    for (std::size_t n : cfg.cutoffs) {
      const double ap = average_precision_at_n(ranked, query.relevant, n);
      cls.map_at[n] += ap;
      totals[n] += ap;
    }
  }
  for (auto& [name, cls] : per_class) {
    for (auto& [n, v] : cls.map_at) v /= static_cast<double>(cls.queries);
    report.classes.push_back(cls);
  }
  for (std::size_t n : cfg.cutoffs) report.map_at[n] = report.queries ? totals[n] / static_cast<double>(report.queries) : 0.0;
  return report;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "queries " << report.queries << '\n';
  for (const auto& [n, v] : report.map_at) out << "MAP@" << n << ' ' << v << '\n';
  out << "\nclass";
  for (const auto& [n, v] : report.map_at) out << "\tAP@" << n;
  out << "\tqueries\n";
  for (const auto& cls : report.classes) {
    out << cls.name;
    for (const auto& [n, v] : cls.map_at) out << '\t' << v;
    out << '\t' << cls.queries << '\n';
  }
  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
  return out.str();
}

json to_json(const EvalReport& report) {
  json overall = json::object();
  for (const auto& [n, v] : report.map_at) overall["map@" + std::to_string(n)] = v;
  json classes = json::array();
  for (const auto& cls : report.classes) {
    json c = {{"name", cls.name}, {"queries", cls.queries}};
    for (const auto& [n, v] : cls.map_at) c["map@" + std::to_string(n)] = v;
    classes.push_back(c);
  }
  return {{"queries", report.queries}, {"overall", overall}, {"classes", classes}, {"warnings", report.warnings}};
}

namespace {

struct GenToken {
  std::string form;
  std::string upos;
  int head = -1;  // 0-based index, -2 for the root, -1 when unparsed
  std::string deprel;
};

class SentenceBuilder {
 public:
  std::size_t word(const std::string& form, const char* upos) {
    tokens_.push_back({form, upos, -1, {}});
    return tokens_.size() - 1;
  }

  // Returns the index of the last token, which heads the term.
  std::size_t term(const std::string& t) {
    const auto parts = text::split(t, ' ');
    const std::size_t first = tokens_.size();
    for (const auto& p : parts) tokens_.push_back({p, "NOUN", -1, {}});
    const std::size_t last = tokens_.size() - 1;
    for (std::size_t i = first; i < last; ++i) {
      tokens_[i].head = static_cast<int>(last);
      tokens_[i].deprel = "compound";
    }
    return last;
  }

  void arc(std::size_t dep, std::size_t head, const char* rel) {
    tokens_[dep].head = static_cast<int>(head);
    tokens_[dep].deprel = rel;
  }
  void root(std::size_t i) {
    tokens_[i].head = -2;
    tokens_[i].deprel = "root";
  }

  void emit(std::ostream& out, bool parsed) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      const auto& t = tokens_[i];
      out << i + 1 << '\t' << t.form << '\t' << text::to_lower(t.form) << '\t' << t.upos << "\t_\t_\t";
      if (parsed) {
        out << (t.head == -2 ? 0 : t.head + 1) << '\t' << t.deprel;
      } else {
        out << "_\t_";
      }
      out << "\t_\t_\n";
    }
    out << '\n';
    tokens_.clear();
  }

 private:
  std::vector<GenToken> tokens_;
};

class NameMaker {
 public:
  explicit NameMaker(std::mt19937_64& rng) : rng_(rng) {}

  void reserve(const std::string& name) { taken_.push_back(name); }

  std::string make() {
    static const std::string onset = "bdfgklmnprstvz";
    static const std::string vowel = "aeiou";
    static const std::string coda = "lmnrsk";
    for (;;) {
      std::uniform_int_distribution<int> syllables(2, 3);
      std::string w;
      const int n = syllables(rng_);
      for (int s = 0; s < n; ++s) {
        w += onset[pick(onset.size())];
        w += vowel[pick(vowel.size())];
        if (pick(3) == 0) w += coda[pick(coda.size())];
      }
      if (acceptable(w)) {
        taken_.push_back(w);
        return w;
      }
    }
  }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  bool acceptable(const std::string& w) const {
    if (text::is_stopword(w)) return false;
    for (const auto& t : taken_) {
      if (text::normalized_levenshtein(w, t) <= 0.34) return false;
    }
    return true;
  }

  std::mt19937_64& rng_;
  std::vector<std::string> taken_;
};

struct ClassLexicon {
  std::string noun;
  std::vector<std::string> verbs;
  std::vector<std::string> objects;
  std::vector<std::string> pool;
};

const std::vector<std::string> kIntros[] = {{"They", "sold"}, {"We", "compared"}, {"She", "listed"}, {"He", "described"}};
const std::vector<std::string> kCarriers[] = {{"They", "chose"}, {"We", "wanted"}, {"She", "picked"}};

struct SymmetricFrame {
  std::vector<std::pair<std::string, const char*>> before, middle;
};

const SymmetricFrame kSymmetric[] = {
    {{}, {{"and", "CCONJ"}}},
    {{}, {{"or", "CCONJ"}}},
    {{}, {{"rather", "ADV"}, {"than", "ADP"}}},
    {{}, {{"as", "ADV"}, {"well", "ADV"}, {"as", "ADP"}}},
    {{}, {{"but", "CCONJ"}, {"not", "PART"}}},
    {{{"from", "ADP"}}, {{"to", "ADP"}}},
    {{{"either", "CCONJ"}}, {{"or", "CCONJ"}}},
    {{{"neither", "CCONJ"}}, {{"nor", "CCONJ"}}},
};

}  // namespace

std::vector<SyntheticClass> nested_fruit_classes() {
  return {
      {"fruit", "fruit",
       {"apple", "banana", "pear", "cherry", "mango", "plum", "peach", "apricot", "papaya", "guava", "fig", "kiwi",
        "melon", "grape"},
       std::nullopt},
      {"citrus", "citrus", {"orange", "grapefruit", "lemon", "lime", "tangerine", "pomelo"}, 0},
      {"metal", "metal", {"iron", "copper", "zinc", "nickel", "cobalt", "silver", "tin", "chromium", "titanium", "tungsten"},
       std::nullopt},
      {"bird", "bird", {"sparrow", "robin", "eagle", "falcon", "heron", "owl", "crow", "finch", "parrot", "pigeon"},
       std::nullopt},
      {"instrument", "instrument",
       {"violin", "cello", "flute", "oboe", "trumpet", "harp", "piano", "drum", "clarinet", "guitar"}, std::nullopt},
  };
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  NameMaker names(rng);
  for (const char* w : {"market", "report", "season", "today", "here", "kind", "common", "they", "she", "we", "he"})
    names.reserve(w);

  std::vector<SyntheticClass> classes = spec.explicit_classes;
  if (classes.empty()) {
    if (spec.classes < 2 || spec.members < 5) throw Error(ErrorKind::Config, "synthetic corpus needs >= 2 classes of >= 5 members");
    std::bernoulli_distribution two_words(spec.multiword);
    for (std::size_t c = 0; c < spec.classes; ++c) {
      SyntheticClass cls;
      cls.noun = names.make();
      cls.name = "class_" + cls.noun;
      for (std::size_t m = 0; m < spec.members; ++m) {
        std::string member = names.make();
        if (two_words(rng)) member += " " + names.make();
        cls.members.push_back(member);
      }
      classes.push_back(std::move(cls));
    }
  } else {
    if (classes.size() < 2) throw Error(ErrorKind::Config, "synthetic corpus needs >= 2 classes");
    for (const auto& cls : classes) {
      if (cls.members.size() < 5 && !cls.parent) throw Error(ErrorKind::Config, "class '" + cls.name + "' needs >= 5 members");
      if (cls.parent && *cls.parent >= classes.size()) throw Error(ErrorKind::Config, "bad parent index for '" + cls.name + "'");
      for (const auto& m : cls.members) {
        for (const auto& part : text::split(m, ' ')) names.reserve(part);
      }
      names.reserve(cls.noun);
    }
  }
  if (spec.sentences == 0) throw Error(ErrorKind::Config, "synthetic corpus needs at least one sentence");

  std::vector<ClassLexicon> lex(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    lex[c].noun = classes[c].noun;
    for (int i = 0; i < 3; ++i) lex[c].verbs.push_back(names.make());
    for (int i = 0; i < 2; ++i) lex[c].objects.push_back(names.make());
    lex[c].pool = classes[c].members;
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (classes[c].parent) {
      auto& parent_pool = lex[*classes[c].parent].pool;
      parent_pool.insert(parent_pool.end(), classes[c].members.begin(), classes[c].members.end());
    }
  }
  for (auto& l : lex) std::shuffle(l.pool.begin(), l.pool.end(), rng);
  const std::string shared_verb = names.make();
  std::vector<std::string> everything;
  for (const auto& cls : classes) everything.insert(everything.end(), cls.members.begin(), cls.members.end());

  SyntheticCorpus out;
  for (std::size_t c = 0; c < classes.size(); ++c) out.gold.push_back({classes[c].name, lex[c].pool});

  const auto pick = [&rng](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  // Member i of a pool is drawn with weight 1 / (i + 1)^zipf.
  const auto draw = [&](const std::vector<std::string>& pool, std::size_t k) {
    std::vector<double> w(pool.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::pow(static_cast<double>(i + 1), -spec.zipf);
    std::vector<std::string> p;
    for (std::size_t i = 0; i < k; ++i) {
      std::discrete_distribution<std::size_t> d(w.begin(), w.end());
      const std::size_t j = d(rng);
      p.push_back(pool[j]);
      w[j] = 0.0;
    }
    return p;
  };
  std::bernoulli_distribution intrude(spec.intruder);
  const auto with_intruder = [&](std::vector<std::string> items, std::size_t c) {
    if (!intrude(rng)) return items;
    std::string other = everything[pick(everything.size())];
    if (std::find(lex[c].pool.begin(), lex[c].pool.end(), other) != lex[c].pool.end()) return items;
    items[pick(items.size())] = other;
    return items;
  };

  const double share = 1.0 - spec.noise;
  std::discrete_distribution<int> kind({0.3 * share, 0.25 * share, 0.2 * share, 0.25 * share, spec.noise});
  std::ostringstream conllu;
  SentenceBuilder b;
  for (std::size_t s = 0; s < spec.sentences; ++s) {
    if (s % spec.sentences_per_doc == 0) conllu << "# newdoc id = synth-" << std::setw(6) << std::setfill('0') << s / spec.sentences_per_doc << '\n';
    const std::size_t c = pick(classes.size());
    const auto& L = lex[c];
    bool parsed = false;
    switch (kind(rng)) {
      case 0: {
        const auto& intro = kIntros[pick(std::size(kIntros))];
        b.word(intro[0], "PRON");
        b.word(intro[1], "VERB");
        const std::size_t n = std::min<std::size_t>(3 + pick(4), L.pool.size());
        const auto items = with_intruder(draw(L.pool, n), c);
        const char* conj = pick(2) ? "and" : "or";
        for (std::size_t i = 0; i < n; ++i) {
          if (i + 1 == n) {
            if (pick(2)) b.word(",", "PUNCT");
            b.word(conj, "CCONJ");
          } else if (i > 0) {
            b.word(",", "PUNCT");
          }
          b.term(items[i]);
        }
        b.word(".", "PUNCT");
        break;
      }
      case 1: {
        const auto& carrier = kCarriers[pick(std::size(kCarriers))];
        b.word(carrier[0], "PRON");
        b.word(carrier[1], "VERB");
        const auto& frame = kSymmetric[pick(std::size(kSymmetric))];
        const auto pair = with_intruder(draw(L.pool, 2), c);
        for (const auto& [w, p] : frame.before) b.word(w, p);
        b.term(pair[0]);
        for (const auto& [w, p] : frame.middle) b.word(w, p);
        b.term(pair[1]);
        b.word(".", "PUNCT");
        break;
      }
      case 2: {
        const auto x = draw(L.pool, 1)[0];
        switch (pick(3)) {
          case 0:
            b.word("The", "DET");
            b.word(L.noun, "NOUN");
            b.word("of", "ADP");
            b.term(x);
            b.word("is", "AUX");
            b.word("common", "ADJ");
            break;
          case 1:
            b.term(x);
            b.word("is", "AUX");
            b.word("a", "DET");
            b.word("kind", "NOUN");
            b.word("of", "ADP");
            b.word(L.noun, "NOUN");
            break;
          default:
            b.word("Every", "DET");
            b.word(L.noun, "NOUN");
            b.word("like", "ADP");
            b.term(x);
            b.word("grows", "VERB");
            b.word("here", "ADV");
            break;
        }
        b.word(".", "PUNCT");
        break;
      }
      case 3: {
        parsed = true;
        const auto x = draw(L.pool, 1)[0];
        const auto& verb = pick(4) == 0 ? shared_verb : L.verbs[pick(L.verbs.size())];
        switch (pick(3)) {
          case 0: {
            const std::size_t t = b.term(x);
            const std::size_t v = b.word(verb, "VERB");
            const std::size_t det = b.word("the", "DET");
            const std::size_t obj = b.word(L.objects[pick(L.objects.size())], "NOUN");
            const std::size_t p = b.word(".", "PUNCT");
            b.arc(t, v, "nsubj");
            b.root(v);
            b.arc(det, obj, "det");
            b.arc(obj, v, "obj");
            b.arc(p, v, "punct");
            break;
          }
          case 1: {
            const std::size_t subj = b.word("They", "PRON");
            const std::size_t v = b.word(verb, "VERB");
            const std::size_t t = b.term(x);
            const std::size_t p = b.word(".", "PUNCT");
            b.arc(subj, v, "nsubj");
            b.root(v);
            b.arc(t, v, "obj");
            b.arc(p, v, "punct");
            break;
          }
          default: {
            const std::size_t subj = b.word("They", "PRON");
            const std::size_t v = b.word(verb, "VERB");
            const std::size_t with = b.word("with", "ADP");
            const std::size_t t = b.term(x);
            const std::size_t p = b.word(".", "PUNCT");
            b.arc(subj, v, "nsubj");
            b.root(v);
            b.arc(with, t, "case");
            b.arc(t, v, "obl");
            b.arc(p, v, "punct");
            break;
          }
        }
        break;
      }
      default: {
        const std::string first = everything[pick(everything.size())];
        std::string second = everything[pick(everything.size())];
        while (second == first) second = everything[pick(everything.size())];
        const std::array<std::string, 2> pair{first, second};
        if (pick(2)) {
          b.term(pair[0]);
          b.word("was", "AUX");
          b.word("near", "ADP");
          b.term(pair[1]);
          b.word("today", "ADV");
        } else {
          b.word("The", "DET");
          b.word("report", "NOUN");
          b.word("about", "ADP");
          b.term(pair[0]);
          b.word("mentioned", "VERB");
          b.term(pair[1]);
        }
        b.word(".", "PUNCT");
        break;
      }
    }
    b.emit(conllu, parsed);
  }
  out.conllu = conllu.str();
  return out;
}

void write_synthetic_corpus(const SyntheticCorpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream out(dir / "corpus.conllu");
  if (!out) throw Error(ErrorKind::Io, "cannot write " + (dir / "corpus.conllu").string());
  out << corpus.conllu;
  save_gold_file(corpus.gold, dir / "gold.tsv");
}

}  // namespace setexp
