#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "setexp/context.hpp"
#include "setexp/evaluation.hpp"
#include "setexp/expansion.hpp"
#include "setexp/gold.hpp"
#include "setexp/pipeline.hpp"
#include "setexp/text.hpp"

using namespace setexp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Fixture {
  Corpus corpus;
  std::vector<TermGroup> groups;
  OccurrenceIndex index;

  GroupId id(const std::string& term) const {
    const auto g = index.lexicon().lookup(text::normalize_term(term));
    if (!g) throw std::runtime_error("fixture term missing: " + term);
    return *g;
  }
  const Sentence& sentence() const { return corpus.documents().at(0).sentences.at(0); }
};

Fixture make_fixture(Corpus corpus, const std::vector<std::string>& terms) {
  Fixture f;
  f.corpus = std::move(corpus);
  GroupId next = 0;
  for (const auto& t : terms) f.groups.push_back(TermGroup{next++, {text::normalize_term(t)}, t, {}});
  f.index = OccurrenceIndex(f.corpus, f.groups);
  return f;
}

std::vector<std::string> contexts_of(const std::vector<ContextPair>& pairs, GroupId focus) {
  std::vector<std::string> out;
  for (const auto& p : pairs)
    if (p.focus == focus) out.push_back(p.context);
  return out;
}

std::vector<ContextPair> contexts_pairs(const std::vector<ContextPair>& pairs, GroupId focus) {
  std::vector<ContextPair> out;
  for (const auto& p : pairs)
    if (p.focus == focus) out.push_back(p);
  return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& open = "", const std::string& close = "") {
  std::string s;
  for (const auto& p : parts) {
    if (!s.empty()) s += ", ";
    s += open + p + close;
  }
  return s;
}

std::string check_equal(const std::string& row, const std::string& got, const std::string& want, bool& ok) {
  const bool eq = got == want;
  ok = ok && eq;
  return row + (eq ? " ok" : " got [" + got + "] want [" + want + "]");
}

// UD style: prepositions attached with `case`.
const char* kDepUd =
    "# text = Turing studied as an undergraduate at King's College , Cambridge .\n"
    "1\tTuring\tTuring\tPROPN\t_\t_\t2\tnsubj\t_\t_\n"
    "2\tstudied\tstudy\tVERB\t_\t_\t0\troot\t_\t_\n"
    "3\tas\tas\tADP\t_\t_\t5\tcase\t_\t_\n"
    "4\tan\ta\tDET\t_\t_\t5\tdet\t_\t_\n"
    "5\tundergraduate\tundergraduate\tNOUN\t_\t_\t2\tobl\t_\t_\n"
    "6\tat\tat\tADP\t_\t_\t8\tcase\t_\t_\n"
    "7\tKing's\tKing's\tPROPN\t_\t_\t8\tcompound\t_\t_\n"
    "8\tCollege\tCollege\tPROPN\t_\t_\t2\tobl\t_\t_\n"
    "9\t,\t,\tPUNCT\t_\t_\t10\tpunct\t_\t_\n"
    "10\tCambridge\tCambridge\tPROPN\t_\t_\t8\tappos\t_\t_\n"
    "11\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_\n\n";

// Stanford basic style: prep heads a pobj.
const char* kDepStanford =
    "1\tTuring\tTuring\tPROPN\t_\t_\t2\tnsubj\t_\t_\n"
    "2\tstudied\tstudy\tVERB\t_\t_\t0\troot\t_\t_\n"
    "3\tas\tas\tADP\t_\t_\t2\tprep\t_\t_\n"
    "4\tan\ta\tDET\t_\t_\t5\tdet\t_\t_\n"
    "5\tundergraduate\tundergraduate\tNOUN\t_\t_\t3\tpobj\t_\t_\n"
    "6\tat\tat\tADP\t_\t_\t2\tprep\t_\t_\n"
    "7\tKing's\tKing's\tPROPN\t_\t_\t8\tnn\t_\t_\n"
    "8\tCollege\tCollege\tPROPN\t_\t_\t6\tpobj\t_\t_\n"
    "9\t,\t,\tPUNCT\t_\t_\t8\tpunct\t_\t_\n"
    "10\tCambridge\tCambridge\tPROPN\t_\t_\t8\tappos\t_\t_\n"
    "11\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_\n\n";

// Relations already collapsed by the parser.
const char* kDepCollapsed =
    "1\tTuring\tTuring\tPROPN\t_\t_\t2\tnsubj\t_\t_\n"
    "2\tstudied\tstudy\tVERB\t_\t_\t0\troot\t_\t_\n"
    "3\tas\tas\tADP\t_\t_\t5\tcase\t_\t_\n"
    "4\tan\ta\tDET\t_\t_\t5\tdet\t_\t_\n"
    "5\tundergraduate\tundergraduate\tNOUN\t_\t_\t2\tprep_as\t_\t_\n"
    "6\tat\tat\tADP\t_\t_\t8\tcase\t_\t_\n"
    "7\tKing's\tKing's\tPROPN\t_\t_\t8\tnn\t_\t_\n"
    "8\tCollege\tCollege\tPROPN\t_\t_\t2\tprep_at\t_\t_\n"
    "9\t,\t,\tPUNCT\t_\t_\t8\tpunct\t_\t_\n"
    "10\tCambridge\tCambridge\tPROPN\t_\t_\t8\tappos\t_\t_\n"
    "11\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_\n\n";

Outcome criterion1() {
  bool ok = true;
  std::vector<std::string> rows;

  auto lin = make_fixture(parse_plain_text("Siri uses voice queries and a natural language user interface.", "t1"),
                          {"Siri", "voice queries", "natural language user interface"});
  rows.push_back(check_equal("linear", join(content_units(contexts_pairs(extract_linear(lin.sentence(), lin.index, 5), lin.id("Siri")))),
                             "uses, voice queries, natural language user interface", ok));

  auto lst = make_fixture(parse_plain_text("Experience in Image processing, Signal processing, Computer Vision.", "t1"),
                          {"Image processing", "Signal processing", "Computer Vision"});
  rows.push_back(check_equal("list",
                             join(contexts_of(extract_lists(lst.sentence(), lst.index), lst.id("Image processing"))),
                             "Signal processing, Computer Vision", ok));

  const std::vector<std::string> dep_terms = {"studied", "Turing", "undergraduate", "King's College", "Cambridge"};
  for (const auto& [name, src] : {std::pair{"dep(case)", kDepUd}, std::pair{"dep(prep/pobj)", kDepStanford},
                                  std::pair{"dep(collapsed)", kDepCollapsed}}) {
    auto dep = make_fixture(parse_conllu(src, "t1"), dep_terms);
    rows.push_back(check_equal(
        name, join(contexts_of(extract_dependency(dep.sentence(), dep.index), dep.id("studied")), "(", ")"),
        "(Turing/nsubj), (undergraduate/prep_as), (King's College/prep_at)", ok));
  }

  auto sp = make_fixture(parse_plain_text("Apple and Orange juice drink.", "t1"), {"Apple", "Orange"});
  rows.push_back(check_equal("sp", join(contexts_of(extract_symmetric(sp.sentence(), sp.index), sp.id("Apple"))),
                             "Orange", ok));

  auto up = make_fixture(parse_plain_text("In the U.S. state of Alaska.", "t1"), {"Alaska"});
  rows.push_back(check_equal("up", join(contexts_of(extract_unary(up.sentence(), up.index), up.id("Alaska"))),
                             "U.S. state of __", ok));

  return {ok, join(rows)};
}

Outcome criterion2() {
  auto f = make_fixture(parse_plain_text("alpha beta gamma Target delta epsilon zeta", "t2"), {"Target"});
  const auto got = contexts_of(extract_unary(f.sentence(), f.index), f.id("Target"));
  const std::vector<std::string> want = {
      "alpha beta gamma __ delta", "beta gamma __ delta epsilon", "beta gamma __ delta",
      "gamma __ delta epsilon zeta", "gamma __ delta epsilon", "gamma __ delta"};
  auto sorted_got = got;
  auto sorted_want = want;
  std::sort(sorted_got.begin(), sorted_got.end());
  std::sort(sorted_want.begin(), sorted_want.end());
  const bool ok = sorted_got == sorted_want && got.size() == 6;
  return {ok, std::to_string(got.size()) + " n-grams: " + join(got)};
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

struct FlatRun {
  SyntheticCorpus synthetic;
  Engine engine;
  std::vector<GoldClass> gold;
  double seconds = 0;
};

Outcome criterion3(const FlatRun& run) {
  bool ok = true;
  std::string detail;
  for (const auto& m : run.engine.models.models()) {
    const auto& loss = m.epoch_loss();
    const bool dec = loss.size() >= 2 && loss.back() < loss.front();
    ok = ok && dec;
    detail += std::string(to_string(m.type())) + " loss " + (loss.empty() ? "-" : fmt(loss.front())) + "->" +
              (loss.empty() ? "-" : fmt(loss.back())) + "; ";
  }
  for (ContextType t : {ContextType::List, ContextType::SP}) {
    const auto& m = run.engine.models[t];
    double same = 0, cross = 0;
    std::size_t ns = 0, nc = 0;
    for (std::size_t a = 0; a < run.gold.size(); ++a)
      for (std::size_t b = a; b < run.gold.size(); ++b)
        for (GroupId x : run.gold[a].members)
          for (GroupId y : run.gold[b].members) {
            if ((a == b && x >= y) || !m.contains(x) || !m.contains(y)) continue;
            const double c = cosine(m, x, y);
            if (a == b) {
              same += c;
              ++ns;
            } else {
              cross += c;
              ++nc;
            }
          }
    same /= static_cast<double>(std::max<std::size_t>(ns, 1));
    cross /= static_cast<double>(std::max<std::size_t>(nc, 1));
    ok = ok && ns > 0 && nc > 0 && same - cross >= 0.15;
    detail += std::string(to_string(t)) + " same " + fmt(same) + " cross " + fmt(cross) + "; ";
  }
  ok = ok && run.seconds < 180;
  return {ok, detail + "train " + fmt(run.seconds, 1) + "s"};
}

Outcome criterion4() {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  auto mlp = MlpModel::random(10, 100, 3);
  const int batch = 16;
  MlpModel::Matrix x(10, batch);
  MlpModel::Vector y(batch);
  for (int c = 0; c < batch; ++c) {
    for (int r = 0; r < 10; ++r) x(r, c) = normal(rng);
    y(c) = coin(rng) ? 1.0 : 0.0;
  }
  MlpModel::Gradients g;
  mlp.loss_and_gradient(x, y, g);
  const MlpModel::Vector analytic = MlpModel::flatten(g);
  const MlpModel::Vector base = mlp.parameters();
  std::uniform_int_distribution<Eigen::Index> pick(0, base.size() - 1);
  const double eps = 1e-5;
  double worst = 0;
  int checked = 0;
  for (int i = 0; i < 40; ++i) {
    const Eigen::Index k = pick(rng);
    MlpModel::Vector p = base;
    p(k) += eps;
    mlp.set_parameters(p);
    const double up = mlp.loss(x, y);
    p(k) -= 2 * eps;
    mlp.set_parameters(p);
    const double down = mlp.loss(x, y);
    mlp.set_parameters(base);
    const double numeric = (up - down) / (2 * eps);
    const double scale = std::max({std::abs(numeric), std::abs(analytic(k)), 1e-7});
    worst = std::max(worst, std::abs(numeric - analytic(k)) / scale);
    ++checked;
  }
  return {checked >= 20 && worst <= 1e-4,
          std::to_string(checked) + " coordinates, max relative error " + [&] {
            std::ostringstream os;
            os << std::scientific << std::setprecision(2) << worst;
            return os.str();
          }()};
}

EvalConfig seed3_eval() {
  EvalConfig ec;
  ec.queries_per_class = 20;
  ec.min_seeds = ec.max_seeds = 3;
  return ec;
}

Outcome criterion5(const FlatRun& run) {
  const Engine& e = run.engine;
  const auto ranker = [&](const MlpModel& mlp) {
    return [&e, &mlp](const SeedSet& s, std::size_t n) {
      ExpandOptions opts;
      opts.k = n;
      opts.per_model_n = e.config.per_model_n;
      std::vector<GroupId> out;
      for (const auto& c : expand(e.models, mlp, s, opts))
        if (!c.is_seed) out.push_back(c.group_id);
      return out;
    };
  };
  const auto t0 = std::chrono::steady_clock::now();
  const EvalReport full = map_at_n(ranker(e.mlp), run.gold, seed3_eval());

  // Classifier trained on half of the classes, scored on the other half.
  const std::size_t half = run.gold.size() / 2;
  const std::vector<GoldClass> first(run.gold.begin(), run.gold.begin() + static_cast<std::ptrdiff_t>(half));
  const std::vector<GoldClass> second(run.gold.begin() + static_cast<std::ptrdiff_t>(half), run.gold.end());
  std::map<std::size_t, double> held_out;
  for (const auto& [train, test] : {std::pair{&first, &second}, std::pair{&second, &first}}) {
    const auto mlp = train_mlp(build_training_set(*train, e.models, e.config.training), e.config.mlp);
    const EvalReport r = map_at_n(ranker(mlp), *test, seed3_eval());
    for (const auto& [n, v] : r.map_at) held_out[n] += v * static_cast<double>(test->size()) / run.gold.size();
  }
  const double seconds = run.seconds + elapsed(t0);
  const bool ok = full.map_at.at(10) >= 0.8 && full.map_at.at(50) >= 0.6 && held_out.at(10) >= 0.8 &&
                  held_out.at(50) >= 0.6 && full.queries == 20 * run.gold.size() && seconds < 600;
  return {ok, "MAP@10/20/50 " + fmt(full.map_at.at(10)) + "/" + fmt(full.map_at.at(20)) + "/" +
                  fmt(full.map_at.at(50)) + " over " + std::to_string(full.queries) +
                  " queries; held-out classifier " + fmt(held_out.at(10)) + "/" + fmt(held_out.at(20)) + "/" +
                  fmt(held_out.at(50)) + "; " + fmt(seconds, 1) + "s"};
}

std::string expansion_bytes(const std::vector<ExpansionCandidate>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : rows) j.push_back(to_json(c));
  return j.dump();
}

Outcome criterion6(const FlatRun& run) {
  const Engine& e = run.engine;
  std::vector<std::string> failures;
  auto expect = [&](bool cond, const std::string& what) {
    if (!cond) failures.push_back(what);
  };

  std::size_t pairs = 0;
  for (const auto& m : e.models.models()) {
    const auto& ids = m.focus_ids();
    for (std::size_t i = 0; i < ids.size(); i += 3)
      for (std::size_t j = i + 1; j < ids.size(); j += 7) {
        expect(cosine(m, ids[i], ids[j]) == cosine(m, ids[j], ids[i]), "cosine symmetry");
        ++pairs;
      }
  }

  std::size_t singles = 0;
  for (const auto& m : e.models.models()) {
    const auto& ids = m.focus_ids();
    for (std::size_t i = 0; i < ids.size(); i += 11) {
      const SeedSet one({ids[i]});
      for (std::size_t j = 0; j < ids.size(); j += 5) {
        const auto c = centroid_score(m, one, ids[j]);
        const auto p = pairwise_score(m, one, ids[j]);
        expect(c && p && *c == *p, "single-seed centroid == pairwise");
        ++singles;
      }
    }
  }

  const auto& cls = run.gold.front().members;
  const SeedSet seeds({cls[0], cls[1], cls[2]});
  const auto vocab = e.models.vocabulary();
  const GroupId unseen = 1 + *std::max_element(vocab.begin(), vocab.end());
  const auto oov = feature_vector(e.models, seeds, unseen);
  expect(oov.values.size() == 10 && oov.values.isZero(0.0) && oov.presence_count == 0, "OOV features zero");
  for (GroupId g : vocab) {
    const auto fv = feature_vector(e.models, seeds, g);
    expect(fv.values.size() == 10, "feature width 10");
    for (ContextType t : kContextTypes) {
      if (!e.models[t].contains(g)) {
        expect(fv.values(2 * index_of(t)) == 0.0 && fv.values(2 * index_of(t) + 1) == 0.0, "missing slots 0.0");
      }
    }
  }

  ExpandOptions opts;
  opts.k = 50;
  std::size_t seed_rows = 0;
  for (const auto& g : run.gold) {
    const SeedSet s({g.members[0], g.members[1]});
    const auto rows = expand(e.models, e.mlp, s, opts);
    for (std::size_t i = 0; i < s.size(); ++i) {
      expect(rows.at(i).is_seed && rows[i].group_id == s.ids()[i] && rows[i].certainty == 1.0, "seeds at 1.0");
      ++seed_rows;
    }
  }

  // Positive rescaling of any single model must leave the ranking alone.
  const auto base_rank = expand(e.models, e.mlp, seeds, opts);
  for (ContextType t : kContextTypes) {
    for (float factor : {0.01f, 3.7f}) {
      ModelSet scaled = e.models;
      scaled[t].scale_focus_vectors(factor);
      const auto rank = expand(scaled, e.mlp, seeds, opts);
      bool same = rank.size() == base_rank.size();
      for (std::size_t i = 0; same && i < rank.size(); ++i) same = rank[i].group_id == base_rank[i].group_id;
      expect(same, "rescaling " + std::string(to_string(t)));
    }
  }

  // Two independent fixed-seed trainings and expansions.
  SyntheticSpec small;
  small.classes = 4;
  small.members = 8;
  small.sentences = 4000;
  small.seed = 77;
  const auto syn = generate_synthetic_corpus(small);
  std::string bytes[2];
  for (auto& b : bytes) {
    const Engine run_engine = train_engine(parse_conllu(syn.conllu, "synth"), PipelineConfig{}, &syn.gold);
    const auto g = resolve_gold(syn.gold, run_engine.occurrences.lexicon());
    b = expansion_bytes(expand(run_engine.models, run_engine.mlp, SeedSet({g[0].members[0], g[0].members[1]})));
  }
  expect(bytes[0] == bytes[1] && bytes[0].size() > 2, "byte-identical expand");

  std::sort(failures.begin(), failures.end());
  failures.erase(std::unique(failures.begin(), failures.end()), failures.end());
  return {failures.empty(), failures.empty()
                                ? std::to_string(pairs) + " symmetric pairs, " + std::to_string(singles) +
                                      " single-seed checks, " + std::to_string(seed_rows) +
                                      " seed rows, 10 rescalings, deterministic rerun (" +
                                      std::to_string(bytes[0].size()) + " bytes)"
                                : "violated: " + join(failures)};
}

Outcome criterion7() {
  std::mt19937_64 rng(9);
  std::normal_distribution<float> normal(0.f, 1.f);
  bool ok = true;
  std::string detail;
  for (int n : {50, 1000}) {
    const int dim = 16;
    std::vector<GroupId> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = 3 * i + 1;
    Eigen::MatrixXf vecs(dim, n);
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < dim; ++r) vecs(r, c) = normal(rng);
    ContextEmbeddingModel model(ContextType::SP, Hyperparams{.dim = dim}, ids,
                                std::vector<std::size_t>(ids.size(), 5), vecs, {}, {}, Eigen::MatrixXf(dim, 0));
    int mismatches = 0;
    for (int q = 0; q < 20; ++q) {
      Eigen::VectorXd query(dim);
      for (int r = 0; r < dim; ++r) query(r) = normal(rng);
      const std::set<GroupId> exclude = {ids[static_cast<std::size_t>(q)]};
      std::vector<Neighbor> brute;
      for (int c = 0; c < n; ++c) {
        if (exclude.contains(ids[static_cast<std::size_t>(c)])) continue;
        const Eigen::VectorXd v = vecs.col(c).cast<double>();
        brute.push_back({ids[static_cast<std::size_t>(c)], v.dot(query) / (v.norm() * query.norm())});
      }
      std::sort(brute.begin(), brute.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.score != b.score ? a.score > b.score : a.group_id < b.group_id;
      });
      const std::size_t k = q % 2 == 0 ? brute.size() : 25;
      brute.resize(std::min(k, brute.size()));
      const auto got = nearest(model, query, k, exclude);
      bool same = got.size() == brute.size();
      for (std::size_t i = 0; same && i < got.size(); ++i)
        same = got[i].group_id == brute[i].group_id && std::abs(got[i].score - brute[i].score) < 1e-9;
      mismatches += same ? 0 : 1;
    }
    ok = ok && mismatches == 0;
    detail += std::to_string(n) + "-term model: " + std::to_string(mismatches) + " mismatches; ";
  }

  const std::vector<GroupId> perfect = {1, 2, 3, 4, 5};
  const std::vector<GroupId> none = {7, 8, 9};
  const std::vector<GroupId> mixed = {1, 9, 2};
  const double a = average_precision_at_n(perfect, {1, 2, 3, 4, 5, 6}, 5);
  const double b = average_precision_at_n(none, {1, 2}, 3);
  const double c = average_precision_at_n(mixed, {1, 2}, 3);
  ok = ok && std::abs(a - 1.0) < 1e-6 && std::abs(b) < 1e-6 && std::abs(c - (1.0 + 2.0 / 3.0) / 2.0) < 1e-6;
  return {ok, detail + "AP " + fmt(a, 4) + ", " + fmt(b, 4) + ", " + fmt(c, 4)};
}

Outcome criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto classes = nested_fruit_classes();
  const std::size_t top_m = 20;
  int pass = 0;
  std::string trials;
  for (int trial = 0; trial < 20; ++trial) {
    SyntheticSpec spec;
    spec.explicit_classes = classes;
    spec.sentences = 30000;
    spec.seed = 100 + static_cast<std::uint64_t>(trial);
    const auto syn = generate_synthetic_corpus(spec);
    PipelineConfig cfg;
    cfg.hyper.seed = 1 + static_cast<std::uint64_t>(trial);
    const Engine e = train_engine(parse_conllu(syn.conllu, "synth"), cfg, &syn.gold);
    auto id = [&](const char* t) { return e.lookup(t).value(); };
    auto pos = [](const std::vector<GroupId>& r, GroupId g) {
      const auto it = std::find(r.begin(), r.end(), g);
      return it == r.end() ? r.size() + 1 : static_cast<std::size_t>(it - r.begin());
    };
    const auto broad = e.rank(SeedSet({id("orange"), id("banana")}), 50);
    const auto narrow = e.rank(SeedSet({id("orange"), id("grapefruit")}), 200);
    const bool ok = pos(broad, id("apple")) < top_m && pos(narrow, id("lemon")) < pos(narrow, id("apple"));
    pass += ok ? 1 : 0;
    trials += ok ? '+' : '-';
  }
  return {pass >= 16, std::to_string(pass) + "/20 trials [" + trials + "], " + fmt(elapsed(t0), 1) + "s"};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int n, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " (" << fmt(elapsed(t0), 2) << "s) "
              << o.detail << std::endl;
  };

  report(1, criterion1);
  report(2, criterion2);

  FlatRun flat;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    SyntheticSpec spec;
    spec.classes = 10;
    spec.members = 20;
    spec.sentences = 50000;
    spec.seed = 1;
    flat.synthetic = generate_synthetic_corpus(spec);
    PipelineConfig cfg;
    cfg.hyper.threads = 1;
    flat.engine = train_engine(parse_conllu(flat.synthetic.conllu, "synth"), cfg, &flat.synthetic.gold);
    flat.gold = resolve_gold(flat.synthetic.gold, flat.engine.occurrences.lexicon());
    flat.seconds = elapsed(t0);
  } catch (const std::exception& ex) {
    std::cout << "synthetic pipeline failed: " << ex.what() << std::endl;
  }
  report(3, [&] { return criterion3(flat); });
  report(4, criterion4);
  report(5, [&] { return criterion5(flat); });
  report(6, [&] { return criterion6(flat); });
  report(7, criterion7);
  report(8, criterion8);
  return failed == 0 ? 0 : 1;
}
