#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "setexp/error.hpp"
#include "setexp/evaluation.hpp"
#include "setexp/gold.hpp"
#include "setexp/pipeline.hpp"

using namespace setexp;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::Io;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("setexp_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(Ingest, FormatsAndErrors) {
  const fs::path dir = scratch("ingest");
  std::ofstream(dir / "a.txt") << "Siri uses voice queries.\n";
  std::ofstream(dir / "b.conllu") << "1\tTuring\tTuring\tPROPN\t_\t_\t2\tnsubj\t_\t_\n"
                                     "2\tstudied\tstudy\tVERB\t_\t_\t0\troot\t_\t_\n\n";
  EXPECT_FALSE(ingest(dir / "a.txt").documents()[0].sentences[0].has_dependencies());
  EXPECT_TRUE(ingest(dir / "b.conllu").documents()[0].sentences[0].has_dependencies());
  EXPECT_EQ(ingest(dir / "b.conllu", "text").documents()[0].sentences[0].tokens.size(), 20u);
  EXPECT_EQ(kind_of([&] { ingest(dir / "missing.txt"); }), ErrorKind::NotFound);
  EXPECT_EQ(kind_of([&] { ingest(dir / "a.txt", "xml"); }), ErrorKind::Config);
  fs::remove(dir / "b.conllu");
  std::ofstream(dir / "c.txt") << "Another file here.\n";
  EXPECT_EQ(ingest(dir).documents().size(), 2u);
  fs::remove_all(dir);
}

TEST(Config, MergeAndValidate) {
  PipelineConfig cfg;
  merge_config(cfg, nlohmann::json{{"hyper", {{"dim", 32}, {"epochs", 2}}}, {"per_model_n", 100}, {"ignored", 1}});
  EXPECT_EQ(cfg.hyper.dim, 32);
  EXPECT_EQ(cfg.hyper.epochs, 2);
  EXPECT_EQ(cfg.hyper.negatives, 5);
  EXPECT_EQ(cfg.per_model_n, 100u);
  EXPECT_EQ(kind_of([&] { merge_config(cfg, nlohmann::json{{"hyper", {{"dim", 0}}}}); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { merge_config(cfg, nlohmann::json{{"hyper", {{"dim", "big"}}}}); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { merge_config(cfg, nlohmann::json::array()); }), ErrorKind::Config);

  PipelineConfig round;
  merge_config(round, to_json(cfg));
  EXPECT_EQ(to_json(round), to_json(cfg));

  const fs::path dir = scratch("config");
  std::ofstream(dir / "config.json") << R"({"mlp": {"hidden": 40}, "candidates": {"min_count": 3}})";
  const auto loaded = load_pipeline_config(dir / "config.json");
  EXPECT_EQ(loaded.mlp.hidden, 40);
  EXPECT_EQ(loaded.candidates.min_count, 3u);
  fs::remove_all(dir);
}

struct Trained : ::testing::Test {
  static inline SyntheticCorpus syn;
  static inline std::unique_ptr<Engine> engine;
  static inline std::vector<Stage> stages;
  static void SetUpTestSuite() {
    SyntheticSpec spec;
    spec.classes = 5;
    spec.members = 10;
    spec.sentences = 6000;
    spec.seed = 4;
    syn = generate_synthetic_corpus(spec);
    engine = std::make_unique<Engine>(train_engine(parse_conllu(syn.conllu, "s"), PipelineConfig{}, &syn.gold,
                                                   [](Stage s, double f, const std::string&) {
                                                     EXPECT_GE(f, 0.0);
                                                     EXPECT_LE(f, 1.0);
                                                     if (stages.empty() || stages.back() != s) stages.push_back(s);
                                                   }));
  }
  static void TearDownTestSuite() { engine.reset(); }
};

TEST_F(Trained, StagesAndModels) {
  EXPECT_EQ(stages, (std::vector<Stage>{Stage::Candidates, Stage::Prelim, Stage::Grouping, Stage::Indexing,
                                        Stage::Extraction, Stage::Embedding, Stage::Classifier, Stage::Done}));
  for (const auto& m : engine->models.models()) EXPECT_GT(m.size(), 0u) << to_string(m.type());
  EXPECT_TRUE(engine->mlp_from_gold);
  EXPECT_FALSE(engine->mlp_report.loss_curve.empty());
}

TEST_F(Trained, LookupAndLabel) {
  const auto& member = syn.gold[0].members[0];
  const auto g = engine->lookup(member);
  ASSERT_TRUE(g);
  std::string upper = member;
  for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  EXPECT_EQ(engine->lookup(upper), g);
  EXPECT_FALSE(engine->lookup("no such term anywhere").has_value());
  EXPECT_FALSE(engine->lookup("--").has_value());
  EXPECT_EQ(engine->label(*g), member);
}

TEST_F(Trained, RankExcludesSeeds) {
  const auto gold = resolve_gold(syn.gold, engine->occurrences.lexicon());
  const SeedSet seeds({gold[0].members[0], gold[0].members[1]});
  const auto ranked = engine->rank(seeds, 15);
  EXPECT_EQ(ranked.size(), 15u);
  for (GroupId g : ranked) EXPECT_FALSE(seeds.contains(g));
}

TEST_F(Trained, SaveLoadRoundTrip) {
  const fs::path dir = scratch("engine");
  save_engine(*engine, dir);
  const Engine back = load_engine(dir);
  EXPECT_EQ(back.corpus, engine->corpus);
  EXPECT_EQ(back.groups, engine->groups);
  EXPECT_TRUE(back.mlp == engine->mlp);
  EXPECT_EQ(back.mlp_from_gold, engine->mlp_from_gold);
  for (ContextType t : kContextTypes) EXPECT_TRUE(back.models[t] == engine->models[t]);
  const auto gold = resolve_gold(syn.gold, engine->occurrences.lexicon());
  const SeedSet seeds({gold[1].members[0], gold[1].members[3]});
  EXPECT_EQ(back.rank(seeds, 30), engine->rank(seeds, 30));
  fs::remove_all(dir);
  EXPECT_THROW(load_engine(dir), Error);
}

TEST_F(Trained, Deterministic) {
  const Engine again = train_engine(parse_conllu(syn.conllu, "s"), PipelineConfig{}, &syn.gold);
  EXPECT_EQ(again.groups, engine->groups);
  EXPECT_TRUE(again.mlp == engine->mlp);
  for (ContextType t : kContextTypes) EXPECT_TRUE(again.models[t] == engine->models[t]);
}

TEST(Exclusions, RefreshIndex) {
  std::string text;
  for (int i = 0; i < 6; ++i) text += "We visited New York and NYC and Boston, Paris, Rome.\n";
  PipelineConfig cfg;
  cfg.hyper.dim = cfg.prelim.dim = 8;
  cfg.hyper.min_count = cfg.prelim.min_count = 1;
  Engine e = train_engine(parse_plain_text(text, "d"), cfg);
  const auto g = e.lookup("nyc");
  ASSERT_TRUE(g);
  ASSERT_EQ(e.lookup("new york"), g);
  const std::size_t before = e.occurrences.of(*g).size();
  const auto& updated = e.set_exclusions(*g, {"NYC"});
  EXPECT_EQ(updated.excluded, std::set<std::string>{"nyc"});
  EXPECT_LT(e.occurrences.of(*g).size(), before);
  EXPECT_EQ(e.group(*g)->display_name, "new york");
  EXPECT_EQ(kind_of([&] { e.set_exclusions(*g, {"boston"}); }), ErrorKind::UnknownTerm);
  EXPECT_EQ(kind_of([&] { e.set_exclusions(*g, e.group(*g)->members); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { e.set_exclusions(-5, {}); }), ErrorKind::UnknownTerm);
  e.set_exclusions(*g, {});
  EXPECT_EQ(e.occurrences.of(*g).size(), before);
}

TEST(Train, NoCandidates) {
  EXPECT_EQ(kind_of([] { train_engine(parse_plain_text("tiny corpus here.", "d"), PipelineConfig{}); }),
            ErrorKind::InsufficientData);
}

TEST(Train, UniformFallbackWithoutGold) {
  SyntheticSpec spec;
  spec.classes = 3;
  spec.members = 6;
  spec.sentences = 1500;
  const auto syn = generate_synthetic_corpus(spec);
  const Engine e = train_engine(parse_conllu(syn.conllu, "s"), PipelineConfig{});
  EXPECT_FALSE(e.mlp_from_gold);
  EXPECT_TRUE(e.mlp == uniform_combiner(PipelineConfig{}.mlp.hidden));
  // Gold that resolves to nothing falls back with a warning.
  const std::vector<RawGoldClass> junk = {{"x", {"atlantis", "lemuria"}}};
  const Engine f = train_engine(parse_conllu(syn.conllu, "s"), PipelineConfig{}, &junk);
  EXPECT_FALSE(f.mlp_from_gold);
  EXPECT_FALSE(f.warnings.empty());
}

// Seeds {orange, banana} describe fruit in general while {orange, grapefruit}
// describe citrus.
TEST(Granularity, FruitAndCitrus) {
  SyntheticSpec spec;
  spec.explicit_classes = nested_fruit_classes();
  spec.sentences = 20000;
  spec.seed = 100;
  const auto syn = generate_synthetic_corpus(spec);
  const Engine e = train_engine(parse_conllu(syn.conllu, "s"), PipelineConfig{});
  auto id = [&](const std::string& t) { return e.lookup(t).value(); };
  auto pos = [](const std::vector<GroupId>& r, GroupId g) {
    return static_cast<std::size_t>(std::find(r.begin(), r.end(), g) - r.begin());
  };
  const auto broad = e.rank(SeedSet({id("orange"), id("banana")}), 500);
  const auto narrow = e.rank(SeedSet({id("orange"), id("grapefruit")}), 500);
  std::size_t first_non_fruit = broad.size();
  for (const auto& cls : spec.explicit_classes) {
    if (cls.name == "fruit" || cls.name == "citrus") continue;
    for (const auto& m : cls.members) first_non_fruit = std::min(first_non_fruit, pos(broad, id(m)));
  }
  EXPECT_LT(pos(broad, id("apple")), first_non_fruit);
  EXPECT_LT(pos(broad, id("lemon")), first_non_fruit);
  EXPECT_LT(pos(narrow, id("lemon")), pos(narrow, id("apple")));
}

// Validating a true member and re-expanding should not hurt MAP@10.
TEST(Reexpand, ValidationDoesNotLowerMap) {
  SyntheticSpec spec;
  spec.classes = 6;
  spec.members = 20;
  spec.sentences = 3500;
  spec.noise = 0.5;
  spec.intruder = 0.3;
  spec.seed = 8;
  const auto syn = generate_synthetic_corpus(spec);
  const Engine e = train_engine(parse_conllu(syn.conllu, "s"), PipelineConfig{}, &syn.gold);
  const auto gold = resolve_gold(syn.gold, e.occurrences.lexicon());
  EvalConfig ec;
  ec.queries_per_class = 4;
  ec.min_seeds = ec.max_seeds = 2;
  auto queries = sample_queries(gold, ec);
  queries.resize(20);
  double before = 0, after = 0;
  for (const auto& q : queries) {
    Category cat;
    cat.name = "q";
    cat.seeds = SeedSet(q.seeds, "q");
    cat.options.k = 10;
    run_expansion(e.models, e.mlp, cat, cat.seeds);
    std::vector<GroupId> first;
    for (const auto& c : cat.expanded)
      if (!c.is_seed) first.push_back(c.group_id);
    before += average_precision_at_n(first, q.relevant, 10);
    for (auto& c : cat.expanded) {
      if (!c.is_seed && q.relevant.contains(c.group_id)) {
        c.validated = true;
        break;
      }
    }
    reexpand(e.models, e.mlp, cat);
    std::vector<GroupId> second;
    for (const auto& c : cat.expanded)
      if (!cat.seeds.contains(c.group_id)) second.push_back(c.group_id);
    after += average_precision_at_n(second, q.relevant, 10);
  }
  RecordProperty("map10_before", std::to_string(before / 20.0));
  RecordProperty("map10_after", std::to_string(after / 20.0));
  EXPECT_GE(after / 20.0, before / 20.0 - 1e-12) << before / 20.0 << " -> " << after / 20.0;
}

}  // namespace
