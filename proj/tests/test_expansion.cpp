#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "setexp/error.hpp"
#include "setexp/evaluation.hpp"
#include "setexp/expansion.hpp"
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

ContextEmbeddingModel random_model(ContextType t, const std::vector<GroupId>& ids, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> nd;
  Eigen::MatrixXf m(6, static_cast<Eigen::Index>(ids.size()));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < 6; ++r) m(r, c) = nd(rng);
  return ContextEmbeddingModel(t, Hyperparams{.dim = 6}, ids, std::vector<std::size_t>(ids.size(), 5), m, {}, {},
                               Eigen::MatrixXf(6, 0));
}

ModelSet toy_models(bool seeds_only_in_up = false) {
  std::vector<ContextEmbeddingModel> ms;
  for (ContextType t : kContextTypes) {
    std::vector<GroupId> ids;
    for (GroupId g = 0; g < 40; ++g) {
      if (seeds_only_in_up && t != ContextType::UP && g < 2) continue;
      if ((g + static_cast<int>(index_of(t))) % 7 == 0 && g >= 2) continue;
      ids.push_back(g);
    }
    ms.push_back(random_model(t, ids, 10 + index_of(t)));
  }
  return ModelSet(ms);
}

TEST(Candidates, UnionOfPerModelNeighbours) {
  const auto models = toy_models();
  const SeedSet seeds({0, 1});
  for (std::size_t n : {std::size_t{0}, std::size_t{3}, std::size_t{10}}) {
    std::set<GroupId> oracle;
    for (const auto& m : models.models()) {
      const auto c = centroid(m, seeds);
      if (!c) continue;
      std::vector<std::pair<double, GroupId>> all;
      for (GroupId g : m.focus_ids())
        if (!seeds.contains(g)) all.push_back({-*centroid_score(m, seeds, g), g});
      std::sort(all.begin(), all.end());
      for (std::size_t i = 0; i < std::min(n, all.size()); ++i) oracle.insert(all[i].second);
    }
    EXPECT_EQ(generate_candidates(models, seeds, n), oracle) << "n=" << n;
  }
  EXPECT_TRUE(generate_candidates(models, seeds, 0).empty());
}

TEST(Candidates, OnlyModelsKnowingSeeds) {
  const auto models = toy_models(true);
  const SeedSet seeds({0, 1});
  const auto cands = generate_candidates(models, seeds, 5);
  std::set<GroupId> up;
  for (const auto& n : nearest(models[ContextType::UP], *centroid(models[ContextType::UP], seeds), 5, {0, 1}))
    up.insert(n.group_id);
  EXPECT_EQ(cands, up);
  EXPECT_EQ(kind_of([&] { generate_candidates(models, SeedSet({900}), 5); }), ErrorKind::NoSignal);
}

TEST(Expand, SeedsFirstAndOrdering) {
  const auto models = toy_models();
  const SeedSet seeds({5, 3});
  const auto mlp = uniform_combiner();
  const auto rows = expand(models, mlp, seeds, ExpandOptions{.k = 10});
  ASSERT_EQ(rows.size(), 12u);
  EXPECT_EQ(rows[0].group_id, 5);
  EXPECT_EQ(rows[1].group_id, 3);
  for (int i = 0; i < 2; ++i) {
    EXPECT_TRUE(rows[static_cast<std::size_t>(i)].is_seed);
    EXPECT_EQ(rows[static_cast<std::size_t>(i)].certainty, 1.0);
  }
  for (std::size_t i = 3; i < rows.size(); ++i) {
    EXPECT_FALSE(rows[i].is_seed);
    EXPECT_TRUE(rows[i - 1].certainty > rows[i].certainty ||
                (rows[i - 1].certainty == rows[i].certainty && rows[i - 1].group_id < rows[i].group_id));
  }
  for (std::size_t i = 2; i < rows.size(); ++i) {
    const auto fv = feature_vector(models, seeds, rows[i].group_id);
    EXPECT_EQ(rows[i].certainty, predict_certainty(mlp, std::span<const double>(fv.values.data(), 10)));
  }
}

TEST(Expand, KZeroAndThreshold) {
  const auto models = toy_models();
  const SeedSet seeds({0, 1});
  EXPECT_EQ(expand(models, uniform_combiner(), seeds, ExpandOptions{.k = 0}).size(), 2u);
  const auto all = expand(models, uniform_combiner(), seeds, ExpandOptions{.k = 100});
  const double cut = all[all.size() / 2].certainty;
  const auto filtered = expand(models, uniform_combiner(), seeds, ExpandOptions{.k = 100, .threshold = cut});
  for (std::size_t i = 2; i < filtered.size(); ++i) EXPECT_GE(filtered[i].certainty, cut);
  EXPECT_LT(filtered.size(), all.size());
}

bool expansion_bytes_equal(const std::vector<ExpansionCandidate>& a, const std::vector<ExpansionCandidate>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (to_json(a[i]).dump() != to_json(b[i]).dump()) return false;
  return true;
}

struct SmallEngine : ::testing::Test {
  static inline std::unique_ptr<Engine> engine;
  static inline std::vector<GoldClass> gold;
  static void SetUpTestSuite() {
    SyntheticSpec spec;
    spec.classes = 6;
    spec.members = 10;
    spec.sentences = 6000;
    spec.seed = 21;
    const auto syn = generate_synthetic_corpus(spec);
    engine = std::make_unique<Engine>(train_engine(parse_conllu(syn.conllu, "s"), PipelineConfig{}));
    gold = resolve_gold(syn.gold, engine->occurrences.lexicon());
  }
  static void TearDownTestSuite() { engine.reset(); }
};

TEST_F(SmallEngine, TrainingSetBalanced) {
  TrainingSetConfig cfg;
  std::vector<std::string> warnings;
  const auto rows = build_training_set(gold, engine->models, cfg, &warnings);
  std::map<std::vector<GroupId>, std::pair<int, int>> per_query;
  for (const auto& r : rows) {
    auto& [pos, neg] = per_query[r.seeds];
    (r.label ? pos : neg) += 1;
    EXPECT_GE(r.seeds.size(), cfg.min_seeds);
    EXPECT_LE(r.seeds.size(), cfg.max_seeds);
    EXPECT_EQ(std::find(r.seeds.begin(), r.seeds.end(), r.candidate), r.seeds.end());
  }
  EXPECT_FALSE(per_query.empty());
  for (const auto& [q, pn] : per_query) EXPECT_EQ(pn.first, pn.second);
  EXPECT_TRUE(warnings.empty());
}

TEST_F(SmallEngine, SmallClassSkipped) {
  GoldClass tiny{"tiny", {gold[0].members.begin(), gold[0].members.begin() + 4}};
  std::vector<std::string> warnings;
  EXPECT_EQ(kind_of([&] { build_training_set({tiny}, engine->models, TrainingSetConfig{}, &warnings); }),
            ErrorKind::InsufficientData);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST_F(SmallEngine, HeldOutAccuracy) {
  const std::vector<GoldClass> train(gold.begin(), gold.begin() + 3);
  const std::vector<GoldClass> test(gold.begin() + 3, gold.end());
  const auto mlp = train_mlp(build_training_set(train, engine->models, TrainingSetConfig{}), MlpConfig{});
  TrainingSetConfig other;
  other.seed = 99;
  const auto rows = build_training_set(test, engine->models, other);
  std::size_t correct = 0;
  for (const auto& r : rows)
    correct += (predict_certainty(mlp, std::span<const double>(r.features.data(), 10)) >= 0.5) == (r.label == 1);
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(rows.size()), 0.9);
}

TEST_F(SmallEngine, ReexpansionSeeds) {
  Category cat;
  cat.name = "c";
  cat.seeds = SeedSet({gold[0].members[0], gold[0].members[1]}, "c");
  cat.options.k = 10;
  run_expansion(engine->models, engine->mlp, cat, cat.seeds);
  ASSERT_EQ(cat.history.size(), 1u);
  EXPECT_EQ(reexpansion_seeds(cat).ids(), cat.seeds.ids());

  const auto first = cat.expanded;
  reexpand(engine->models, engine->mlp, cat);
  EXPECT_EQ(cat.history.size(), 2u);
  EXPECT_EQ(cat.history.back().seeds.ids(), cat.seeds.ids());
  EXPECT_TRUE(expansion_bytes_equal(first, cat.expanded));

  const GroupId picked = cat.expanded[2].group_id;
  cat.expanded[2].validated = true;
  const auto next = reexpansion_seeds(cat);
  EXPECT_EQ(next.size(), 3u);
  EXPECT_TRUE(next.contains(picked));
  EXPECT_EQ(reexpansion_seeds(cat, false).size(), cat.expanded.size());
  reexpand(engine->models, engine->mlp, cat);
  EXPECT_EQ(cat.history.size(), 3u);
  // Validation marks survive a re-expansion.
  for (const auto& c : cat.expanded)
    if (c.group_id == picked) EXPECT_TRUE(c.validated);
}

TEST_F(SmallEngine, CategoryJsonAndStore) {
  Category cat;
  cat.name = "Fruits & More";
  cat.seeds = SeedSet({gold[1].members[0], gold[1].members[2]}, cat.name);
  cat.options.threshold = 0.25;
  run_expansion(engine->models, engine->mlp, cat, cat.seeds);
  cat.expanded[3].validated = true;
  cat.exclusions[gold[1].members[0]] = {"x"};
  const auto back = category_from_json(to_json(cat));
  EXPECT_EQ(to_json(back).dump(), to_json(cat).dump());

  const fs::path dir = fs::temp_directory_path() / "setexp_categories";
  fs::remove_all(dir);
  CategoryStore store(dir);
  store.save(cat);
  EXPECT_TRUE(store.exists(cat.name));
  EXPECT_EQ(to_json(store.load(cat.name)).dump(), to_json(cat).dump());
  EXPECT_EQ(kind_of([&] { store.save(cat); }), ErrorKind::Conflict);
  EXPECT_NO_THROW(store.save(cat, true));
  EXPECT_EQ(kind_of([&] { store.load("nonexistent"); }), ErrorKind::NotFound);
  Category preset = cat;
  preset.name = "programming languages";
  store.save(preset);
  auto names = store.names();
  std::sort(names.begin(), names.end());
  EXPECT_EQ(names, (std::vector<std::string>{"Fruits & More", "programming languages"}));
  EXPECT_NE(CategoryStore::slug("A b"), CategoryStore::slug("a-b"));
  fs::remove_all(dir);
}

}  // namespace
