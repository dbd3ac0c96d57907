#include <gtest/gtest.h>

#include <cmath>

#include "setexp/error.hpp"
#include "setexp/similarity.hpp"

using namespace setexp;

namespace {

ContextEmbeddingModel toy(ContextType type, const std::vector<GroupId>& ids,
                          const std::vector<std::vector<double>>& vecs) {
  const int dim = vecs.empty() ? 2 : static_cast<int>(vecs[0].size());
  Eigen::MatrixXf m(dim, static_cast<Eigen::Index>(vecs.size()));
  for (std::size_t c = 0; c < vecs.size(); ++c)
    for (int r = 0; r < dim; ++r)
      m(r, static_cast<Eigen::Index>(c)) = static_cast<float>(vecs[c][static_cast<std::size_t>(r)]);
  return ContextEmbeddingModel(type, Hyperparams{.dim = dim}, ids, std::vector<std::size_t>(ids.size(), 5), m, {},
                               {}, Eigen::MatrixXf(dim, 0));
}

double cos2(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

TEST(SeedSetTest, Validation) {
  EXPECT_THROW(SeedSet(std::vector<GroupId>{}), Error);
  EXPECT_THROW(SeedSet({1, 1}), Error);
  std::vector<GroupId> many(51);
  for (int i = 0; i < 51; ++i) many[static_cast<std::size_t>(i)] = i;
  EXPECT_THROW(SeedSet{many}, Error);
  many.pop_back();
  EXPECT_EQ(SeedSet{many}.size(), 50u);
  const SeedSet s({3, 1}, "fruit");
  EXPECT_EQ(s.ids(), (std::vector<GroupId>{3, 1}));
  EXPECT_TRUE(s.contains(1));
  EXPECT_EQ(s.category_name(), "fruit");
}

TEST(Centroid, Cases) {
  const auto m = toy(ContextType::List, {1, 2, 3}, {{3, 4}, {1, 0}, {0, 2}});
  const auto single = centroid(m, SeedSet({1}));
  ASSERT_TRUE(single);
  EXPECT_NEAR((*single)(0), 0.6, 1e-7);
  EXPECT_NEAR((*single)(1), 0.8, 1e-7);
  const auto two = centroid(m, SeedSet({2, 3}));
  EXPECT_NEAR((*two)(0), 0.5, 1e-12);
  EXPECT_NEAR((*two)(1), 0.5, 1e-12);
  EXPECT_FALSE(centroid(m, SeedSet({8, 9})).has_value());
  // OOV seeds are ignored.
  EXPECT_TRUE(centroid(m, SeedSet({2, 9}))->isApprox(*centroid(m, SeedSet({2}))));
}

TEST(CentroidScore, Cases) {
  const auto m = toy(ContextType::SP, {1, 2, 3, 4}, {{1, 0}, {0, 1}, {2, 1}, {0, 3}});
  EXPECT_NEAR(*centroid_score(m, SeedSet({1}), 1), 1.0, 1e-6);
  EXPECT_NEAR(*centroid_score(m, SeedSet({1}), 2), 0.0, 1e-12);
  // centroid of (1,0),(0,1) is (0.5,0.5); candidate (2,1).
  EXPECT_NEAR(*centroid_score(m, SeedSet({1, 2}), 3), cos2({0.5, 0.5}, {2, 1}), 1e-7);
  EXPECT_FALSE(centroid_score(m, SeedSet({1}), 7).has_value());
}

TEST(PairwiseScore, Cases) {
  const double s2 = std::sqrt(1 - 0.16);
  const auto m = toy(ContextType::Dep, {1, 2, 3}, {{0.8, 0.6}, {0.4, s2}, {1, 0}});
  EXPECT_NEAR(*pairwise_score(m, SeedSet({1, 2}), 3), 0.6, 1e-7);
  EXPECT_FALSE(pairwise_score(m, SeedSet({1, 2}), 9).has_value());
  EXPECT_FALSE(pairwise_score(m, SeedSet({8}), 3).has_value());
  for (GroupId seed : {1, 2, 3})
    for (GroupId cand : {1, 2, 3}) EXPECT_EQ(*pairwise_score(m, SeedSet({seed}), cand), *centroid_score(m, SeedSet({seed}), cand));
}

struct Five : ::testing::Test {
  ModelSet models;
  const std::vector<std::vector<double>> vecs = {{1, 0, 0}, {0, 1, 0}, {1, 1, 1}, {0.5, -1, 2}};
  void SetUp() override {
    std::vector<ContextEmbeddingModel> ms;
    for (ContextType t : kContextTypes) {
      // Each type gets a differently rotated copy; Dep lacks the candidate 3.
      std::vector<std::vector<double>> v = vecs;
      for (auto& row : v) std::rotate(row.begin(), row.begin() + static_cast<long>(index_of(t) % 3), row.end());
      if (t == ContextType::Dep) {
        v.erase(v.begin() + 2);
        ms.push_back(toy(t, {0, 1, 4}, v));
      } else {
        ms.push_back(toy(t, {0, 1, 3, 4}, v));
      }
    }
    models = ModelSet(ms);
  }
};

TEST_F(Five, FeatureVectorOracle) {
  const SeedSet seeds({0, 1});
  const auto fv = feature_vector(models, seeds, 3);
  EXPECT_EQ(fv.values.size(), 10);
  EXPECT_EQ(fv.presence_count, 8);
  for (ContextType t : kContextTypes) {
    const auto i = static_cast<Eigen::Index>(2 * index_of(t));
    if (t == ContextType::Dep) {
      EXPECT_EQ(fv.values(i), 0.0);
      EXPECT_EQ(fv.values(i + 1), 0.0);
      continue;
    }
    std::vector<std::vector<double>> v = vecs;
    for (auto& row : v) std::rotate(row.begin(), row.begin() + static_cast<long>(index_of(t) % 3), row.end());
    const double centroid_oracle = cos2({0.5 * (v[0][0] + v[1][0]), 0.5 * (v[0][1] + v[1][1]), 0.5 * (v[0][2] + v[1][2])}, v[2]);
    const double pairwise_oracle = 0.5 * (cos2(v[0], v[2]) + cos2(v[1], v[2]));
    EXPECT_NEAR(fv.values(i), centroid_oracle, 1e-7);
    EXPECT_NEAR(fv.values(i + 1), pairwise_oracle, 1e-7);
  }
  EXPECT_EQ(feature_vector(models, seeds, 4).presence_count, 10);
  const auto oov = feature_vector(models, seeds, 42);
  EXPECT_EQ(oov.presence_count, 0);
  EXPECT_TRUE(oov.values.isZero(0.0));
}

TEST_F(Five, Vocabulary) {
  EXPECT_EQ(models.vocabulary(), (std::vector<GroupId>{0, 1, 3, 4}));
  EXPECT_TRUE(models.in_any(3));
  EXPECT_FALSE(models.in_any(2));
}

TEST(ModelSetTest, RejectsDuplicates) {
  std::vector<ContextEmbeddingModel> ms;
  for (int i = 0; i < 5; ++i) ms.push_back(toy(ContextType::List, {1}, {{1, 0}}));
  EXPECT_THROW(ModelSet{ms}, Error);
}

}  // namespace
