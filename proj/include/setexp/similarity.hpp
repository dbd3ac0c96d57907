#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "setexp/embedding.hpp"

namespace setexp {

inline constexpr std::size_t kNumFeatures = 2 * kNumContextTypes;
inline constexpr std::size_t kMaxSeeds = 50;

// Ordered, duplicate-free seed terms (1..50).
class SeedSet {
 public:
  SeedSet() = default;
  // Throws Error{Config} on duplicates, an empty list or more than 50 seeds.
  explicit SeedSet(std::vector<GroupId> seeds, std::string category_name = {});

  const std::vector<GroupId>& ids() const noexcept { return seeds_; }
  std::size_t size() const noexcept { return seeds_.size(); }
  bool contains(GroupId g) const;
  const std::string& category_name() const noexcept { return category_name_; }

  friend bool operator==(const SeedSet&, const SeedSet&) = default;

 private:
  std::vector<GroupId> seeds_;
  std::string category_name_;
};

using Features = Eigen::Matrix<double, static_cast<int>(kNumFeatures), 1>;

// [Linear.centroid, Linear.pairwise, List.centroid, List.pairwise, Dep.*, SP.*, UP.*];
// slots that cannot be computed hold exactly 0.
struct FeatureVector {
  Features values = Features::Zero();
  int presence_count = 0;
};

// The five per-type models, one per context type.
class ModelSet {
 public:
  ModelSet() = default;
  // Throws Error{Config} on a missing or duplicated context type.
  explicit ModelSet(std::vector<ContextEmbeddingModel> models);

  const ContextEmbeddingModel& operator[](ContextType t) const { return models_[index_of(t)]; }
  ContextEmbeddingModel& operator[](ContextType t) { return models_[index_of(t)]; }
  const std::array<ContextEmbeddingModel, kNumContextTypes>& models() const noexcept { return models_; }
  bool in_any(GroupId g) const;
  // Union of focus vocabularies, sorted.
  std::vector<GroupId> vocabulary() const;

 private:
  std::array<ContextEmbeddingModel, kNumContextTypes> models_;
};

// Mean of the unit-normalized vectors of the seeds present in the model.
std::optional<Eigen::VectorXd> centroid(const ContextEmbeddingModel& model, const SeedSet& seeds);
std::optional<double> centroid_score(const ContextEmbeddingModel& model, const SeedSet& seeds, GroupId candidate);
std::optional<double> pairwise_score(const ContextEmbeddingModel& model, const SeedSet& seeds, GroupId candidate);

FeatureVector feature_vector(const ModelSet& models, const SeedSet& seeds, GroupId candidate);

}  // namespace setexp
