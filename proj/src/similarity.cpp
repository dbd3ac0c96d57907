#include "setexp/similarity.hpp"

#include <algorithm>
#include <set>

#include "setexp/error.hpp"

namespace setexp {

SeedSet::SeedSet(std::vector<GroupId> seeds, std::string category_name)
    : seeds_(std::move(seeds)), category_name_(std::move(category_name)) {
  if (seeds_.empty()) throw Error(ErrorKind::Config, "seed set is empty");
  if (seeds_.size() > kMaxSeeds) throw Error(ErrorKind::Config, "at most 50 seeds are supported");
  std::set<GroupId> unique(seeds_.begin(), seeds_.end());
  if (unique.size() != seeds_.size()) throw Error(ErrorKind::Config, "duplicate seed term");
}

bool SeedSet::contains(GroupId g) const { return std::find(seeds_.begin(), seeds_.end(), g) != seeds_.end(); }

ModelSet::ModelSet(std::vector<ContextEmbeddingModel> models) {
  std::array<bool, kNumContextTypes> seen{};
  if (models.size() != kNumContextTypes) throw Error(ErrorKind::Config, "expected exactly five context models");
  for (auto& m : models) {
    const std::size_t i = index_of(m.type());
    if (seen[i]) throw Error(ErrorKind::Config, "duplicate " + std::string(to_string(m.type())) + " model");
    seen[i] = true;
    models_[i] = std::move(m);
  }
}

bool ModelSet::in_any(GroupId g) const {
  return std::any_of(models_.begin(), models_.end(), [g](const ContextEmbeddingModel& m) { return m.contains(g); });
}

std::vector<GroupId> ModelSet::vocabulary() const {
  std::set<GroupId> all;
  for (const auto& m : models_) all.insert(m.focus_ids().begin(), m.focus_ids().end());
  return {all.begin(), all.end()};
}

namespace {

// Summation order fixed by group id so results do not depend on seed order.
std::vector<GroupId> sorted_ids(const SeedSet& seeds) {
  std::vector<GroupId> ids = seeds.ids();
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

std::optional<Eigen::VectorXd> centroid(const ContextEmbeddingModel& model, const SeedSet& seeds) {
  Eigen::VectorXd sum;
  int present = 0;
  for (GroupId s : sorted_ids(seeds)) {
    const auto col = model.column(s);
    if (!col) continue;
    if (present == 0) sum = model.unit_vectors().col(*col);
    else sum += model.unit_vectors().col(*col);
    ++present;
  }
  if (present == 0) return std::nullopt;
  return Eigen::VectorXd(sum / static_cast<double>(present));
}

std::optional<double> centroid_score(const ContextEmbeddingModel& model, const SeedSet& seeds, GroupId candidate) {
  const auto cand = model.column(candidate);
  if (!cand) return std::nullopt;
  const auto c = centroid(model, seeds);
  if (!c) return std::nullopt;
  return cosine(*c, model.unit_vectors().col(*cand));
}

std::optional<double> pairwise_score(const ContextEmbeddingModel& model, const SeedSet& seeds, GroupId candidate) {
  const auto cand = model.column(candidate);
  if (!cand) return std::nullopt;
  double sum = 0.0;
  int present = 0;
  for (GroupId s : sorted_ids(seeds)) {
    const auto col = model.column(s);
    if (!col) continue;
    sum += cosine(model.unit_vectors().col(*col), model.unit_vectors().col(*cand));
    ++present;
  }
  if (present == 0) return std::nullopt;
  return sum / static_cast<double>(present);
}

FeatureVector feature_vector(const ModelSet& models, const SeedSet& seeds, GroupId candidate) {
  FeatureVector fv;
  for (ContextType t : kContextTypes) {
    const auto slot = static_cast<Eigen::Index>(2 * index_of(t));
    if (const auto c = centroid_score(models[t], seeds, candidate)) {
      fv.values(slot) = *c;
      ++fv.presence_count;
    }
    if (const auto p = pairwise_score(models[t], seeds, candidate)) {
      fv.values(slot + 1) = *p;
      ++fv.presence_count;
    }
  }
  return fv;
}

}  // namespace setexp
