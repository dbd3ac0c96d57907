#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "setexp/gold.hpp"
#include "setexp/mlp.hpp"
#include "setexp/similarity.hpp"

namespace setexp {

using MlpModel = Mlp<double>;

struct MlpConfig {
  int hidden = 100;
  int epochs = 50;
  int batch = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 7;
};

struct MlpTrainingReport {
  std::vector<double> loss_curve;  // full-dataset loss before training, then after each epoch
};

struct ExpansionCandidate {
  GroupId group_id = 0;
  FeatureVector features;
  double certainty = 0.0;
  bool is_seed = false;
  bool validated = false;
};

// Union over the five models of the per-model k-NN around the seed centroid,
// minus the seeds. Throws Error{NoSignal} when no model knows any seed.
std::set<GroupId> generate_candidates(const ModelSet& models, const SeedSet& seeds, std::size_t per_model_n = 500);

struct TrainingSetConfig {
  std::size_t min_class_size = 5;
  std::size_t queries_per_class = 20;
  std::size_t min_seeds = 2;
  std::size_t max_seeds = 10;
  std::size_t max_positives = 10;
  std::size_t hard_pool = 50;  // per-model neighbours scanned for hard negatives
  std::uint64_t seed = 11;
};

struct LabeledRow {
  std::vector<GroupId> seeds;
  GroupId candidate = 0;
  Features features = Features::Zero();
  int label = 0;
};

// Positives are held-out class members; negatives are split between random
// non-members and the highest-scoring non-member candidates. Classes smaller
// than min_class_size are skipped (reported through `warnings`). Throws
// Error{InsufficientData} when no class is usable.
std::vector<LabeledRow> build_training_set(const std::vector<GoldClass>& gold, const ModelSet& models,
                                           const TrainingSetConfig& cfg, std::vector<std::string>* warnings = nullptr);

// `seed_ids | cand_id | 10 floats | label`, tab separated, seeds comma-joined.
void write_feature_dump(const std::vector<LabeledRow>& rows, const std::filesystem::path& path);
std::vector<LabeledRow> read_feature_dump(const std::filesystem::path& path);

// Mini-batch SGD on binary cross-entropy. Throws Error{DegenerateLabels} when
// the dataset has a single label.
MlpModel train_mlp(const std::vector<LabeledRow>& rows, const MlpConfig& cfg, MlpTrainingReport* report = nullptr);

// Fixed combiner used when no labelled classes are available: the logistic of
// the mean feature, scaled so that a mean cosine of 0.5 maps to 0.5.
MlpModel uniform_combiner(int hidden = 100);

// Throws Error{Shape} unless `features` has exactly ten entries.
double predict_certainty(const MlpModel& mlp, std::span<const double> features);

struct ExpandOptions {
  std::size_t k = 50;
  std::optional<double> threshold;
  std::size_t per_model_n = 500;
};

// Seeds first at certainty 1, then candidates by (certainty desc, group id).
std::vector<ExpansionCandidate> expand(const ModelSet& models, const MlpModel& mlp, const SeedSet& seeds,
                                       const ExpandOptions& opts = {});

struct CategorySnapshot {
  SeedSet seeds;
  std::vector<ExpansionCandidate> expansion;
};

struct Category {
  std::string name;
  SeedSet seeds;  // the user's original seeds
  std::vector<ExpansionCandidate> expanded;
  std::vector<CategorySnapshot> history;
  std::map<GroupId, std::vector<std::string>> exclusions;
  ExpandOptions options;
};

// Runs expand for `seeds`, stores the result and appends a snapshot.
void run_expansion(const ModelSet& models, const MlpModel& mlp, Category& category, const SeedSet& seeds);

// Seeds for the next round: original seeds plus validated candidates (or all
// candidates when validated_only is false).
SeedSet reexpansion_seeds(const Category& category, bool validated_only = true);

// Throws Error{NoSignal} if the effective seed set is empty or unknown.
std::vector<ExpansionCandidate> reexpand(const ModelSet& models, const MlpModel& mlp, Category& category,
                                         bool validated_only = true);

nlohmann::json to_json(const ExpansionCandidate& c);
ExpansionCandidate candidate_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Category& c);
Category category_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MlpModel& m, const MlpTrainingReport& report = {});
MlpModel mlp_from_json(const nlohmann::json& j);

// One JSON file per category under a directory; file names are slugs of the
// category name.
class CategoryStore {
 public:
  explicit CategoryStore(std::filesystem::path dir);

  // Throws Error{Conflict} if the name exists and overwrite is false.
  void save(const Category& category, bool overwrite = false);
  // Throws Error{NotFound}.
  Category load(const std::string& name) const;
  bool exists(const std::string& name) const;
  std::vector<std::string> names() const;

  static std::string slug(const std::string& name);

 private:
  std::filesystem::path path_for(const std::string& name) const;

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

}  // namespace setexp
