#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "setexp/context.hpp"
#include "setexp/terms.hpp"

namespace setexp {

struct Hyperparams {
  int dim = 100;
  int epochs = 5;
  int negatives = 5;
  double alpha = 0.025;       // decayed linearly to alpha * 1e-4
  double subsample = 1e-4;    // applied to Linear contexts only
  std::size_t min_count = 5;  // focus and context vocabularies
  std::uint64_t seed = 1;
  int threads = 1;            // >1 trains lock-free; only 1 is deterministic

  // Throws Error{Config} on dim < 1, negatives < 1, alpha <= 0, subsample
  // outside (0, 1], epochs < 1 or threads < 1.
  void validate() const;
  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

// Focus vectors (one column per term group) and context vectors for one
// context type. Column-major so each term's vector is contiguous.
class ContextEmbeddingModel {
 public:
  ContextEmbeddingModel() = default;
  ContextEmbeddingModel(ContextType type, Hyperparams hyper, std::vector<GroupId> focus_ids,
                        std::vector<std::size_t> focus_counts, Eigen::MatrixXf focus_vectors,
                        std::vector<std::string> contexts, std::vector<std::size_t> context_counts,
                        Eigen::MatrixXf context_vectors, std::vector<double> epoch_loss = {});

  ContextType type() const noexcept { return type_; }
  const Hyperparams& hyper() const noexcept { return hyper_; }
  int dim() const noexcept { return static_cast<int>(focus_vectors_.rows()); }
  std::size_t size() const noexcept { return focus_ids_.size(); }

  bool contains(GroupId g) const { return column_.contains(g); }
  std::optional<Eigen::Index> column(GroupId g) const;
  const std::vector<GroupId>& focus_ids() const noexcept { return focus_ids_; }
  const std::vector<std::size_t>& focus_counts() const noexcept { return focus_counts_; }
  const Eigen::MatrixXf& focus_vectors() const noexcept { return focus_vectors_; }
  // Focus vectors scaled to unit L2 norm, in double precision.
  const Eigen::MatrixXd& unit_vectors() const noexcept { return unit_vectors_; }
  const std::vector<std::string>& contexts() const noexcept { return contexts_; }
  const std::vector<std::size_t>& context_counts() const noexcept { return context_counts_; }
  const Eigen::MatrixXf& context_vectors() const noexcept { return context_vectors_; }
  const std::vector<double>& epoch_loss() const noexcept { return epoch_loss_; }

  // Throws Error{MissingTerm}.
  Eigen::VectorXf vector(GroupId g) const;

  // Multiplies every focus vector by `factor` and refreshes the unit cache.
  void scale_focus_vectors(float factor);

  friend bool operator==(const ContextEmbeddingModel& a, const ContextEmbeddingModel& b);

 private:
  void rebuild_cache();

  ContextType type_ = ContextType::Linear;
  Hyperparams hyper_;
  std::vector<GroupId> focus_ids_;
  std::vector<std::size_t> focus_counts_;
  Eigen::MatrixXf focus_vectors_;
  std::vector<std::string> contexts_;
  std::vector<std::size_t> context_counts_;
  Eigen::MatrixXf context_vectors_;
  std::vector<double> epoch_loss_;
  std::unordered_map<GroupId, Eigen::Index> column_;
  Eigen::MatrixXd unit_vectors_;
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

// Skip-gram with negative sampling over arbitrary (focus, context) pairs.
// Throws Error{InsufficientData} when nothing survives min_count filtering
// and Error{Divergence} on a non-finite epoch loss.
ContextEmbeddingModel train_sgns(const PairStream& pairs, const Hyperparams& hyper,
                                 const EpochCallback& on_epoch = {});

double cosine(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);
// Throws Error{MissingTerm} when either term is outside the focus vocabulary.
double cosine(const ContextEmbeddingModel& model, GroupId a, GroupId b);

struct Neighbor {
  GroupId group_id = 0;
  double score = 0.0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Top-k focus terms by cosine to `query`, descending, ties by group id.
std::vector<Neighbor> nearest(const ContextEmbeddingModel& model, const Eigen::Ref<const Eigen::VectorXd>& query,
                              std::size_t k, const std::set<GroupId>& exclude = {});

void save_model(const ContextEmbeddingModel& model, const std::filesystem::path& path);
// Throws Error{Format} on a bad magic, version or truncated file.
ContextEmbeddingModel load_model(const std::filesystem::path& path);

}  // namespace setexp
