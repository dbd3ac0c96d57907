#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "setexp/context.hpp"
#include "setexp/corpus.hpp"
#include "setexp/embedding.hpp"
#include "setexp/expansion.hpp"
#include "setexp/gold.hpp"
#include "setexp/similarity.hpp"
#include "setexp/terms.hpp"

namespace setexp {

// format is "auto", "text" or "conllu"; "auto" picks CoNLL-U for .conllu and
// .conll files. Throws Error{NotFound} for a missing path and Error{Config}
// for an unknown format.
Corpus ingest(const std::filesystem::path& path, const std::string& format = "auto", const IngestConfig& cfg = {});

struct PipelineConfig {
  CandidateConfig candidates;
  GroupingConfig grouping;
  ExtractionConfig extraction;
  Hyperparams hyper;
  Hyperparams prelim{.dim = 50, .epochs = 3};
  TrainingSetConfig training;
  MlpConfig mlp;
  std::size_t per_model_n = 500;
};

nlohmann::json to_json(const PipelineConfig& cfg);
// Keys absent from `j` keep the values already in `cfg`; on error `cfg` is left
// untouched.
void merge_config(PipelineConfig& cfg, const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

enum class Stage { Candidates, Prelim, Grouping, Indexing, Extraction, Embedding, Classifier, Done };
std::string_view to_string(Stage s);

// fraction is the progress within the stage, in [0, 1].
using ProgressCallback = std::function<void(Stage stage, double fraction, const std::string& detail)>;

struct Engine {
  PipelineConfig config;
  Corpus corpus;
  std::vector<TermGroup> groups;
  OccurrenceIndex occurrences;
  ImportanceTable importance;
  ModelSet models;
  MlpModel mlp;
  MlpTrainingReport mlp_report;
  bool mlp_from_gold = false;
  std::vector<std::string> warnings;

  const TermGroup* group(GroupId g) const;
  // Replaces the excluded members of a group and refreshes the occurrence
  // index, importance scores and display names. Throws Error{UnknownTerm} or
  // Error{Config} when every member would be excluded.
  const TermGroup& set_exclusions(GroupId g, const std::vector<std::string>& excluded);
  // Resolves a raw term (any member, any case) to its group.
  std::optional<GroupId> lookup(const std::string& term) const;
  const std::string& label(GroupId g) const;
  // Seeds excluded from the ranked list, as used by the evaluation harness.
  std::vector<GroupId> rank(const SeedSet& seeds, std::size_t n) const;
};

// Runs candidate counting, the preliminary linear model, grouping, indexing,
// context extraction, the five embedding models and the classifier. Without
// gold classes the classifier is the fixed uniform combiner.
Engine train_engine(Corpus corpus, const PipelineConfig& cfg, const std::vector<RawGoldClass>* gold = nullptr,
                    const ProgressCallback& progress = {});

void save_engine(const Engine& engine, const std::filesystem::path& dir);
Engine load_engine(const std::filesystem::path& dir);

}  // namespace setexp
