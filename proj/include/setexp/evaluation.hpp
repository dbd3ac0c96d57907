#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "setexp/gold.hpp"
#include "setexp/similarity.hpp"

namespace setexp {

// AP@n normalized by min(|relevant|, n). Throws Error{UndefinedMetric} when
// `relevant` is empty.
double average_precision_at_n(std::span<const GroupId> ranked, const std::set<GroupId>& relevant, std::size_t n);

struct EvalConfig {
  std::size_t queries_per_class = 20;
  std::size_t min_seeds = 2;
  std::size_t max_seeds = 10;
  std::vector<std::size_t> cutoffs{10, 20, 50};
  std::uint64_t rng_seed = 5;
};

struct EvalQuery {
  std::string class_name;
  std::vector<GroupId> seeds;
  std::set<GroupId> relevant;
};

struct ClassReport {
  std::string name;
  std::size_t queries = 0;
  std::map<std::size_t, double> map_at;
};

struct EvalReport {
  std::map<std::size_t, double> map_at;
  std::vector<ClassReport> classes;
  std::size_t queries = 0;
  std::vector<std::string> warnings;
};

// Returns the ranked non-seed group ids for a seed set, at least n long when
// the engine can provide them.
using Ranker = std::function<std::vector<GroupId>(const SeedSet& seeds, std::size_t n)>;

std::vector<EvalQuery> sample_queries(const std::vector<GoldClass>& gold, const EvalConfig& cfg);
EvalReport map_at_n(const Ranker& ranker, const std::vector<GoldClass>& gold, const EvalConfig& cfg = {});

std::string format_report(const EvalReport& report);
nlohmann::json to_json(const EvalReport& report);

struct SyntheticClass {
  std::string name;
  std::string noun;  // class noun used by the carrier frames
  std::vector<std::string> members;
  std::optional<std::size_t> parent;  // index of the enclosing class
};

struct SyntheticSpec {
  std::size_t classes = 10;
  std::size_t members = 20;
  std::size_t sentences = 50000;
  std::uint64_t seed = 1;
  // When non-empty these replace the generated classes.
  std::vector<SyntheticClass> explicit_classes;
  double noise = 0.25;
  double multiword = 0.2;
  double intruder = 0.1;  // chance a list or pattern sentence borrows a member of another class
  double zipf = 1.0;      // member frequency skew within a class
  std::size_t sentences_per_doc = 20;
};

struct SyntheticCorpus {
  std::string conllu;
  std::vector<RawGoldClass> gold;
};

// Throws Error{Config} for fewer than two classes or fewer than five members.
SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec);
// Writes corpus.conllu and gold.tsv into `dir`.
void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

// fruit with a citrus subclass plus three unrelated classes.
std::vector<SyntheticClass> nested_fruit_classes();

}  // namespace setexp
