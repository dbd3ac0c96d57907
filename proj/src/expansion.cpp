#include "setexp/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "setexp/error.hpp"
#include "setexp/text.hpp"

namespace setexp {

namespace fs = std::filesystem;
using nlohmann::json;

std::set<GroupId> generate_candidates(const ModelSet& models, const SeedSet& seeds, std::size_t per_model_n) {
  std::set<GroupId> out;
  const std::set<GroupId> exclude(seeds.ids().begin(), seeds.ids().end());
  bool any = false;
  for (const auto& model : models.models()) {
    const auto c = centroid(model, seeds);
    if (!c) continue;
    any = true;
    for (const auto& n : nearest(model, *c, per_model_n, exclude)) out.insert(n.group_id);
  }
  if (!any) throw Error(ErrorKind::NoSignal, "no seed term is known to any context model");
  return out;
}

namespace {

double mean_centroid_score(const Features& f) {
  double sum = 0.0;
  for (std::size_t t = 0; t < kNumContextTypes; ++t) sum += f(static_cast<Eigen::Index>(2 * t));
  return sum / static_cast<double>(kNumContextTypes);
}

template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t n, std::mt19937_64& rng) {
  n = std::min(n, pool.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(n);
  return pool;
}

}  // namespace

std::vector<LabeledRow> build_training_set(const std::vector<GoldClass>& gold, const ModelSet& models,
                                           const TrainingSetConfig& cfg, std::vector<std::string>* warnings) {
  std::mt19937_64 rng(cfg.seed);
  const std::vector<GroupId> vocabulary = models.vocabulary();
  std::vector<LabeledRow> rows;
  std::size_t usable = 0;

  for (const auto& cls : gold) {
    std::vector<GroupId> members;
    for (GroupId g : cls.members) {
      if (models.in_any(g)) members.push_back(g);
    }
    if (members.size() < std::max<std::size_t>(cfg.min_class_size, 2)) {
      if (warnings) warnings->push_back("class '" + cls.name + "' skipped: " + std::to_string(members.size()) + " members in vocabulary");
      continue;
    }
    ++usable;
    const std::set<GroupId> member_set(members.begin(), members.end());
    std::vector<GroupId> outsiders;
    for (GroupId g : vocabulary) {
      if (!member_set.contains(g)) outsiders.push_back(g);
    }
    const std::size_t max_seeds = std::min(cfg.max_seeds, members.size() - 1);
    const std::size_t min_seeds = std::min(cfg.min_seeds, max_seeds);

    for (std::size_t q = 0; q < cfg.queries_per_class; ++q) {
      std::uniform_int_distribution<std::size_t> seed_size(min_seeds, max_seeds);
      auto shuffled = sample_without_replacement(members, members.size(), rng);
      const std::size_t n_seeds = seed_size(rng);
      std::vector<GroupId> seed_ids(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_seeds));
      std::vector<GroupId> held_out(shuffled.begin() + static_cast<std::ptrdiff_t>(n_seeds), shuffled.end());
      const SeedSet seeds(seed_ids);
      const auto positives = sample_without_replacement(held_out, cfg.max_positives, rng);

      const std::size_t n_hard = positives.size() / 2;
      std::vector<std::pair<double, GroupId>> hard_pool;
      for (GroupId c : generate_candidates(models, seeds, cfg.hard_pool)) {
        if (member_set.contains(c)) continue;
        hard_pool.emplace_back(mean_centroid_score(feature_vector(models, seeds, c).values), c);
      }
      std::sort(hard_pool.begin(), hard_pool.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      std::vector<GroupId> negatives;
      for (std::size_t i = 0; i < hard_pool.size() && negatives.size() < n_hard; ++i) negatives.push_back(hard_pool[i].second);
      std::vector<GroupId> random_pool;
      for (GroupId g : outsiders) {
        if (std::find(negatives.begin(), negatives.end(), g) == negatives.end()) random_pool.push_back(g);
      }
      for (GroupId g : sample_without_replacement(random_pool, positives.size() - negatives.size(), rng))
        negatives.push_back(g);

      for (GroupId p : positives) rows.push_back({seed_ids, p, feature_vector(models, seeds, p).values, 1});
      for (GroupId n : negatives) rows.push_back({seed_ids, n, feature_vector(models, seeds, n).values, 0});
    }
  }
  if (usable == 0) throw Error(ErrorKind::InsufficientData, "no gold class has enough members in the vocabulary");
  std::shuffle(rows.begin(), rows.end(), rng);
  return rows;
}

void write_feature_dump(const std::vector<LabeledRow>& rows, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.seeds.size(); ++i) out << (i ? "," : "") << r.seeds[i];
    out << '\t' << r.candidate;
    for (Eigen::Index i = 0; i < r.features.size(); ++i) out << '\t' << r.features(i);
    out << '\t' << r.label << '\n';
  }
}

std::vector<LabeledRow> read_feature_dump(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::vector<LabeledRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() != 3 + kNumFeatures) throw ParseError(line_no, "expected 13 tab-separated fields");
    try {
      LabeledRow r;
      for (const auto& s : text::split(cols[0], ',')) r.seeds.push_back(std::stoi(s));
      r.candidate = std::stoi(cols[1]);
      for (std::size_t i = 0; i < kNumFeatures; ++i) r.features(static_cast<Eigen::Index>(i)) = std::stod(cols[2 + i]);
      r.label = std::stoi(cols.back());
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw ParseError(line_no, "malformed feature row");
    }
  }
  return rows;
}

MlpModel train_mlp(const std::vector<LabeledRow>& rows, const MlpConfig& cfg, MlpTrainingReport* report) {
  const auto positives = std::count_if(rows.begin(), rows.end(), [](const LabeledRow& r) { return r.label == 1; });
  if (rows.empty() || positives == 0 || positives == static_cast<std::ptrdiff_t>(rows.size()))
    throw Error(ErrorKind::DegenerateLabels, "training set needs both positive and negative rows");
  if (cfg.hidden < 1 || cfg.batch < 1 || cfg.epochs < 0 || !(cfg.learning_rate > 0.0))
    throw Error(ErrorKind::Config, "invalid MLP configuration");

  const auto n = static_cast<Eigen::Index>(rows.size());
  MlpModel::Matrix x(static_cast<Eigen::Index>(kNumFeatures), n);
  MlpModel::Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.col(i) = rows[static_cast<std::size_t>(i)].features;
    y(i) = rows[static_cast<std::size_t>(i)].label;
  }

  MlpModel mlp = MlpModel::random(static_cast<int>(kNumFeatures), cfg.hidden, cfg.seed);
  std::mt19937_64 rng(cfg.seed + 1);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  MlpTrainingReport local;
  local.loss_curve.push_back(mlp.loss(x, y));

  MlpModel::Gradients grad;
  MlpModel::Gradients velocity{MlpModel::Matrix::Zero(mlp.hidden(), mlp.inputs()), MlpModel::Vector::Zero(mlp.hidden()),
                               MlpModel::Vector::Zero(mlp.hidden()), 0.0};
  MlpModel::Matrix xb;
  MlpModel::Vector yb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += cfg.batch) {
      const Eigen::Index len = std::min<Eigen::Index>(cfg.batch, n - start);
      xb.resize(x.rows(), len);
      yb.resize(len);
      for (Eigen::Index i = 0; i < len; ++i) {
        xb.col(i) = x.col(order[static_cast<std::size_t>(start + i)]);
        yb(i) = y(order[static_cast<std::size_t>(start + i)]);
      }
      mlp.loss_and_gradient(xb, yb, grad);
      velocity.w1 = cfg.momentum * velocity.w1 + grad.w1;
      velocity.b1 = cfg.momentum * velocity.b1 + grad.b1;
      velocity.w2 = cfg.momentum * velocity.w2 + grad.w2;
      velocity.b2 = cfg.momentum * velocity.b2 + grad.b2;
      mlp.apply(velocity, cfg.learning_rate);
    }
    const double loss = mlp.loss(x, y);
    if (!std::isfinite(loss) || !mlp.all_finite())
      throw Error(ErrorKind::Divergence, "MLP training diverged in epoch " + std::to_string(epoch + 1));
    local.loss_curve.push_back(loss);
  }
  if (report) *report = std::move(local);
  return mlp;
}

MlpModel uniform_combiner(int hidden) {
  const int inputs = static_cast<int>(kNumFeatures);
  MlpModel m(inputs, std::max(hidden, 2 * inputs));
  // Units 2i and 2i+1 pass the positive and negative parts of feature i.
  constexpr double kScale = 10.0;
  for (int i = 0; i < inputs; ++i) {
    m.w1()(2 * i, i) = 1.0;
    m.w1()(2 * i + 1, i) = -1.0;
    m.w2()(2 * i) = kScale / inputs;
    m.w2()(2 * i + 1) = -kScale / inputs;
  }
  m.b2() = -kScale / 2.0;
  return m;
}

double predict_certainty(const MlpModel& mlp, std::span<const double> features) {
  if (features.size() != kNumFeatures || mlp.inputs() != static_cast<int>(kNumFeatures))
    throw Error(ErrorKind::Shape, "expected 10 features, got " + std::to_string(features.size()));
  const Eigen::Map<const MlpModel::Vector> x(features.data(), static_cast<Eigen::Index>(features.size()));
  return mlp.predict(x);
}

std::vector<ExpansionCandidate> expand(const ModelSet& models, const MlpModel& mlp, const SeedSet& seeds,
                                       const ExpandOptions& opts) {
  const auto pool = generate_candidates(models, seeds, opts.per_model_n);
  std::vector<ExpansionCandidate> scored;
  scored.reserve(pool.size());
  for (GroupId g : pool) {
    ExpansionCandidate c;
    c.group_id = g;
    c.features = feature_vector(models, seeds, g);
    c.certainty = predict_certainty(mlp, std::span<const double>(c.features.values.data(), kNumFeatures));
    if (opts.threshold && c.certainty < *opts.threshold) continue;
    scored.push_back(std::move(c));
  }
  std::sort(scored.begin(), scored.end(), [](const ExpansionCandidate& a, const ExpansionCandidate& b) {
    return a.certainty != b.certainty ? a.certainty > b.certainty : a.group_id < b.group_id;
  });
  if (scored.size() > opts.k) scored.resize(opts.k);

  std::vector<ExpansionCandidate> out;
  out.reserve(seeds.size() + scored.size());
  for (GroupId s : seeds.ids()) {
    ExpansionCandidate c;
    c.group_id = s;
    c.features = feature_vector(models, seeds, s);
    c.certainty = 1.0;
    c.is_seed = true;
    out.push_back(std::move(c));
  }
  for (auto& c : scored) out.push_back(std::move(c));
  return out;
}

void run_expansion(const ModelSet& models, const MlpModel& mlp, Category& category, const SeedSet& seeds) {
  auto result = expand(models, mlp, seeds, category.options);
  // Candidates validated earlier keep their flag when they reappear.
  std::set<GroupId> validated;
  for (const auto& c : category.expanded) {
    if (c.validated) validated.insert(c.group_id);
  }
  for (auto& c : result) c.validated = validated.contains(c.group_id);
  category.expanded = result;
  category.history.push_back({seeds, std::move(result)});
}

SeedSet reexpansion_seeds(const Category& category, bool validated_only) {
  std::vector<GroupId> ids = category.seeds.ids();
  for (const auto& c : category.expanded) {
    if (c.is_seed && !c.validated) continue;
    if (validated_only && !c.validated) continue;
    if (std::find(ids.begin(), ids.end(), c.group_id) == ids.end()) ids.push_back(c.group_id);
  }
  if (ids.empty()) throw Error(ErrorKind::NoSignal, "re-expansion needs at least one seed");
  if (ids.size() > kMaxSeeds) ids.resize(kMaxSeeds);
  return SeedSet(std::move(ids), category.name);
}

std::vector<ExpansionCandidate> reexpand(const ModelSet& models, const MlpModel& mlp, Category& category,
                                         bool validated_only) {
  const SeedSet seeds = reexpansion_seeds(category, validated_only);
  run_expansion(models, mlp, category, seeds);
  return category.expanded;
}

json to_json(const ExpansionCandidate& c) {
  std::vector<double> features(c.features.values.data(), c.features.values.data() + kNumFeatures);
  return {{"group_id", c.group_id},     {"certainty", c.certainty},
          {"is_seed", c.is_seed},       {"validated", c.validated},
          {"features", features},       {"presence_count", c.features.presence_count}};
}

ExpansionCandidate candidate_from_json(const json& j) {
  ExpansionCandidate c;
  c.group_id = j.at("group_id").get<GroupId>();
  c.certainty = j.at("certainty").get<double>();
  c.is_seed = j.at("is_seed").get<bool>();
  c.validated = j.at("validated").get<bool>();
  const auto features = j.at("features").get<std::vector<double>>();
  if (features.size() != kNumFeatures) throw Error(ErrorKind::Shape, "candidate features must have 10 entries");
  for (std::size_t i = 0; i < kNumFeatures; ++i) c.features.values(static_cast<Eigen::Index>(i)) = features[i];
  c.features.presence_count = j.at("presence_count").get<int>();
  return c;
}

namespace {

json expansion_to_json(const std::vector<ExpansionCandidate>& xs) {
  json arr = json::array();
  for (const auto& c : xs) arr.push_back(to_json(c));
  return arr;
}

std::vector<ExpansionCandidate> expansion_from_json(const json& j) {
  std::vector<ExpansionCandidate> out;
  for (const auto& c : j) out.push_back(candidate_from_json(c));
  return out;
}

}  // namespace

json to_json(const Category& c) {
  json history = json::array();
  for (const auto& snap : c.history) history.push_back({{"seeds", snap.seeds.ids()}, {"expansion", expansion_to_json(snap.expansion)}});
  json exclusions = json::object();
  for (const auto& [gid, members] : c.exclusions) exclusions[std::to_string(gid)] = members;
  json options = {{"k", c.options.k}, {"per_model_n", c.options.per_model_n}};
  options["threshold"] = c.options.threshold ? json(*c.options.threshold) : json(nullptr);
  return {{"format", "setexp-category-v1"}, {"name", c.name},         {"seeds", c.seeds.ids()},
          {"options", options},             {"expanded", expansion_to_json(c.expanded)},
          {"history", history},             {"exclusions", exclusions}};
}

Category category_from_json(const json& j) {
  try {
    if (j.value("format", "") != "setexp-category-v1") throw Error(ErrorKind::Format, "not a category record");
    Category c;
    c.name = j.at("name").get<std::string>();
    c.seeds = SeedSet(j.at("seeds").get<std::vector<GroupId>>(), c.name);
    const auto& o = j.at("options");
    c.options.k = o.at("k").get<std::size_t>();
    c.options.per_model_n = o.at("per_model_n").get<std::size_t>();
    if (!o.at("threshold").is_null()) c.options.threshold = o.at("threshold").get<double>();
    c.expanded = expansion_from_json(j.at("expanded"));
    for (const auto& snap : j.at("history"))
      c.history.push_back({SeedSet(snap.at("seeds").get<std::vector<GroupId>>(), c.name), expansion_from_json(snap.at("expansion"))});
    for (const auto& [key, members] : j.at("exclusions").items())
      c.exclusions[std::stoi(key)] = members.get<std::vector<std::string>>();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad category record: ") + e.what());
  }
}

json to_json(const MlpModel& m, const MlpTrainingReport& report) {
  const auto params = m.parameters();
  return {{"format", "setexp-mlp-v1"},
          {"inputs", m.inputs()},
          {"hidden", m.hidden()},
          {"parameters", std::vector<double>(params.data(), params.data() + params.size())},
          {"loss_curve", report.loss_curve}};
}

MlpModel mlp_from_json(const json& j) {
  try {
    if (j.value("format", "") != "setexp-mlp-v1") throw Error(ErrorKind::Format, "not an MLP record");
    MlpModel m(j.at("inputs").get<int>(), j.at("hidden").get<int>());
    const auto params = j.at("parameters").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(params.size()) != m.parameter_count()) throw Error(ErrorKind::Format, "MLP parameter count mismatch");
    m.set_parameters(Eigen::Map<const MlpModel::Vector>(params.data(), static_cast<Eigen::Index>(params.size())));
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad MLP record: ") + e.what());
  }
}

CategoryStore::CategoryStore(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

std::string CategoryStore::slug(const std::string& name) {
  std::string s;
  for (char ch : text::to_lower(name)) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isalnum(c)) s.push_back(ch);
    else if (!s.empty() && s.back() != '-') s.push_back('-');
  }
  while (!s.empty() && s.back() == '-') s.pop_back();
  if (s.size() > 48) s.resize(48);
  // FNV-1a of the exact name keeps distinct names apart after sanitizing.
  std::uint32_t h = 2166136261u;
  for (char ch : name) {
    h ^= static_cast<unsigned char>(ch);
    h *= 16777619u;
  }
  std::ostringstream out;
  out << (s.empty() ? "category" : s) << '-' << std::hex << std::setw(8) << std::setfill('0') << h;
  return out.str();
}

fs::path CategoryStore::path_for(const std::string& name) const { return dir_ / (slug(name) + ".json"); }

void CategoryStore::save(const Category& category, bool overwrite) {
  if (category.name.empty()) throw Error(ErrorKind::Config, "category name must not be empty");
  std::lock_guard lock(mutex_);
  const fs::path path = path_for(category.name);
  if (fs::exists(path) && !overwrite) throw Error(ErrorKind::Conflict, "category '" + category.name + "' already exists");
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << std::setw(2) << to_json(category) << '\n';
    if (!out) throw Error(ErrorKind::Io, "write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

Category CategoryStore::load(const std::string& name) const {
  std::lock_guard lock(mutex_);
  const fs::path path = path_for(name);
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::NotFound, "no category named '" + name + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("corrupt category file: ") + e.what());
  }
  return category_from_json(j);
}

bool CategoryStore::exists(const std::string& name) const {
  std::lock_guard lock(mutex_);
  return fs::exists(path_for(name));
}

std::vector<std::string> CategoryStore::names() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    try {
      json j;
      in >> j;
      out.push_back(j.at("name").get<std::string>());
    } catch (const json::exception&) {
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace setexp
