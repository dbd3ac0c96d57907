#include "setexp/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "setexp/error.hpp"

namespace setexp {

void Hyperparams::validate() const {
  if (dim < 1) throw Error(ErrorKind::Config, "dim must be >= 1");
  if (epochs < 1) throw Error(ErrorKind::Config, "epochs must be >= 1");
  if (negatives < 1) throw Error(ErrorKind::Config, "negatives must be >= 1");
  if (!(alpha > 0.0)) throw Error(ErrorKind::Config, "alpha must be > 0");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw Error(ErrorKind::Config, "subsample must lie in (0, 1]");
  if (threads < 1) throw Error(ErrorKind::Config, "threads must be >= 1");
}

ContextEmbeddingModel::ContextEmbeddingModel(ContextType type, Hyperparams hyper, std::vector<GroupId> focus_ids,
                                             std::vector<std::size_t> focus_counts, Eigen::MatrixXf focus_vectors,
                                             std::vector<std::string> contexts, std::vector<std::size_t> context_counts,
                                             Eigen::MatrixXf context_vectors, std::vector<double> epoch_loss)
    : type_(type),
      hyper_(hyper),
      focus_ids_(std::move(focus_ids)),
      focus_counts_(std::move(focus_counts)),
      focus_vectors_(std::move(focus_vectors)),
      contexts_(std::move(contexts)),
      context_counts_(std::move(context_counts)),
      context_vectors_(std::move(context_vectors)),
      epoch_loss_(std::move(epoch_loss)) {
  if (focus_vectors_.cols() != static_cast<Eigen::Index>(focus_ids_.size()) ||
      focus_counts_.size() != focus_ids_.size())
    throw Error(ErrorKind::Format, "focus table size mismatch");
  if (context_vectors_.cols() != static_cast<Eigen::Index>(contexts_.size()) ||
      context_counts_.size() != contexts_.size())
    throw Error(ErrorKind::Format, "context table size mismatch");
  if (!contexts_.empty() && context_vectors_.rows() != focus_vectors_.rows())
    throw Error(ErrorKind::Format, "context and focus dimensions differ");
  for (std::size_t i = 0; i < focus_ids_.size(); ++i) {
    if (!column_.emplace(focus_ids_[i], static_cast<Eigen::Index>(i)).second)
      throw Error(ErrorKind::Format, "duplicate focus id " + std::to_string(focus_ids_[i]));
  }
  rebuild_cache();
}

void ContextEmbeddingModel::rebuild_cache() {
  unit_vectors_ = focus_vectors_.cast<double>();
  for (Eigen::Index c = 0; c < unit_vectors_.cols(); ++c) {
    const double norm = unit_vectors_.col(c).norm();
    if (norm > 0.0) unit_vectors_.col(c) /= norm;
  }
}

std::optional<Eigen::Index> ContextEmbeddingModel::column(GroupId g) const {
  if (auto it = column_.find(g); it != column_.end()) return it->second;
  return std::nullopt;
}

Eigen::VectorXf ContextEmbeddingModel::vector(GroupId g) const {
  const auto col = column(g);
  if (!col) throw Error(ErrorKind::MissingTerm, "term group " + std::to_string(g) + " not in " + std::string(to_string(type_)) + " model");
  return focus_vectors_.col(*col);
}

void ContextEmbeddingModel::scale_focus_vectors(float factor) {
  focus_vectors_ *= factor;
  rebuild_cache();
}

bool operator==(const ContextEmbeddingModel& a, const ContextEmbeddingModel& b) {
  return a.type_ == b.type_ && a.hyper_ == b.hyper_ && a.focus_ids_ == b.focus_ids_ &&
         a.focus_counts_ == b.focus_counts_ && a.focus_vectors_.rows() == b.focus_vectors_.rows() &&
         a.focus_vectors_.cols() == b.focus_vectors_.cols() && a.focus_vectors_ == b.focus_vectors_ &&
         a.contexts_ == b.contexts_ && a.context_counts_ == b.context_counts_ &&
         a.context_vectors_.rows() == b.context_vectors_.rows() &&
         a.context_vectors_.cols() == b.context_vectors_.cols() && a.context_vectors_ == b.context_vectors_ &&
         a.epoch_loss_ == b.epoch_loss_;
}

namespace {

double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

float sigmoid(float x) {
  if (x > 30.0f) return 1.0f;
  if (x < -30.0f) return 0.0f;
  return 1.0f / (1.0f + std::exp(-x));
}

struct TrainingPlan {
  std::vector<GroupId> focus_ids;
  std::vector<std::size_t> focus_counts;
  std::vector<std::string> contexts;
  std::vector<std::size_t> context_counts;
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;  // (focus column, context column)
};

TrainingPlan plan_training(const PairStream& stream, std::size_t min_count) {
  TrainingPlan plan;
  std::unordered_map<GroupId, std::int32_t> focus_col;
  for (const auto& [gid, count] : stream.focus_counts()) {
    if (count < min_count) continue;
    focus_col[gid] = static_cast<std::int32_t>(plan.focus_ids.size());
    plan.focus_ids.push_back(gid);
  }
  std::vector<std::int32_t> ctx_col(stream.contexts().size(), -1);
  for (std::size_t c = 0; c < stream.contexts().size(); ++c) {
    if (stream.context_counts()[c] < min_count) continue;
    ctx_col[c] = static_cast<std::int32_t>(plan.contexts.size());
    plan.contexts.push_back(stream.contexts()[c]);
  }
  plan.focus_counts.assign(plan.focus_ids.size(), 0);
  plan.context_counts.assign(plan.contexts.size(), 0);
  plan.pairs.reserve(stream.size());
  for (const auto& [gid, ctx] : stream.pairs()) {
    auto f = focus_col.find(gid);
    const std::int32_t c = ctx_col[static_cast<std::size_t>(ctx)];
    if (f == focus_col.end() || c < 0) continue;
    plan.pairs.emplace_back(f->second, c);
    ++plan.focus_counts[static_cast<std::size_t>(f->second)];
    ++plan.context_counts[static_cast<std::size_t>(c)];
  }
  return plan;
}

// Unigram^0.75 noise table, as in word2vec.
std::vector<std::int32_t> build_noise_table(const std::vector<std::size_t>& counts) {
  constexpr double kPower = 0.75;
  const std::size_t table_size = std::clamp<std::size_t>(counts.size() * 100, 1000, 10'000'000);
  double total = 0.0;
  for (std::size_t c : counts) total += std::pow(static_cast<double>(c), kPower);
  std::vector<std::int32_t> table(table_size);
  std::size_t idx = 0;
  double cumulative = counts.empty() ? 1.0 : std::pow(static_cast<double>(counts[0]), kPower) / total;
  for (std::size_t t = 0; t < table_size; ++t) {
    table[t] = static_cast<std::int32_t>(idx);
    if (static_cast<double>(t + 1) / static_cast<double>(table_size) > cumulative && idx + 1 < counts.size()) {
      ++idx;
      cumulative += std::pow(static_cast<double>(counts[idx]), kPower) / total;
    }
  }
  return table;
}

}  // namespace

ContextEmbeddingModel train_sgns(const PairStream& stream, const Hyperparams& hyper, const EpochCallback& on_epoch) {
  hyper.validate();
  TrainingPlan plan = plan_training(stream, hyper.min_count);
  if (plan.pairs.empty())
    throw Error(ErrorKind::InsufficientData,
                std::string(to_string(stream.type())) + ": no pairs survive min_count=" + std::to_string(hyper.min_count));

  const int dim = hyper.dim;
  const auto n_focus = static_cast<Eigen::Index>(plan.focus_ids.size());
  const auto n_ctx = static_cast<Eigen::Index>(plan.contexts.size());
  std::mt19937_64 rng(hyper.seed);

  Eigen::MatrixXf focus(dim, n_focus);
  {
    std::uniform_real_distribution<float> init(-0.5f / static_cast<float>(dim), 0.5f / static_cast<float>(dim));
    for (Eigen::Index c = 0; c < n_focus; ++c) {
      for (int r = 0; r < dim; ++r) focus(r, c) = init(rng);
    }
  }
  Eigen::MatrixXf ctx = Eigen::MatrixXf::Zero(dim, n_ctx);

  const auto noise = build_noise_table(plan.context_counts);
  const bool subsample = stream.type() == ContextType::Linear;
  std::vector<float> keep_prob;
  if (subsample) {
    const double threshold = hyper.subsample * static_cast<double>(plan.pairs.size());
    keep_prob.resize(plan.contexts.size());
    for (std::size_t c = 0; c < keep_prob.size(); ++c) {
      const double f = static_cast<double>(plan.context_counts[c]);
      keep_prob[c] = static_cast<float>(std::min(1.0, (std::sqrt(f / threshold) + 1.0) * threshold / f));
    }
  }

  const std::size_t n_pairs = plan.pairs.size();
  const double total_steps = static_cast<double>(n_pairs) * hyper.epochs;
  const double min_alpha = hyper.alpha * 1e-4;
  std::vector<std::size_t> order(n_pairs);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> epoch_loss;
  std::atomic<std::size_t> global_step{0};

  auto run_shard = [&](std::size_t begin, std::size_t end, std::uint64_t shard_seed, double& loss_sum,
                       std::size_t& seen) {
    std::mt19937_64 local(shard_seed);
    std::uniform_int_distribution<std::size_t> pick(0, noise.size() - 1);
    std::uniform_real_distribution<float> coin(0.0f, 1.0f);
    Eigen::VectorXf grad(dim);
    for (std::size_t i = begin; i < end; ++i) {
      const auto [f, c] = plan.pairs[order[i]];
      const std::size_t step = global_step.fetch_add(1, std::memory_order_relaxed);
      if (subsample && coin(local) > keep_prob[static_cast<std::size_t>(c)]) continue;
      const double progress = static_cast<double>(step) / total_steps;
      const auto lr = static_cast<float>(std::max(min_alpha, hyper.alpha * (1.0 - progress)));
      auto v = focus.col(f);
      grad.setZero();
      double pair_loss = 0.0;
      for (int d = 0; d <= hyper.negatives; ++d) {
        std::int32_t target = c;
        float label = 1.0f;
        if (d > 0) {
          target = noise[pick(local)];
          if (target == c) continue;
          label = 0.0f;
        }
        auto u = ctx.col(target);
        const float score = v.dot(u);
        pair_loss -= log_sigmoid(label > 0.5f ? score : -score);
        const float g = (label - sigmoid(score)) * lr;
        grad.noalias() += g * u;
        u.noalias() += g * v;
      }
      v += grad;
      loss_sum += pair_loss;
      ++seen;
    }
  };

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const std::uint64_t epoch_seed = rng();
    double loss_sum = 0.0;
    std::size_t seen = 0;
    if (hyper.threads <= 1) {
      run_shard(0, n_pairs, epoch_seed, loss_sum, seen);
    } else {
      const auto workers = static_cast<std::size_t>(hyper.threads);
      std::vector<double> losses(workers, 0.0);
      std::vector<std::size_t> counts(workers, 0);
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t b = n_pairs * w / workers;
        const std::size_t e = n_pairs * (w + 1) / workers;
        pool.emplace_back(run_shard, b, e, epoch_seed + w, std::ref(losses[w]), std::ref(counts[w]));
      }
      for (auto& t : pool) t.join();
      for (std::size_t w = 0; w < workers; ++w) {
        loss_sum += losses[w];
        seen += counts[w];
      }
    }
    const double mean = seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0;
    if (!std::isfinite(mean) || !focus.allFinite())
      throw Error(ErrorKind::Divergence, std::string(to_string(stream.type())) + ": loss diverged in epoch " +
                                             std::to_string(epoch + 1) + "; lower alpha");
    epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }

  for (Eigen::Index c = 0; c < n_focus; ++c) {
    if (focus.col(c).squaredNorm() == 0.0f)
      throw Error(ErrorKind::Divergence, "focus vector collapsed to zero");
  }
  return ContextEmbeddingModel(stream.type(), hyper, std::move(plan.focus_ids), std::move(plan.focus_counts),
                               std::move(focus), std::move(plan.contexts), std::move(plan.context_counts),
                               std::move(ctx), std::move(epoch_loss));
}

double cosine(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  const double denom = a.norm() * b.norm();
  if (denom == 0.0) return 0.0;
  return std::clamp(a.dot(b) / denom, -1.0, 1.0);
}

double cosine(const ContextEmbeddingModel& model, GroupId a, GroupId b) {
  const Eigen::VectorXd va = model.vector(a).cast<double>();
  const Eigen::VectorXd vb = model.vector(b).cast<double>();
  return cosine(va, vb);
}

std::vector<Neighbor> nearest(const ContextEmbeddingModel& model, const Eigen::Ref<const Eigen::VectorXd>& query,
                              std::size_t k, const std::set<GroupId>& exclude) {
  std::vector<Neighbor> scored;
  if (k == 0 || model.size() == 0) return scored;
  const double qn = query.norm();
  const Eigen::VectorXd scores = model.unit_vectors().transpose() * query;
  scored.reserve(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    const GroupId g = model.focus_ids()[i];
    if (exclude.contains(g)) continue;
    const double s = qn > 0.0 ? std::clamp(scores(static_cast<Eigen::Index>(i)) / qn, -1.0, 1.0) : 0.0;
    scored.push_back({g, s});
  }
  auto better = [](const Neighbor& a, const Neighbor& b) {
    return a.score != b.score ? a.score > b.score : a.group_id < b.group_id;
  };
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), better);
  scored.resize(keep);
  return scored;
}

namespace {

constexpr std::string_view kModelMagic = "SETEXP-EMB-v1";

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorKind::Format, "truncated model file");
  return v;
}

std::string exact(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

void save_model(const ContextEmbeddingModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  const auto& h = m.hyper();
  out << kModelMagic << '\n'
      << "ctx_type " << to_string(m.type()) << '\n'
      << "dim " << m.dim() << '\n'
      << "focus " << m.size() << '\n'
      << "contexts " << m.contexts().size() << '\n'
      << "hyper " << h.dim << ' ' << h.epochs << ' ' << h.negatives << ' ' << exact(h.alpha) << ' '
      << exact(h.subsample) << ' ' << h.min_count << ' ' << h.seed << ' ' << h.threads << '\n'
      << "loss " << m.epoch_loss().size();
  for (double l : m.epoch_loss()) out << ' ' << exact(l);
  out << "\nend\n";
  const int dim = m.dim();
  for (std::size_t i = 0; i < m.size(); ++i) {
    write_pod(out, static_cast<std::int32_t>(m.focus_ids()[i]));
    write_pod(out, static_cast<std::uint64_t>(m.focus_counts()[i]));
    out.write(reinterpret_cast<const char*>(m.focus_vectors().col(static_cast<Eigen::Index>(i)).data()),
              static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(dim)));
  }
  for (std::size_t i = 0; i < m.contexts().size(); ++i) {
    const std::string& s = m.contexts()[i];
    write_pod(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
    write_pod(out, static_cast<std::uint64_t>(m.context_counts()[i]));
    out.write(reinterpret_cast<const char*>(m.context_vectors().col(static_cast<Eigen::Index>(i)).data()),
              static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(dim)));
  }
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

ContextEmbeddingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Format, "empty model file");
  if (line != kModelMagic) {
    if (line.starts_with("SETEXP-EMB-")) throw Error(ErrorKind::Format, "unsupported model version: " + line);
    throw Error(ErrorKind::Format, "not a model file: " + path.string());
  }
  auto field = [&](std::string_view key) {
    if (!std::getline(in, line) || !line.starts_with(key)) throw Error(ErrorKind::Format, "missing header field " + std::string(key));
    return std::istringstream(line.substr(key.size()));
  };
  std::string type_name;
  field("ctx_type ") >> type_name;
  const ContextType type = context_type_from_string(type_name);
  int dim = 0;
  std::size_t n_focus = 0;
  std::size_t n_ctx = 0;
  field("dim ") >> dim;
  field("focus ") >> n_focus;
  field("contexts ") >> n_ctx;
  Hyperparams h;
  {
    auto hs = field("hyper ");
    hs >> h.dim >> h.epochs >> h.negatives >> h.alpha >> h.subsample >> h.min_count >> h.seed >> h.threads;
    if (!hs) throw Error(ErrorKind::Format, "bad hyperparameter header");
  }
  std::vector<double> losses;
  {
    auto ls = field("loss ");
    std::size_t n = 0;
    ls >> n;
    losses.resize(n);
    for (auto& l : losses) ls >> l;
    if (!ls) throw Error(ErrorKind::Format, "bad loss header");
  }
  if (!std::getline(in, line) || line != "end") throw Error(ErrorKind::Format, "missing header terminator");
  if (dim < 1) throw Error(ErrorKind::Format, "bad dimension");

  std::vector<GroupId> ids(n_focus);
  std::vector<std::size_t> focus_counts(n_focus);
  Eigen::MatrixXf focus(dim, static_cast<Eigen::Index>(n_focus));
  const auto bytes = static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < n_focus; ++i) {
    ids[i] = read_pod<std::int32_t>(in);
    focus_counts[i] = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
    in.read(reinterpret_cast<char*>(focus.col(static_cast<Eigen::Index>(i)).data()), bytes);
    if (!in) throw Error(ErrorKind::Format, "truncated model file");
  }
  std::vector<std::string> contexts(n_ctx);
  std::vector<std::size_t> ctx_counts(n_ctx);
  Eigen::MatrixXf ctx(dim, static_cast<Eigen::Index>(n_ctx));
  for (std::size_t i = 0; i < n_ctx; ++i) {
    const auto len = read_pod<std::uint32_t>(in);
    if (len > (1u << 20)) throw Error(ErrorKind::Format, "implausible context length");
    contexts[i].resize(len);
    in.read(contexts[i].data(), len);
    ctx_counts[i] = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
    in.read(reinterpret_cast<char*>(ctx.col(static_cast<Eigen::Index>(i)).data()), bytes);
    if (!in) throw Error(ErrorKind::Format, "truncated model file");
  }
  return ContextEmbeddingModel(type, h, std::move(ids), std::move(focus_counts), std::move(focus),
                               std::move(contexts), std::move(ctx_counts), std::move(ctx), std::move(losses));
}

}  // namespace setexp
