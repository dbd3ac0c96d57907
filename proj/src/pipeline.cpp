#include "setexp/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>

#include "setexp/error.hpp"
#include "setexp/text.hpp"

namespace setexp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json hyper_to_json(const Hyperparams& h) {
  return {{"dim", h.dim},           {"epochs", h.epochs},       {"negatives", h.negatives},
          {"alpha", h.alpha},       {"subsample", h.subsample}, {"min_count", h.min_count},
          {"seed", h.seed},         {"threads", h.threads}};
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void merge_hyper(Hyperparams& h, const json& j) {
  take(j, "dim", h.dim);
  take(j, "epochs", h.epochs);
  take(j, "negatives", h.negatives);
  take(j, "alpha", h.alpha);
  take(j, "subsample", h.subsample);
  take(j, "min_count", h.min_count);
  take(j, "seed", h.seed);
  take(j, "threads", h.threads);
}

std::vector<std::string> pattern_strings(const PatternInventory& p) {
  std::vector<std::string> out;
  for (const auto& t : p.templates) out.push_back(text::join(t, " "));
  return out;
}

}  // namespace

Corpus ingest(const fs::path& path, const std::string& format, const IngestConfig& cfg) {
  if (format != "auto" && format != "text" && format != "conllu") throw Error(ErrorKind::Config, "unknown corpus format '" + format + "'");
  std::error_code ec;
  if (!fs::exists(path, ec)) throw Error(ErrorKind::NotFound, "no such corpus: " + path.string());
  bool conllu = format == "conllu";
  if (format == "auto" && !fs::is_directory(path)) {
    const std::string ext = text::to_lower(path.extension().string());
    conllu = ext == ".conllu" || ext == ".conll";
  }
  return conllu ? load_conllu(path) : load_plain_text(path, cfg);
}

json to_json(const PipelineConfig& cfg) {
  json abbreviations = json::array();
  for (const auto& [a, b] : cfg.grouping.abbreviations) abbreviations.push_back({a, b});
  return {
      {"candidates", {{"min_count", cfg.candidates.min_count}}},
      {"grouping",
       {{"edit_threshold", cfg.grouping.edit_threshold},
        {"sim_threshold", cfg.grouping.sim_threshold},
        {"builtin_abbreviations", cfg.grouping.builtin_abbreviations},
        {"abbreviations", abbreviations},
        {"aliases", cfg.grouping.aliases}}},
      {"extraction",
       {{"linear_window", cfg.extraction.linear_window},
        {"linear_stoplist", cfg.extraction.linear_stoplist},
        {"patterns", pattern_strings(cfg.extraction.patterns)}}},
      {"hyper", hyper_to_json(cfg.hyper)},
      {"prelim", hyper_to_json(cfg.prelim)},
      {"training",
       {{"min_class_size", cfg.training.min_class_size},
        {"queries_per_class", cfg.training.queries_per_class},
        {"min_seeds", cfg.training.min_seeds},
        {"max_seeds", cfg.training.max_seeds},
        {"max_positives", cfg.training.max_positives},
        {"hard_pool", cfg.training.hard_pool},
        {"seed", cfg.training.seed}}},
      {"mlp",
       {{"hidden", cfg.mlp.hidden},
        {"epochs", cfg.mlp.epochs},
        {"batch", cfg.mlp.batch},
        {"learning_rate", cfg.mlp.learning_rate},
        {"momentum", cfg.mlp.momentum},
        {"seed", cfg.mlp.seed}}},
      {"per_model_n", cfg.per_model_n},
  };
}

void merge_config(PipelineConfig& target, const json& j) {
  PipelineConfig cfg = target;
  try {
    if (!j.is_object()) throw Error(ErrorKind::Config, "configuration must be a JSON object");
    if (j.contains("candidates")) take(j["candidates"], "min_count", cfg.candidates.min_count);
    if (j.contains("grouping")) {
      const auto& g = j["grouping"];
      take(g, "edit_threshold", cfg.grouping.edit_threshold);
      take(g, "sim_threshold", cfg.grouping.sim_threshold);
      take(g, "builtin_abbreviations", cfg.grouping.builtin_abbreviations);
      if (g.contains("abbreviations")) {
        cfg.grouping.abbreviations.clear();
        for (const auto& pair : g["abbreviations"])
          cfg.grouping.abbreviations.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
      }
      take(g, "aliases", cfg.grouping.aliases);
    }
    if (j.contains("extraction")) {
      const auto& e = j["extraction"];
      take(e, "linear_window", cfg.extraction.linear_window);
      take(e, "linear_stoplist", cfg.extraction.linear_stoplist);
      if (e.contains("patterns")) cfg.extraction.patterns = PatternInventory::from_strings(e["patterns"].get<std::vector<std::string>>());
    }
    if (j.contains("hyper")) merge_hyper(cfg.hyper, j["hyper"]);
    if (j.contains("prelim")) merge_hyper(cfg.prelim, j["prelim"]);
    if (j.contains("training")) {
      const auto& t = j["training"];
      take(t, "min_class_size", cfg.training.min_class_size);
      take(t, "queries_per_class", cfg.training.queries_per_class);
      take(t, "min_seeds", cfg.training.min_seeds);
      take(t, "max_seeds", cfg.training.max_seeds);
      take(t, "max_positives", cfg.training.max_positives);
      take(t, "hard_pool", cfg.training.hard_pool);
      take(t, "seed", cfg.training.seed);
    }
    if (j.contains("mlp")) {
      const auto& m = j["mlp"];
      take(m, "hidden", cfg.mlp.hidden);
      take(m, "epochs", cfg.mlp.epochs);
      take(m, "batch", cfg.mlp.batch);
      take(m, "learning_rate", cfg.mlp.learning_rate);
      take(m, "momentum", cfg.mlp.momentum);
      take(m, "seed", cfg.mlp.seed);
    }
    take(j, "per_model_n", cfg.per_model_n);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("bad configuration: ") + e.what());
  }
  cfg.hyper.validate();
  cfg.prelim.validate();
  target = std::move(cfg);
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
  PipelineConfig cfg;
  merge_config(cfg, j);
  return cfg;
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Candidates: return "candidates";
    case Stage::Prelim: return "prelim";
    case Stage::Grouping: return "grouping";
    case Stage::Indexing: return "indexing";
    case Stage::Extraction: return "extraction";
    case Stage::Embedding: return "embedding";
    case Stage::Classifier: return "classifier";
    case Stage::Done: return "done";
  }
  return "unknown";
}

const TermGroup* Engine::group(GroupId g) const {
  if (g >= 0 && static_cast<std::size_t>(g) < groups.size() && groups[static_cast<std::size_t>(g)].group_id == g)
    return &groups[static_cast<std::size_t>(g)];
  for (const auto& tg : groups) {
    if (tg.group_id == g) return &tg;
  }
  return nullptr;
}

const TermGroup& Engine::set_exclusions(GroupId g, const std::vector<std::string>& excluded) {
  auto it = std::find_if(groups.begin(), groups.end(), [g](const TermGroup& tg) { return tg.group_id == g; });
  if (it == groups.end()) throw Error(ErrorKind::UnknownTerm, "unknown term group " + std::to_string(g));
  TermGroup& target = *it;
  std::set<std::string> next;
  for (const auto& raw : excluded) {
    const std::string m = text::normalize_term(raw);
    if (!target.has_member(m)) throw Error(ErrorKind::UnknownTerm, "'" + raw + "' is not a member of group " + std::to_string(g));
    next.insert(m);
  }
  if (next.size() == target.members.size()) throw Error(ErrorKind::Config, "cannot exclude every member of a group");
  target.excluded = std::move(next);
  occurrences = OccurrenceIndex(corpus, groups);
  importance = score_importance(corpus, groups, occurrences);
  assign_display_names(groups, importance);
  return target;
}

std::optional<GroupId> Engine::lookup(const std::string& term) const {
  try {
    const std::string norm = text::normalize_term(term);
    if (auto g = occurrences.lexicon().lookup(norm)) return g;
    for (const auto& tg : groups) {
      if (tg.has_member(norm)) return tg.group_id;
    }
  } catch (const Error&) {
  }
  return std::nullopt;
}

const std::string& Engine::label(GroupId g) const {
  const TermGroup* tg = group(g);
  if (!tg) throw Error(ErrorKind::UnknownTerm, "unknown term group " + std::to_string(g));
  return tg->display_name;
}

std::vector<GroupId> Engine::rank(const SeedSet& seeds, std::size_t n) const {
  ExpandOptions opts;
  opts.k = n;
  opts.per_model_n = config.per_model_n;
  std::vector<GroupId> out;
  for (const auto& c : expand(models, mlp, seeds, opts)) {
    if (!c.is_seed) out.push_back(c.group_id);
  }
  return out;
}

namespace {

void report(const ProgressCallback& progress, Stage s, double fraction, const std::string& detail = {}) {
  if (progress) progress(s, fraction, detail);
}

ContextEmbeddingModel empty_model(ContextType type, const Hyperparams& hyper) {
  return ContextEmbeddingModel(type, hyper, {}, {}, Eigen::MatrixXf(hyper.dim, 0), {}, {}, Eigen::MatrixXf(hyper.dim, 0));
}

std::vector<TermGroup> singleton_groups(const TermVocabulary& vocab) {
  std::vector<TermGroup> out;
  out.reserve(vocab.terms.size());
  for (std::size_t i = 0; i < vocab.terms.size(); ++i) {
    TermGroup g;
    g.group_id = static_cast<GroupId>(i);
    g.members = {vocab.terms[i]};
    g.display_name = vocab.terms[i];
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

Engine train_engine(Corpus corpus, const PipelineConfig& cfg, const std::vector<RawGoldClass>* gold,
                    const ProgressCallback& progress) {
  cfg.hyper.validate();
  cfg.prelim.validate();
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "corpus has no tokens");
  Engine e;
  e.config = cfg;
  e.corpus = std::move(corpus);

  report(progress, Stage::Candidates, 0.0);
  const TermVocabulary vocab = count_candidate_terms(e.corpus, cfg.candidates);
  if (vocab.terms.empty()) throw Error(ErrorKind::InsufficientData, "no candidate term reaches the minimum count");
  report(progress, Stage::Candidates, 1.0, std::to_string(vocab.terms.size()) + " candidate terms");

  report(progress, Stage::Prelim, 0.0);
  std::optional<ContextEmbeddingModel> prelim;
  {
    const auto singletons = singleton_groups(vocab);
    const OccurrenceIndex index(e.corpus, singletons);
    PairStream stream(ContextType::Linear);
    const auto& docs = e.corpus.documents();
    for (std::size_t d = 0; d < docs.size(); ++d) {
      for (std::size_t s = 0; s < docs[d].sentences.size(); ++s) {
        const auto& sentence = docs[d].sentences[s];
        const auto units = resolve_units(sentence, index.in_sentence(d, s), index);
        for (const auto& p : extract_linear(units, cfg.extraction.linear_window, cfg.extraction.linear_stoplist))
          stream.add(p.focus, p.context);
      }
    }
    try {
      prelim = train_sgns(stream, cfg.prelim);
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::InsufficientData) throw;
      e.warnings.push_back("preliminary model skipped: " + std::string(err.what()));
    }
  }
  report(progress, Stage::Prelim, 1.0);

  report(progress, Stage::Grouping, 0.0);
  const TermSimilarity similarity = [&prelim](std::size_t a, std::size_t b) -> std::optional<double> {
    if (!prelim) return std::nullopt;
    const auto ga = static_cast<GroupId>(a);
    const auto gb = static_cast<GroupId>(b);
    if (!prelim->contains(ga) || !prelim->contains(gb)) return std::nullopt;
    return cosine(*prelim, ga, gb);
  };
  e.groups = group_terms(vocab, similarity, cfg.grouping);
  prelim.reset();
  report(progress, Stage::Grouping, 1.0, std::to_string(e.groups.size()) + " term groups");

  report(progress, Stage::Indexing, 0.0);
  e.occurrences = OccurrenceIndex(e.corpus, e.groups);
  e.importance = score_importance(e.corpus, e.groups, e.occurrences);
  assign_display_names(e.groups, e.importance);
  report(progress, Stage::Indexing, 1.0);

  report(progress, Stage::Extraction, 0.0);
  PairStreams streams = extract_all(e.corpus, e.occurrences, cfg.extraction);
  report(progress, Stage::Extraction, 1.0);

  std::vector<ContextEmbeddingModel> models;
  for (std::size_t t = 0; t < kNumContextTypes; ++t) {
    const ContextType type = kContextTypes[t];
    const auto on_epoch = [&](int epoch, double) {
      const double done = static_cast<double>(t * static_cast<std::size_t>(cfg.hyper.epochs) + static_cast<std::size_t>(epoch));
      report(progress, Stage::Embedding, done / static_cast<double>(kNumContextTypes * static_cast<std::size_t>(cfg.hyper.epochs)),
             std::string(to_string(type)));
    };
    try {
      models.push_back(train_sgns(streams[type], cfg.hyper, on_epoch));
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::InsufficientData) throw;
      e.warnings.push_back(std::string(to_string(type)) + " model is empty: " + err.what());
      models.push_back(empty_model(type, cfg.hyper));
    }
    streams[type] = PairStream(type);
  }
  e.models = ModelSet(std::move(models));

  report(progress, Stage::Classifier, 0.0);
  e.mlp = uniform_combiner(cfg.mlp.hidden);
  if (gold && !gold->empty()) {
    try {
      const auto resolved = resolve_gold(*gold, e.occurrences.lexicon());
      const auto rows = build_training_set(resolved, e.models, cfg.training, &e.warnings);
      e.mlp = train_mlp(rows, cfg.mlp, &e.mlp_report);
      e.mlp_from_gold = true;
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::InsufficientData && err.kind() != ErrorKind::DegenerateLabels) throw;
      e.warnings.push_back("classifier falls back to the uniform combiner: " + std::string(err.what()));
    }
  }
  report(progress, Stage::Classifier, 1.0);
  report(progress, Stage::Done, 1.0);
  return e;
}

void save_engine(const Engine& engine, const fs::path& dir) {
  fs::create_directories(dir / "models");
  save_corpus(engine.corpus, dir / "corpus.cache");
  save_groups(engine.groups, dir / "groups.tsv");
  for (const auto& m : engine.models.models()) save_model(m, dir / "models" / (std::string(to_string(m.type())) + ".emb"));
  json meta = {{"format", "setexp-engine-v1"},
               {"config", to_json(engine.config)},
               {"mlp", to_json(engine.mlp, engine.mlp_report)},
               {"mlp_from_gold", engine.mlp_from_gold},
               {"warnings", engine.warnings}};
  std::ofstream out(dir / "engine.json");
  if (!out) throw Error(ErrorKind::Io, "cannot write " + (dir / "engine.json").string());
  out << std::setw(2) << meta << '\n';
}

Engine load_engine(const fs::path& dir) {
  std::ifstream in(dir / "engine.json");
  if (!in) throw Error(ErrorKind::NotFound, "no trained engine in " + dir.string());
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& err) {
    throw Error(ErrorKind::Format, std::string("corrupt engine.json: ") + err.what());
  }
  if (meta.value("format", "") != "setexp-engine-v1") throw Error(ErrorKind::Format, "unsupported engine format");
  Engine e;
  merge_config(e.config, meta.at("config"));
  e.corpus = load_corpus(dir / "corpus.cache");
  e.groups = load_groups(dir / "groups.tsv");
  e.occurrences = OccurrenceIndex(e.corpus, e.groups);
  e.importance = score_importance(e.corpus, e.groups, e.occurrences);
  assign_display_names(e.groups, e.importance);
  std::vector<ContextEmbeddingModel> models;
  for (ContextType t : kContextTypes) models.push_back(load_model(dir / "models" / (std::string(to_string(t)) + ".emb")));
  e.models = ModelSet(std::move(models));
  e.mlp = mlp_from_json(meta.at("mlp"));
  e.mlp_report.loss_curve = meta.at("mlp").value("loss_curve", std::vector<double>{});
  e.mlp_from_gold = meta.value("mlp_from_gold", false);
  e.warnings = meta.value("warnings", std::vector<std::string>{});
  return e;
}

}  // namespace setexp
