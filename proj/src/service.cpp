#include "setexp/service.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <regex>

#include <httplib.h>

#include "setexp/error.hpp"
#include "setexp/evaluation.hpp"
#include "setexp/text.hpp"

namespace setexp {

namespace fs = std::filesystem;
using nlohmann::json;

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound:
    case ErrorKind::UnknownTerm:
    case ErrorKind::MissingTerm:
      return 404;
    case ErrorKind::Conflict:
      return 409;
    case ErrorKind::Config:
    case ErrorKind::Parse:
    case ErrorKind::InvalidTree:
    case ErrorKind::Format:
    case ErrorKind::Shape:
      return 400;
    case ErrorKind::EmptyCorpus:
    case ErrorKind::EmptyNormalization:
    case ErrorKind::InsufficientData:
    case ErrorKind::NoSignal:
    case ErrorKind::DegenerateLabels:
    case ErrorKind::UndefinedMetric:
      return 422;
    case ErrorKind::Io:
    case ErrorKind::Divergence:
      return 500;
  }
  return 500;
}

namespace {

Response error_response(int status, const std::string& kind, const std::string& message) {
  return {status, {{"error", kind}, {"message", message}}};
}

Response error_response(const Error& e) { return error_response(http_status(e.kind()), std::string(to_string(e.kind())), e.what()); }

std::size_t query_size(const Request& r, const std::string& key, std::size_t fallback) {
  auto it = r.query.find(key);
  if (it == r.query.end() || it->second.empty()) return fallback;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(it->second, &used);
    if (used != it->second.size() || v < 0) throw std::invalid_argument(key);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error(ErrorKind::Config, "query parameter '" + key + "' must be a non-negative integer");
  }
}

bool valid_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'; });
}

}  // namespace

struct Service::Job {
  std::string id;
  std::string project_id;
  std::string state = "running";
  Stage stage = Stage::Candidates;
  double fraction = 0.0;
  std::string detail;
  std::string error;
  std::optional<Stage> failed_stage;
  std::vector<std::string> warnings;
  std::mutex mutex;
  std::condition_variable done;

  json to_json() {
    std::lock_guard lock(mutex);
    json j = {{"job_id", id},
              {"project_id", project_id},
              {"state", state},
              {"stage", std::string(setexp::to_string(stage))},
              {"stage_progress", fraction},
              {"detail", detail},
              {"warnings", warnings}};
    if (!error.empty()) j["error"] = error;
    if (failed_stage) j["failed_stage"] = std::string(setexp::to_string(*failed_stage));
    return j;
  }
};

struct Service::Project {
  std::string id;
  fs::path dir;
  std::shared_mutex mutex;
  std::shared_ptr<Engine> engine;
  std::atomic<bool> training{false};
  std::string status = "absent";
  std::string last_job;
  std::unique_ptr<CategoryStore> categories;
};

Service::Service(fs::path store, PipelineConfig defaults) : store_(std::move(store)), defaults_(std::move(defaults)) {
  fs::create_directories(store_ / "projects");
}

Service::~Service() {
  for (auto& t : workers_) {
    if (t.joinable()) t.join();
  }
}

fs::path Service::project_dir(const std::string& id) const { return store_ / "projects" / id; }

std::shared_ptr<Service::Project> Service::project(const std::string& id) {
  std::lock_guard lock(mutex_);
  if (auto it = projects_.find(id); it != projects_.end()) return it->second;
  const fs::path dir = project_dir(id);
  if (!valid_id(id) || !fs::exists(dir / "corpus.cache")) throw Error(ErrorKind::NotFound, "no project '" + id + "'");
  auto p = std::make_shared<Project>();
  p->id = id;
  p->dir = dir;
  p->categories = std::make_unique<CategoryStore>(dir / "categories");
  if (fs::exists(dir / "engine" / "engine.json")) p->status = "ready";
  projects_[id] = p;
  return p;
}

std::shared_ptr<const Engine> Service::ready_engine(Project& p) {
  if (p.training) throw Error(ErrorKind::Conflict, "project '" + p.id + "' is training");
  {
    std::shared_lock lock(p.mutex);
    if (p.engine) return p.engine;
  }
  std::unique_lock lock(p.mutex);
  if (p.engine) return p.engine;
  if (p.training) throw Error(ErrorKind::Conflict, "project '" + p.id + "' is training");
  if (!fs::exists(p.dir / "engine" / "engine.json")) throw Error(ErrorKind::Conflict, "project '" + p.id + "' has no trained models");
  p.engine = std::make_shared<Engine>(load_engine(p.dir / "engine"));
  p.status = "ready";
  return p.engine;
}

Response Service::handle(const Request& request) {
  const bool mutating = request.method == "POST" || request.method == "PUT" || request.method == "DELETE";
  const bool train = std::regex_match(request.path, std::regex("/projects/[^/]+/train/?"));
  std::string key;
  if (mutating && !train) {
    if (auto it = request.headers.find("Idempotency-Key"); it != request.headers.end()) key = request.method + " " + request.path + " " + it->second;
  }
  if (!key.empty()) {
    std::lock_guard lock(idempotency_mutex_);
    if (auto it = idempotency_.find(key); it != idempotency_.end()) {
      if (it->second.first != request.body)
        return error_response(422, "IdempotencyMismatch", "Idempotency-Key was already used with a different body");
      return it->second.second;
    }
  }
  Response r;
  try {
    r = dispatch(request);
  } catch (const Error& e) {
    r = error_response(e);
  } catch (const json::exception& e) {
    r = error_response(400, "BadRequest", e.what());
  } catch (const std::exception& e) {
    r = error_response(500, "Internal", e.what());
  }
  if (!key.empty() && r.status < 500) {
    std::lock_guard lock(idempotency_mutex_);
    idempotency_.emplace(key, std::make_pair(request.body, r));
  }
  return r;
}

Response Service::dispatch(const Request& req) {
  json body = json::object();
  if (!req.body.empty()) {
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      return error_response(400, "BadRequest", std::string("request body is not JSON: ") + e.what());
    }
    if (!body.is_object()) return error_response(400, "BadRequest", "request body must be a JSON object");
  }
  static const std::regex project_re("/projects/([^/]+)");
  static const std::regex sub_re("/projects/([^/]+)/([a-z]+)");
  static const std::regex term_re("/projects/([^/]+)/terms/(-?[0-9]+)/(contexts|exclusions)");
  static const std::regex category_re("/projects/([^/]+)/categories/([^/]+)");
  static const std::regex category_op_re("/projects/([^/]+)/categories/([^/]+)/(validate|reexpand)");
  static const std::regex job_re("/jobs/([^/]+)");
  std::string path = req.path;
  if (path.size() > 1 && path.back() == '/') path.pop_back();
  const std::string& m = req.method;
  std::smatch g;

  if (path == "/projects") {
    if (m == "POST") return create_project(body);
    if (m == "GET") return list_projects();
  } else if (std::regex_match(path, g, job_re)) {
    if (m == "GET") return job_status(g[1]);
  } else if (std::regex_match(path, g, term_re)) {
    const GroupId gid = std::stoi(g[2]);
    if (g[3] == "contexts" && m == "GET") return term_contexts(g[1], gid, req);
    if (g[3] == "exclusions" && m == "PUT") return set_exclusions(g[1], gid, body);
  } else if (std::regex_match(path, g, category_op_re)) {
    if (m == "POST") return g[3] == "validate" ? validate(g[1], g[2], body) : reexpand_category(g[1], g[2], body);
  } else if (std::regex_match(path, g, category_re)) {
    if (m == "GET") return get_category(g[1], g[2]);
  } else if (std::regex_match(path, g, sub_re)) {
    const std::string what = g[2];
    if (what == "train" && m == "POST") return start_training(g[1], body);
    if (what == "terms" && m == "GET") return list_terms(g[1], req);
    if (what == "expand" && m == "POST") return expand_seeds(g[1], body);
    if (what == "categories" && m == "GET") return list_categories(g[1]);
    if (what == "eval" && m == "POST") return evaluate(g[1], body);
  } else if (std::regex_match(path, g, project_re)) {
    if (m == "GET") return project_status(g[1]);
  }
  return error_response(404, "NotFound", "no route for " + m + " " + req.path);
}

Response Service::create_project(const json& body) {
  if (!body.contains("corpus_path") || !body["corpus_path"].is_string())
    return error_response(400, "BadRequest", "corpus_path is required");
  const fs::path path = body["corpus_path"].get<std::string>();
  const std::string format = body.value("format", "auto");
  IngestConfig icfg;
  icfg.doc_per_block = body.value("doc_per_block", false);
  std::string id = body.value("project_id", "");
  if (!id.empty() && !valid_id(id)) return error_response(400, "BadRequest", "project_id may only contain letters, digits, '-' and '_'");

  Corpus corpus = ingest(path, format, icfg);

  std::lock_guard lock(mutex_);
  if (id.empty()) {
    std::string base = CategoryStore::slug(path.stem().string());
    base = base.substr(0, base.rfind('-'));
    if (base.empty() || base == "category") base = "project";
    id = base;
    for (int n = 2; fs::exists(project_dir(id)) || projects_.contains(id); ++n) id = base + "-" + std::to_string(n);
  } else if (fs::exists(project_dir(id)) || projects_.contains(id)) {
    return error_response(409, "Conflict", "project '" + id + "' already exists");
  }
  const fs::path dir = project_dir(id);
  fs::create_directories(dir);
  save_corpus(corpus, dir / "corpus.cache");
  json meta = {{"project_id", id}, {"corpus_path", fs::absolute(path).string()}, {"format", format}};
  std::ofstream(dir / "project.json") << meta.dump(2) << '\n';
  auto p = std::make_shared<Project>();
  p->id = id;
  p->dir = dir;
  p->categories = std::make_unique<CategoryStore>(dir / "categories");
  projects_[id] = p;
  const auto& st = corpus.stats();
  return {201,
          {{"project_id", id},
           {"stats", {{"documents", st.documents}, {"sentences", st.sentences}, {"tokens", st.tokens}}}}};
}

Response Service::list_projects() {
  json out = json::array();
  for (const auto& entry : fs::directory_iterator(store_ / "projects")) {
    if (fs::exists(entry.path() / "corpus.cache")) out.push_back(entry.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return {200, {{"projects", out}}};
}

Response Service::project_status(const std::string& id) {
  auto p = project(id);
  std::string status;
  std::string job;
  {
    std::shared_lock lock(p->mutex);
    status = p->training ? "training" : p->status;
    job = p->last_job;
  }
  json models = json::object();
  for (ContextType t : kContextTypes) models[std::string(to_string(t))] = status;
  json out = {{"project_id", id}, {"models", models}, {"mlp", status}};
  if (!job.empty()) out["last_job"] = job;
  if (status == "ready") {
    const auto engine = ready_engine(*p);
    for (const auto& m : engine->models.models()) {
      models[std::string(to_string(m.type()))] = "ready";
      out["model_sizes"][std::string(to_string(m.type()))] = m.size();
    }
    out["models"] = models;
    out["mlp_from_gold"] = engine->mlp_from_gold;
    out["warnings"] = engine->warnings;
    out["term_groups"] = engine->groups.size();
  }
  return {200, out};
}

Response Service::start_training(const std::string& id, const json& body) {
  auto p = project(id);
  PipelineConfig cfg = defaults_;
  merge_config(cfg, body);
  std::optional<std::vector<RawGoldClass>> gold;
  if (body.contains("gold_path")) gold = load_gold_file(body["gold_path"].get<std::string>());

  bool expected = false;
  if (!p->training.compare_exchange_strong(expected, true)) return error_response(409, "Conflict", "project '" + id + "' is already training");

  auto job = std::make_shared<Job>();
  job->project_id = id;
  {
    std::lock_guard lock(mutex_);
    job->id = "job-" + std::to_string(next_job_++);
    jobs_[job->id] = job;
  }
  {
    std::unique_lock lock(p->mutex);
    p->status = "training";
    p->last_job = job->id;
  }
  workers_.emplace_back([this, p, job, cfg, gold = std::move(gold)]() {
    try {
      Corpus corpus = load_corpus(p->dir / "corpus.cache");
      auto progress = [job](Stage s, double f, const std::string& detail) {
        std::lock_guard lock(job->mutex);
        job->stage = s;
        job->fraction = f;
        job->detail = detail;
      };
      auto engine = std::make_shared<Engine>(train_engine(std::move(corpus), cfg, gold ? &*gold : nullptr, progress));
      {
        std::lock_guard lock(job->mutex);
        job->stage = Stage::Done;
        job->detail = "saving";
      }
      fs::remove_all(p->dir / "engine");
      save_engine(*engine, p->dir / "engine");
      {
        std::unique_lock lock(p->mutex);
        p->engine = engine;
        p->status = "ready";
      }
      std::lock_guard lock(job->mutex);
      job->warnings = engine->warnings;
      job->state = "ready";
      job->fraction = 1.0;
      job->detail.clear();
    } catch (const std::exception& e) {
      {
        std::unique_lock lock(p->mutex);
        p->status = "failed";
      }
      std::lock_guard lock(job->mutex);
      job->state = "failed";
      job->failed_stage = job->stage;
      job->error = e.what();
    }
    p->training = false;
    job->done.notify_all();
  });
  return {202, {{"job_id", job->id}, {"project_id", id}}};
}

json Service::wait_for_job(const std::string& job_id) {
  std::shared_ptr<Job> job;
  {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) throw Error(ErrorKind::NotFound, "no job '" + job_id + "'");
    job = it->second;
  }
  {
    std::unique_lock lock(job->mutex);
    job->done.wait(lock, [&] { return job->state != "running"; });
  }
  return job->to_json();
}

Response Service::job_status(const std::string& job_id) {
  std::shared_ptr<Job> job;
  {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return error_response(404, "NotFound", "no job '" + job_id + "'");
    job = it->second;
  }
  return {200, job->to_json()};
}

Response Service::list_terms(const std::string& id, const Request& req) {
  auto p = project(id);
  const auto engine = ready_engine(*p);
  const std::size_t limit = query_size(req, "limit", 5000);
  const std::size_t offset = query_size(req, "offset", 0);
  const std::string filter = req.query.contains("filter") ? req.query.at("filter") : "";
  std::shared_lock lock(p->mutex);
  json rows = json::array();
  for (const auto& r : top_groups(engine->groups, engine->importance, limit, filter, offset)) {
    const auto active = r.group->active_members();
    rows.push_back({{"group_id", r.group->group_id},
                    {"display_name", r.group->display_name},
                    {"members", active},
                    {"excluded", r.group->excluded},
                    {"tfidf", r.score.tfidf},
                    {"frequency", r.score.frequency},
                    {"is_multi", active.size() > 1}});
  }
  return {200, {{"rows", rows}, {"limit", limit}, {"offset", offset}}};
}

Response Service::term_contexts(const std::string& id, GroupId gid, const Request& req) {
  auto p = project(id);
  const auto engine = ready_engine(*p);
  const std::size_t max = query_size(req, "max", 20);
  std::shared_lock lock(p->mutex);
  const TermGroup* group = engine->group(gid);
  if (!group) return error_response(404, "UnknownTerm", "unknown term group " + std::to_string(gid));
  json snippets = json::array();
  for (const auto& s : snippets_for_group(engine->corpus, engine->occurrences, *group, max)) {
    json spans = json::array();
    for (const auto& [a, b] : s.highlight_spans) spans.push_back({a, b});
    snippets.push_back({{"doc_id", s.doc_id}, {"sent_index", s.sent_index}, {"text", s.text}, {"highlight_spans", spans}});
  }
  return {200, {{"group_id", gid}, {"display_name", group->display_name}, {"snippets", snippets}}};
}

Response Service::set_exclusions(const std::string& id, GroupId gid, const json& body) {
  auto p = project(id);
  ready_engine(*p);
  if (!body.contains("members") || !body["members"].is_array()) return error_response(400, "BadRequest", "members must be a list");
  const auto members = body["members"].get<std::vector<std::string>>();
  std::unique_lock lock(p->mutex);
  const auto engine = p->engine;
  if (!engine->group(gid)) return error_response(404, "UnknownTerm", "unknown term group " + std::to_string(gid));
  try {
    const TermGroup& g = engine->set_exclusions(gid, members);
    save_groups(engine->groups, p->dir / "engine" / "groups.tsv");
    return {200,
            {{"group_id", g.group_id},
             {"display_name", g.display_name},
             {"members", g.members},
             {"excluded", g.excluded},
             {"is_multi", g.active_members().size() > 1}}};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) return error_response(422, "Unprocessable", e.what());
    if (e.kind() == ErrorKind::UnknownTerm) return error_response(400, "BadRequest", e.what());
    throw;
  }
}

json Service::category_json(const Engine& engine, const Category& category) const {
  json j = to_json(category);
  json rows = json::array();
  for (const auto& c : category.expanded) {
    json row = to_json(c);
    const TermGroup* g = engine.group(c.group_id);
    row["display_name"] = g ? g->display_name : std::string();
    rows.push_back(row);
  }
  j["rows"] = rows;
  j["history_length"] = category.history.size();
  return j;
}

Response Service::expand_seeds(const std::string& id, const json& body) {
  auto p = project(id);
  const auto engine = ready_engine(*p);
  std::shared_lock lock(p->mutex);
  std::vector<GroupId> seeds;
  if (body.contains("seed_gids")) seeds = body["seed_gids"].get<std::vector<GroupId>>();
  if (body.contains("seeds")) {
    for (const auto& t : body["seeds"].get<std::vector<std::string>>()) {
      const auto gid = engine->lookup(t);
      if (!gid) return error_response(404, "UnknownTerm", "unknown term '" + t + "'");
      seeds.push_back(*gid);
    }
  }
  if (seeds.empty()) return error_response(400, "BadRequest", "seed_gids must not be empty");
  for (GroupId g : seeds) {
    if (!engine->group(g)) return error_response(404, "UnknownTerm", "unknown term group " + std::to_string(g));
  }
  Category category;
  category.name = body.value("category_name", "");
  category.seeds = SeedSet(seeds, category.name);
  category.options.k = body.value("k", std::size_t{50});
  category.options.per_model_n = engine->config.per_model_n;
  if (body.contains("threshold") && !body["threshold"].is_null()) category.options.threshold = body["threshold"].get<double>();
  const bool overwrite = body.value("overwrite", false);
  if (!category.name.empty() && !overwrite && p->categories->exists(category.name))
    return error_response(409, "Conflict", "category '" + category.name + "' already exists");
  run_expansion(engine->models, engine->mlp, category, category.seeds);
  if (!category.name.empty()) p->categories->save(category, overwrite);
  return {200, category_json(*engine, category)};
}

Response Service::validate(const std::string& id, const std::string& name, const json& body) {
  auto p = project(id);
  const auto engine = ready_engine(*p);
  std::shared_lock lock(p->mutex);
  if (!body.contains("gid")) return error_response(400, "BadRequest", "gid is required");
  const GroupId gid = body["gid"].get<GroupId>();
  const bool completed = body.value("completed", true);
  Category category = p->categories->load(name);
  auto it = std::find_if(category.expanded.begin(), category.expanded.end(), [gid](const auto& c) { return c.group_id == gid; });
  if (it == category.expanded.end()) return error_response(404, "UnknownTerm", "group " + std::to_string(gid) + " is not in the expansion");
  it->validated = completed;
  p->categories->save(category, true);
  return {200, category_json(*engine, category)};
}

Response Service::reexpand_category(const std::string& id, const std::string& name, const json& body) {
  auto p = project(id);
  const auto engine = ready_engine(*p);
  std::shared_lock lock(p->mutex);
  Category category = p->categories->load(name);
  reexpand(engine->models, engine->mlp, category, body.value("validated_only", true));
  p->categories->save(category, true);
  return {200, category_json(*engine, category)};
}

Response Service::list_categories(const std::string& id) {
  auto p = project(id);
  return {200, {{"categories", p->categories->names()}}};
}

Response Service::get_category(const std::string& id, const std::string& name) {
  auto p = project(id);
  const auto engine = ready_engine(*p);
  std::shared_lock lock(p->mutex);
  return {200, category_json(*engine, p->categories->load(name))};
}

Response Service::evaluate(const std::string& id, const json& body) {
  auto p = project(id);
  const auto engine = ready_engine(*p);
  std::shared_lock lock(p->mutex);
  if (!body.contains("gold_path")) return error_response(400, "BadRequest", "gold_path is required");
  const auto gold = resolve_gold(load_gold_file(body["gold_path"].get<std::string>()), engine->occurrences.lexicon());
  EvalConfig cfg;
  cfg.queries_per_class = body.value("queries_per_class", cfg.queries_per_class);
  cfg.min_seeds = body.value("min_seeds", cfg.min_seeds);
  cfg.max_seeds = body.value("max_seeds", cfg.max_seeds);
  cfg.rng_seed = body.value("seed", cfg.rng_seed);
  if (body.contains("cutoffs")) cfg.cutoffs = body["cutoffs"].get<std::vector<std::size_t>>();
  const auto report = map_at_n([&](const SeedSet& s, std::size_t n) { return engine->rank(s, n); }, gold, cfg);
  json out = to_json(report);
  out["text"] = format_report(report);
  return {200, out};
}

void Service::bind(httplib::Server& server) {
  auto route = [this](const httplib::Request& hreq, httplib::Response& hres) {
    Request req;
    req.method = hreq.method;
    req.path = hreq.path;
    for (const auto& [k, v] : hreq.params) req.query[k] = v;
    for (const auto& [k, v] : hreq.headers) req.headers[k] = v;
    req.body = hreq.body;
    const Response r = handle(req);
    hres.status = r.status;
    hres.set_content(r.body.dump(), "application/json");
  };
  server.Get(".*", route);
  server.Post(".*", route);
  server.Put(".*", route);
  server.Delete(".*", route);
}

}  // namespace setexp
