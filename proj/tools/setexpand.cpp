#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "setexp/error.hpp"
#include "setexp/evaluation.hpp"
#include "setexp/service.hpp"
#include "setexp/text.hpp"

#include <CLI11.hpp>
#include <httplib.h>

using namespace setexp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path store_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SETEXP_STORE"); env && *env) return env;
  return "setexp-store";
}

PipelineConfig default_config(const std::string& flag, const fs::path& store) {
  fs::path path = flag;
  if (path.empty()) {
    if (const char* env = std::getenv("SETEXP_CONFIG"); env && *env) path = env;
  }
  if (path.empty() && fs::exists(store / "config.json")) path = store / "config.json";
  return path.empty() ? PipelineConfig{} : load_pipeline_config(path);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& part : text::split(s, ',')) {
    const auto b = part.find_first_not_of(' ');
    const auto e = part.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(part.substr(b, e - b + 1));
  }
  return out;
}

int fail(const Response& r) {
  std::cerr << "error " << r.status << ": " << r.body.value("error", "") << ": " << r.body.value("message", "") << '\n';
  return r.status == 404 ? 3 : r.status == 409 ? 4 : 2;
}

Response call(Service& svc, const std::string& method, const std::string& path, const json& body = nullptr,
              std::map<std::string, std::string> query = {}) {
  Request req{method, path, std::move(query), body.is_null() ? std::string() : body.dump(), {}};
  return svc.handle(req);
}

void print_expansion(const json& cat) {
  std::cout << "category: " << cat.value("name", "") << "  (history " << cat["history_length"] << ")\n";
  std::cout << std::left << std::setw(8) << "gid" << std::setw(32) << "term" << std::setw(11) << "certainty" << "flags\n";
  for (const auto& r : cat["rows"]) {
    std::ostringstream cert;
    cert << std::fixed << std::setprecision(2) << r["certainty"].get<double>();
    std::string flags;
    if (r["is_seed"].get<bool>()) flags += "seed ";
    if (r["validated"].get<bool>()) flags += "completed";
    std::cout << std::setw(8) << r["group_id"].get<int>() << std::setw(32) << r["display_name"].get<std::string>() << std::setw(11)
              << cert.str() << flags << '\n';
  }
}

std::optional<GroupId> resolve(Service& svc, const std::string& project, const std::string& term) {
  auto r = call(svc, "GET", "/projects/" + project + "/terms", nullptr, {{"filter", term}, {"limit", "100000"}});
  if (r.status != 200) return std::nullopt;
  const std::string norm = text::normalize_term(term);
  for (const auto& row : r.body["rows"]) {
    for (const auto& m : row["members"]) {
      if (m.get<std::string>() == norm) return row["group_id"].get<GroupId>();
    }
  }
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corpus-based term set expansion"};
  app.require_subcommand(1);
  std::string store_flag, config_flag, project;
  bool as_json = false;
  app.add_option("--store", store_flag, "Store directory (default $SETEXP_STORE or ./setexp-store)");
  app.add_option("--config", config_flag, "JSON file with default hyperparameters (default $SETEXP_CONFIG or <store>/config.json)");
  app.add_flag("--json", as_json, "Print raw JSON");

  auto* ingest = app.add_subcommand("ingest", "Load a corpus into a new project");
  std::string corpus_path, format = "auto";
  bool doc_per_block = false;
  ingest->add_option("path", corpus_path, "Plain-text file or directory, or CoNLL-U file")->required();
  ingest->add_option("--format", format, "auto, text or conllu");
  ingest->add_option("--project", project, "Project id");
  ingest->add_flag("--doc-per-block", doc_per_block, "Treat each blank-line separated block as a document");

  auto* train = app.add_subcommand("train", "Group terms, train the five context models and the classifier");
  std::string gold_path;
  int threads = 0, dim = 0, epochs = 0;
  long long seed = -1;
  train->add_option("--project", project)->required();
  train->add_option("--gold", gold_path, "Gold classes used to train the classifier");
  train->add_option("--threads", threads);
  train->add_option("--dim", dim);
  train->add_option("--epochs", epochs);
  train->add_option("--seed", seed);

  auto* terms = app.add_subcommand("terms", "Show the ranked term table");
  std::string filter;
  std::size_t limit = 5000, offset = 0;
  terms->add_option("--project", project)->required();
  terms->add_option("--filter", filter);
  terms->add_option("--limit", limit);
  terms->add_option("--offset", offset);

  auto* contexts = app.add_subcommand("contexts", "Show corpus snippets for a term group");
  std::string term;
  int gid = -1;
  std::size_t max_snippets = 20;
  contexts->add_option("--project", project)->required();
  contexts->add_option("--gid", gid);
  contexts->add_option("--term", term);
  contexts->add_option("--max", max_snippets);

  auto* exclude = app.add_subcommand("exclude", "Exclude members from a term group");
  std::string members;
  exclude->add_option("--project", project)->required();
  exclude->add_option("--gid", gid)->required();
  exclude->add_option("--members", members, "Comma-separated members; empty clears the exclusions");

  auto* expand_cmd = app.add_subcommand("expand", "Expand a seed set");
  std::string seeds, gids, category;
  std::size_t k = 50;
  std::optional<double> threshold;
  bool overwrite = false;
  expand_cmd->add_option("--project", project)->required();
  expand_cmd->add_option("--seeds", seeds, "Comma-separated seed terms");
  expand_cmd->add_option("--gids", gids, "Comma-separated seed group ids");
  expand_cmd->add_option("--category", category, "Category name to store the result under");
  expand_cmd->add_option("-k", k);
  expand_cmd->add_option("--threshold", threshold);
  expand_cmd->add_flag("--overwrite", overwrite);

  auto* validate_cmd = app.add_subcommand("validate", "Mark an expanded term as completed");
  bool undo = false;
  validate_cmd->add_option("--project", project)->required();
  validate_cmd->add_option("--category", category)->required();
  validate_cmd->add_option("--gid", gid);
  validate_cmd->add_option("--term", term);
  validate_cmd->add_flag("--undo", undo, "Clear the completed flag");

  auto* reexpand_cmd = app.add_subcommand("reexpand", "Re-expand a category from its seeds and validated terms");
  bool all = false;
  reexpand_cmd->add_option("--project", project)->required();
  reexpand_cmd->add_option("--category", category)->required();
  reexpand_cmd->add_flag("--all", all, "Use every expanded term, not only validated ones");

  auto* categories = app.add_subcommand("categories", "List stored categories or show one");
  categories->add_option("--project", project)->required();
  categories->add_option("--name", category);

  auto* eval = app.add_subcommand("eval", "MAP@n of the trained project against gold classes");
  std::size_t queries = 20, seed_size = 0, min_seeds = 2, max_seeds = 10;
  std::string out_prefix;
  eval->add_option("--project", project)->required();
  eval->add_option("--gold", gold_path)->required();
  eval->add_option("--queries", queries, "Queries per class");
  eval->add_option("--seed-size", seed_size, "Fixed seed size (overrides --min-seeds/--max-seeds)");
  eval->add_option("--min-seeds", min_seeds);
  eval->add_option("--max-seeds", max_seeds);
  eval->add_option("--out", out_prefix, "Write <out>.txt and <out>.json");

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus with gold classes");
  std::string out_dir;
  SyntheticSpec spec;
  bool nested = false;
  synth->add_option("--out", out_dir)->required();
  synth->add_option("--classes", spec.classes);
  synth->add_option("--members", spec.members);
  synth->add_option("--sentences", spec.sentences);
  synth->add_option("--seed", spec.seed);
  synth->add_flag("--nested", nested, "fruit/citrus classes instead of generated ones");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  auto* projects = app.add_subcommand("projects", "List projects");
  auto* status = app.add_subcommand("status", "Show project status");
  status->add_option("--project", project)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      if (nested) spec.explicit_classes = nested_fruit_classes();
      const auto corpus = generate_synthetic_corpus(spec);
      write_synthetic_corpus(corpus, out_dir);
      std::cout << "wrote " << (fs::path(out_dir) / "corpus.conllu").string() << " and " << (fs::path(out_dir) / "gold.tsv").string()
                << " (" << corpus.gold.size() << " classes)\n";
      return 0;
    }

    const fs::path store = store_dir(store_flag);
    Service svc(store, default_config(config_flag, store));

    if (serve->parsed()) {
      httplib::Server server;
      svc.bind(server);
      std::cerr << "listening on " << host << ':' << port << " (store " << store.string() << ")\n";
      return server.listen(host, port) ? 0 : 1;
    }

    Response r;
    if (ingest->parsed()) {
      json body = {{"corpus_path", corpus_path}, {"format", format}, {"doc_per_block", doc_per_block}};
      if (!project.empty()) body["project_id"] = project;
      r = call(svc, "POST", "/projects", body);
      if (r.status != 201) return fail(r);
      if (!as_json) {
        const auto& st = r.body["stats"];
        std::cout << r.body["project_id"].get<std::string>() << ": " << st["documents"] << " documents, " << st["sentences"]
                  << " sentences, " << st["tokens"] << " tokens\n";
        return 0;
      }
    } else if (train->parsed()) {
      json body = json::object();
      if (!gold_path.empty()) body["gold_path"] = gold_path;
      if (threads > 0) body["hyper"]["threads"] = threads;
      if (dim > 0) body["hyper"]["dim"] = dim;
      if (epochs > 0) body["hyper"]["epochs"] = epochs;
      if (seed >= 0) body["hyper"]["seed"] = seed;
      r = call(svc, "POST", "/projects/" + project + "/train", body);
      if (r.status != 202) return fail(r);
      const std::string job = r.body["job_id"];
      std::string last;
      for (;;) {
        const auto st = call(svc, "GET", "/jobs/" + job).body;
        const std::string line = st["stage"].get<std::string>() + " " + st["detail"].get<std::string>();
        if (line != last && !as_json) std::cerr << "  " << line << '\n';
        last = line;
        if (st["state"] != "running") break;
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
      }
      r.body = svc.wait_for_job(job);
      if (r.body["state"] != "ready") {
        std::cerr << "training failed in stage " << r.body.value("failed_stage", "?") << ": " << r.body.value("error", "") << '\n';
        return 5;
      }
      if (!as_json) {
        for (const auto& w : r.body["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
        std::cout << project << ": ready\n";
        return 0;
      }
    } else if (terms->parsed()) {
      r = call(svc, "GET", "/projects/" + project + "/terms", nullptr,
               {{"filter", filter}, {"limit", std::to_string(limit)}, {"offset", std::to_string(offset)}});
      if (r.status != 200) return fail(r);
      if (!as_json) {
        for (const auto& row : r.body["rows"]) {
          std::cout << std::left << std::setw(8) << row["group_id"].get<int>() << std::setw(12) << std::fixed << std::setprecision(3)
                    << row["tfidf"].get<double>() << row["display_name"].get<std::string>();
          if (row["is_multi"].get<bool>()) std::cout << "  {" << text::join(row["members"].get<std::vector<std::string>>(), ", ") << "}";
          std::cout << '\n';
        }
        return 0;
      }
    } else if (contexts->parsed()) {
      if (gid < 0 && !term.empty()) gid = resolve(svc, project, term).value_or(-1);
      r = call(svc, "GET", "/projects/" + project + "/terms/" + std::to_string(gid) + "/contexts", nullptr,
               {{"max", std::to_string(max_snippets)}});
      if (r.status != 200) return fail(r);
      if (!as_json) {
        for (const auto& s : r.body["snippets"])
          std::cout << s["doc_id"].get<std::string>() << ':' << s["sent_index"] << "  " << s["text"].get<std::string>() << '\n';
        return 0;
      }
    } else if (exclude->parsed()) {
      r = call(svc, "PUT", "/projects/" + project + "/terms/" + std::to_string(gid) + "/exclusions", {{"members", split_list(members)}});
      if (r.status != 200) return fail(r);
    } else if (expand_cmd->parsed()) {
      json body = {{"k", k}, {"overwrite", overwrite}};
      if (!category.empty()) body["category_name"] = category;
      if (threshold) body["threshold"] = *threshold;
      if (!seeds.empty()) body["seeds"] = split_list(seeds);
      if (!gids.empty()) {
        std::vector<int> ids;
        for (const auto& g : split_list(gids)) ids.push_back(std::stoi(g));
        body["seed_gids"] = ids;
      }
      r = call(svc, "POST", "/projects/" + project + "/expand", body);
      if (r.status != 200) return fail(r);
      if (!as_json) {
        print_expansion(r.body);
        return 0;
      }
    } else if (validate_cmd->parsed()) {
      if (gid < 0 && !term.empty()) gid = resolve(svc, project, term).value_or(-1);
      r = call(svc, "POST", "/projects/" + project + "/categories/" + category + "/validate", {{"gid", gid}, {"completed", !undo}});
      if (r.status != 200) return fail(r);
      if (!as_json) {
        print_expansion(r.body);
        return 0;
      }
    } else if (reexpand_cmd->parsed()) {
      r = call(svc, "POST", "/projects/" + project + "/categories/" + category + "/reexpand", {{"validated_only", !all}});
      if (r.status != 200) return fail(r);
      if (!as_json) {
        print_expansion(r.body);
        return 0;
      }
    } else if (categories->parsed()) {
      r = category.empty() ? call(svc, "GET", "/projects/" + project + "/categories")
                           : call(svc, "GET", "/projects/" + project + "/categories/" + category);
      if (r.status != 200) return fail(r);
      if (!as_json) {
        if (category.empty()) {
          for (const auto& n : r.body["categories"]) std::cout << n.get<std::string>() << '\n';
        } else {
          print_expansion(r.body);
        }
        return 0;
      }
    } else if (eval->parsed()) {
      if (seed_size > 0) min_seeds = max_seeds = seed_size;
      r = call(svc, "POST", "/projects/" + project + "/eval",
               {{"gold_path", gold_path}, {"queries_per_class", queries}, {"min_seeds", min_seeds}, {"max_seeds", max_seeds}});
      if (r.status != 200) return fail(r);
      const std::string report = r.body["text"];
      r.body.erase("text");
      if (!out_prefix.empty()) {
        std::ofstream(out_prefix + ".txt") << report;
        std::ofstream(out_prefix + ".json") << r.body.dump(2) << '\n';
      }
      if (!as_json) {
        std::cout << report;
        return 0;
      }
    } else if (projects->parsed()) {
      r = call(svc, "GET", "/projects");
      if (!as_json) {
        for (const auto& p : r.body["projects"]) std::cout << p.get<std::string>() << '\n';
        return 0;
      }
    } else if (status->parsed()) {
      r = call(svc, "GET", "/projects/" + project);
      if (r.status != 200) return fail(r);
    }
    std::cout << r.body.dump(2) << '\n';
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return 2;
  }
  return 0;
}
