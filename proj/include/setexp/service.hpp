#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "setexp/error.hpp"
#include "setexp/pipeline.hpp"

namespace httplib {
class Server;
}

namespace setexp {

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::map<std::string, std::string> headers;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

int http_status(ErrorKind kind);

// Projects live under <store>/projects/<id>/ with corpus.cache, engine/ and
// categories/. State is reloaded lazily, so several processes can share a store
// as long as only one of them trains a given project at a time.
class Service {
 public:
  explicit Service(std::filesystem::path store, PipelineConfig defaults = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Response handle(const Request& request);
  void bind(httplib::Server& server);

  // Blocks until the job leaves the running state; returns its final JSON.
  nlohmann::json wait_for_job(const std::string& job_id);

  const std::filesystem::path& store() const noexcept { return store_; }

 private:
  struct Job;
  struct Project;

  Response dispatch(const Request& request);
  Response create_project(const nlohmann::json& body);
  Response list_projects();
  Response project_status(const std::string& id);
  Response start_training(const std::string& id, const nlohmann::json& body);
  Response job_status(const std::string& job_id);
  Response list_terms(const std::string& id, const Request& request);
  Response term_contexts(const std::string& id, GroupId gid, const Request& request);
  Response set_exclusions(const std::string& id, GroupId gid, const nlohmann::json& body);
  Response expand_seeds(const std::string& id, const nlohmann::json& body);
  Response validate(const std::string& id, const std::string& name, const nlohmann::json& body);
  Response reexpand_category(const std::string& id, const std::string& name, const nlohmann::json& body);
  Response list_categories(const std::string& id);
  Response get_category(const std::string& id, const std::string& name);
  Response evaluate(const std::string& id, const nlohmann::json& body);

  std::shared_ptr<Project> project(const std::string& id);
  std::shared_ptr<const Engine> ready_engine(Project& p);
  nlohmann::json category_json(const Engine& engine, const Category& category) const;
  std::filesystem::path project_dir(const std::string& id) const;

  std::filesystem::path store_;
  PipelineConfig defaults_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Project>> projects_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::size_t next_job_ = 1;
  std::mutex idempotency_mutex_;
  std::map<std::string, std::pair<std::string, Response>> idempotency_;
  std::vector<std::thread> workers_;
};

}  // namespace setexp
