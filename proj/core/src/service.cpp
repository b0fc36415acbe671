#include "pcc/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "pcc/cohort_io.hpp"
#include "pcc/errors.hpp"

namespace pcc {

namespace {

enum class JobStatus { queued, running, done, failed };

const char* to_string(JobStatus s) {
  switch (s) {
    case JobStatus::queued: return "queued";
    case JobStatus::running: return "running";
    case JobStatus::done: return "done";
    case JobStatus::failed: return "failed";
  }
  return "failed";
}

struct Job {
  std::string id;
  std::string kind;     // SURFACE, POWER, COMPARE
  std::string command;  // surface, power, compare
  Json config;          // effective
  Seed seed = 0;
  JobStatus status = JobStatus::queued;
  std::string error;
  bool flagged = false;
  std::vector<std::string> notes;
  std::atomic<bool> cancel{false};
  std::atomic<std::uint64_t> progress_done{0};
  std::atomic<std::uint64_t> progress_total{0};
  // Set once, together with status = done.
  std::string result;
  std::vector<Artifact> artifacts;
};

ApiResponse json_response(int status, const Json& j) { return {status, j.dump(2) + "\n", "application/json"}; }

ApiResponse error_response(int status, const std::string& message, const std::string& field = {}) {
  Json j;
  j["error"] = message;
  Json errors = Json::array();
  Json e;
  e["field"] = field;
  e["message"] = message;
  errors.push_back(std::move(e));
  j["errors"] = std::move(errors);
  return json_response(status, j);
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  const std::string clean = path.substr(0, path.find('?'));
  for (char ch : clean) {
    if (ch == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

std::optional<std::string> command_for_kind(std::string kind) {
  std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (kind == "SURFACE") return "surface";
  if (kind == "POWER") return "power";
  if (kind == "COMPARE") return "compare";
  return std::nullopt;
}

void collect_handles(const Json& config, std::vector<std::pair<std::string, std::string>>& out) {
  auto visit = [&](const Json& c, const std::string& field) {
    if (c.is_object() && c.value("kind", "") == "handle" && c.contains("id") && c["id"].is_string()) {
      out.emplace_back(field, c["id"].get<std::string>());
    }
  };
  if (config.contains("cohort")) visit(config["cohort"], "cohort.id");
  if (config.contains("cohorts") && config["cohorts"].is_array()) {
    for (std::size_t i = 0; i < config["cohorts"].size(); ++i) {
      visit(config["cohorts"][i], "cohorts[" + std::to_string(i) + "].id");
    }
  }
}

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  std::mutex mu;
  std::condition_variable queue_cv;
  std::condition_variable done_cv;
  std::map<std::string, std::shared_ptr<Job>> jobs;
  std::map<std::string, CohortPtr> cohorts;
  std::deque<std::shared_ptr<Job>> queue;
  std::vector<std::thread> workers;
  bool stopping = false;
  std::mt19937_64 ids{std::random_device{}()};
  httplib::Server server;
  std::thread server_thread;

  explicit Impl(ServiceOptions o) : options(std::move(o)) {
    const std::size_t count = std::max<std::size_t>(1, options.workers);
    for (std::size_t i = 0; i < count; ++i) workers.emplace_back([this] { work(); });
    install_routes();
  }

  ~Impl() {
    {
      std::lock_guard lock(mu);
      stopping = true;
      for (auto& [id, job] : jobs) job->cancel = true;
    }
    queue_cv.notify_all();
    server.stop();
    if (server_thread.joinable()) server_thread.join();
    for (std::thread& t : workers) t.join();
  }

  // Caller holds mu.
  std::string new_id(const char* prefix) {
    std::ostringstream s;
    s << prefix << std::hex;
    s.width(16);
    s.fill('0');
    s << ids();
    return s.str();
  }

  CohortPtr find_cohort(const std::string& id) {
    std::lock_guard lock(mu);
    auto it = cohorts.find(id);
    return it == cohorts.end() ? nullptr : it->second;
  }

  void work() {
    const CohortResolver resolve =
        make_cohort_resolver(options.base_dir, [this](const std::string& id) { return find_cohort(id); });
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock lock(mu);
        queue_cv.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        job = queue.front();
        queue.pop_front();
        if (job->status != JobStatus::queued) continue;  // cancelled while queued
        job->status = JobStatus::running;
      }
      ExecutionContext ctx;
      ctx.threads = options.job_threads;
      ctx.cancel = &job->cancel;
      ctx.progress = [job](std::size_t done, std::size_t total) {
        job->progress_total.store(total);
        std::uint64_t prev = job->progress_done.load();
        while (prev < done && !job->progress_done.compare_exchange_weak(prev, done)) {
        }
      };
      ctx = with_threads(ctx, job->config);
      std::optional<RunOutput> out;
      std::string error;
      try {
        out = run_command(job->command, job->config, resolve, ctx);
      } catch (const Cancelled&) {
        error = "cancelled";
      } catch (const std::exception& e) {
        error = e.what();
      }
      {
        std::lock_guard lock(mu);
        if (job->cancel.load()) {
          job->status = JobStatus::failed;
          job->error = "cancelled";
        } else if (out) {
          job->result = result_bytes(out->result);
          job->artifacts = std::move(out->artifacts);
          job->flagged = out->flagged;
          job->notes = std::move(out->notes);
          job->status = JobStatus::done;
        } else {
          job->status = JobStatus::failed;
          job->error = error;
        }
      }
      done_cv.notify_all();
    }
  }

  Json job_json(const Job& job) {
    Json j;
    j["id"] = job.id;
    j["kind"] = job.kind;
    j["status"] = to_string(job.status);
    const std::uint64_t total = job.progress_total.load();
    double progress = total == 0 ? 0.0 : static_cast<double>(job.progress_done.load()) / static_cast<double>(total);
    if (job.status == JobStatus::done) progress = 1.0;
    j["progress"] = std::min(progress, 1.0);
    j["seed"] = job.seed;
    if (job.status == JobStatus::failed) j["error"] = job.error;
    if (job.status == JobStatus::done) {
      j["flagged"] = job.flagged;
      j["notes"] = job.notes;
      Json names = Json::array();
      for (const Artifact& a : job.artifacts) names.push_back(a.name);
      j["artifacts"] = std::move(names);
    }
    return j;
  }

  ApiResponse upload(const std::string& body) {
    if (body.empty()) return error_response(400, "empty upload", "file");
    std::istringstream in(body);
    Cohort cohort;
    try {
      cohort = read_cohort_csv(in);
    } catch (const InputError& e) {
      return error_response(400, e.what(), "file");
    }
    if (cohort.size() == 0) return error_response(400, "no data rows", "file");
    const ScoreSummary summary = summarize_scores(cohort);
    std::string id;
    {
      std::lock_guard lock(mu);
      id = new_id("c");
      cohorts[id] = std::make_shared<const Cohort>(std::move(cohort));
    }
    Json j;
    j["id"] = id;
    j["summary"] = to_json(summary);
    return json_response(201, j);
  }

  ApiResponse submit(const std::string& body) {
    Json req;
    try {
      req = parse_json_text(body, "request");
    } catch (const ConfigError& e) {
      return error_response(400, e.what(), e.field());
    }
    if (!req.is_object()) return error_response(400, "request must be a JSON object");
    if (!req.contains("kind") || !req["kind"].is_string()) return error_response(400, "required string", "kind");
    const auto command = command_for_kind(req["kind"].get<std::string>());
    if (!command) return error_response(400, "expected one of SURFACE, POWER, COMPARE", "kind");
    if (!req.contains("config")) return error_response(400, "required", "config");
    for (const auto& [key, value] : req.items()) {
      if (key != "kind" && key != "config") return error_response(400, "unknown field", key);
    }
    Seed fallback;
    {
      std::lock_guard lock(mu);
      fallback = ids();
    }
    Json eff;
    try {
      eff = prepare_config(*command, req["config"], std::nullopt, fallback);
    } catch (const ConfigError& e) {
      return error_response(400, e.what(), e.field().empty() ? "config" : "config." + e.field());
    } catch (const InputError& e) {
      return error_response(400, e.what(), "config");
    }
    std::vector<std::pair<std::string, std::string>> handles;
    collect_handles(eff, handles);
    auto job = std::make_shared<Job>();
    {
      std::lock_guard lock(mu);
      for (const auto& [field, handle] : handles) {
        if (cohorts.find(handle) == cohorts.end()) {
          return error_response(400, "unknown cohort handle '" + handle + "'", "config." + field);
        }
      }
      job->id = new_id("j");
      job->kind = req["kind"].get<std::string>();
      std::transform(job->kind.begin(), job->kind.end(), job->kind.begin(),
                     [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
      job->command = *command;
      job->config = eff;
      job->seed = eff.at("seed").get<Seed>();
      jobs[job->id] = job;
      queue.push_back(job);
    }
    queue_cv.notify_one();
    Json j;
    j["id"] = job->id;
    j["kind"] = job->kind;
    j["status"] = "queued";
    j["seed"] = job->seed;
    j["config"] = eff;
    return json_response(202, j);
  }

  std::shared_ptr<Job> find_job(const std::string& id) {
    auto it = jobs.find(id);
    return it == jobs.end() ? nullptr : it->second;
  }

  ApiResponse get_job(const std::string& id) {
    std::lock_guard lock(mu);
    auto job = find_job(id);
    if (!job) return error_response(404, "unknown job '" + id + "'", "id");
    return json_response(200, job_json(*job));
  }

  ApiResponse get_result(const std::string& id) {
    std::lock_guard lock(mu);
    auto job = find_job(id);
    if (!job) return error_response(404, "unknown job '" + id + "'", "id");
    if (job->status == JobStatus::failed) return error_response(409, "job failed: " + job->error, "id");
    if (job->status != JobStatus::done) return error_response(409, std::string("job is ") + to_string(job->status), "id");
    return {200, job->result, "application/json"};
  }

  ApiResponse get_artifact(const std::string& id, const std::string& name) {
    std::lock_guard lock(mu);
    auto job = find_job(id);
    if (!job) return error_response(404, "unknown job '" + id + "'", "id");
    if (job->status != JobStatus::done) return error_response(409, std::string("job is ") + to_string(job->status), "id");
    for (const Artifact& a : job->artifacts) {
      if (a.name == name) {
        const bool csv = name.size() > 4 && name.substr(name.size() - 4) == ".csv";
        return {200, a.content, csv ? "text/csv" : "application/octet-stream"};
      }
    }
    return error_response(404, "unknown artifact '" + name + "'", "name");
  }

  ApiResponse cancel(const std::string& id) {
    std::shared_ptr<Job> job;
    {
      std::lock_guard lock(mu);
      job = find_job(id);
      if (!job) return error_response(404, "unknown job '" + id + "'", "id");
      if (job->status == JobStatus::done || job->status == JobStatus::failed) {
        return error_response(409, std::string("job already ") + to_string(job->status), "id");
      }
      job->cancel = true;
      if (job->status == JobStatus::queued) {
        job->status = JobStatus::failed;
        job->error = "cancelled";
      }
    }
    done_cv.notify_all();
    std::lock_guard lock(mu);
    Json j = job_json(*job);
    j["cancel_requested"] = true;
    return json_response(202, j);
  }

  ApiResponse route(const std::string& method, const std::string& path, const std::string& body) {
    const std::vector<std::string> parts = split_path(path);
    if (parts.size() == 1 && parts[0] == "cohorts") {
      if (method == "POST") return upload(body);
      return error_response(405, "method not allowed");
    }
    if (!parts.empty() && parts[0] == "jobs") {
      if (parts.size() == 1) {
        if (method == "POST") return submit(body);
        return error_response(405, "method not allowed");
      }
      if (parts.size() == 2) {
        if (method == "GET") return get_job(parts[1]);
        if (method == "DELETE") return cancel(parts[1]);
        return error_response(405, "method not allowed");
      }
      if (parts.size() == 3 && parts[2] == "result" && method == "GET") return get_result(parts[1]);
      if (parts.size() == 4 && parts[2] == "artifacts" && method == "GET") return get_artifact(parts[1], parts[3]);
    }
    if (parts.size() == 1 && parts[0] == "health" && method == "GET") {
      return json_response(200, Json{{"status", "ok"}});
    }
    return error_response(404, "no route for " + method + " " + path);
  }

  void install_routes() {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
      const ApiResponse r = route(req.method, req.path, req.body);
      res.status = r.status;
      res.set_content(r.body, r.content_type.c_str());
    };
    server.Get(R"(/.*)", forward);
    server.Post(R"(/.*)", forward);
    server.Delete(R"(/.*)", forward);
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() = default;

ApiResponse Service::handle(const std::string& method, const std::string& path, const std::string& body) {
  return impl_->route(method, path, body);
}

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int Service::start_background(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port < 0) return -1;
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void Service::stop() {
  impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

bool Service::wait(const std::string& job_id, double timeout_seconds) {
  std::unique_lock lock(impl_->mu);
  auto job = impl_->find_job(job_id);
  if (!job) return false;
  return impl_->done_cv.wait_for(lock, std::chrono::duration<double>(timeout_seconds), [&] {
    return job->status == JobStatus::done || job->status == JobStatus::failed;
  });
}

}  // namespace pcc
