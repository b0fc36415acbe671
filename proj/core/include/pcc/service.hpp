#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "pcc/runner.hpp"

namespace pcc {

struct ServiceOptions {
  std::filesystem::path base_dir = ".";  // for file cohorts
  std::size_t workers = 2;               // concurrent jobs
  std::size_t job_threads = 1;           // threads inside one job
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Job store plus worker pool. `handle` is the whole HTTP surface, so tests
/// can drive it without sockets; `listen` serves it over cpp-httplib.
///
///   POST   /cohorts                 CSV body -> {id, summary}
///   POST   /jobs                    {kind, config} -> {id, seed, status}
///   GET    /jobs/{id}               status, progress, seed, error
///   GET    /jobs/{id}/result        result.json bytes (done jobs only)
///   GET    /jobs/{id}/artifacts/{name}
///   DELETE /jobs/{id}               cancel
class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ApiResponse handle(const std::string& method, const std::string& path, const std::string& body);

  /// Blocks serving HTTP until stop(). Returns false if the bind fails.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and serves on a background thread; returns the port or -1.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

  /// Blocks until the job leaves queued/running or the timeout passes.
  bool wait(const std::string& job_id, double timeout_seconds);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pcc
