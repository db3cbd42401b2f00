#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace poleplan::service {

enum class JobState { queued, running, done, failed, cancelled };

std::string_view to_string(JobState s) noexcept;
bool is_terminal(JobState s) noexcept;

struct Progress {
  std::size_t generation = 0;
  double best_cov = 0.0;
  std::size_t best_size = 0;
};

struct ServiceConfig {
  std::size_t workers = 1;
  std::size_t max_queue = 16;
  std::optional<std::filesystem::path> results_dir;
};

// Transport-neutral reply: HTTP status plus JSON body.
struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// In-memory job store plus a bounded worker pool. All public methods are
// safe to call concurrently.
class JobManager {
 public:
  explicit JobManager(ServiceConfig config = {});
  ~JobManager();

  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  Response submit(std::string_view body);               // 202 {job_id}
  Response status(std::string_view id) const;           // 200 status document
  Response result(std::string_view id) const;           // 200 GeoJSON / 409
  Response cancel(std::string_view id);                 // 202
  Response health() const;                              // 200 {"status":"ok"}

  std::optional<JobState> state(std::string_view id) const;
  std::optional<Progress> progress(std::string_view id) const;

  // Blocks until the job is terminal or the timeout expires.
  bool wait_terminal(std::string_view id, std::chrono::milliseconds timeout) const;

  std::size_t max_running_observed() const;
  const ServiceConfig& config() const noexcept { return config_; }

  // Cancels running work and joins the workers. Idempotent.
  void shutdown();

 private:
  struct Job;

  void worker_loop(std::stop_token stop);
  void execute(const std::shared_ptr<Job>& job);
  void persist(const Job& job) const;
  void load_persisted();
  std::shared_ptr<Job> find(std::string_view id) const;
  std::string new_id();

  ServiceConfig config_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;          // queue and state changes
  std::map<std::string, std::shared_ptr<Job>, std::less<>> jobs_;
  std::deque<std::shared_ptr<Job>> queue_;
  std::size_t running_ = 0;
  std::size_t max_running_ = 0;
  std::size_t live_workers_ = 0;
  std::uint64_t id_counter_ = 0;
  std::uint64_t id_salt_ = 0;
  bool stopping_ = false;
  std::vector<std::jthread> workers_;           // last member: joins first
};

// HTTP/1.1 front end over a JobManager.
//
//   POST   /api/plans               submit
//   GET    /api/plans/{id}          status
//   GET    /api/plans/{id}/result   GeoJSON result
//   DELETE /api/plans/{id}          cancel
//   GET    /healthz
class HttpServer {
 public:
  explicit HttpServer(JobManager& jobs);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // False when the address is unavailable (e.g. port in use).
  bool bind(const std::string& host, int port);
  // Binds an ephemeral port and returns it, or -1.
  int bind_any(const std::string& host);

  // Serves on the calling thread until stop().
  void serve();
  // Serves on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace poleplan::service
