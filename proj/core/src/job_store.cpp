#include <chrono>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "poleplan/pipeline.hpp"
#include "poleplan/plan_request.hpp"
#include "poleplan/service.hpp"

namespace poleplan::service {

using json = nlohmann::json;
using Clock = std::chrono::system_clock;

struct JobManager::Job {
  std::string id;
  JobState state = JobState::queued;
  Progress progress;
  Clock::time_point submitted_at;
  std::optional<Clock::time_point> started_at;
  std::optional<Clock::time_point> finished_at;
  std::optional<PlanRequest> request;  // empty for jobs restored from disk
  std::string result_body;
  std::string error;
  std::stop_source stop;
};

namespace {

std::string iso8601(Clock::time_point t) {
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms % 1000));
  return buf;
}

std::optional<Clock::time_point> parse_iso8601(const std::string& s) {
  std::tm tm{};
  int millis = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ", &tm.tm_year, &tm.tm_mon,
                  &tm.tm_mday, &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &millis) != 7) {
    return std::nullopt;
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  return Clock::from_time_t(timegm(&tm)) + std::chrono::milliseconds(millis);
}

Response json_response(int status, const json& body) {
  return Response{status, body.dump(), "application/json"};
}

Response error_response(int status, const std::string& message) {
  return json_response(status, json{{"error", message}});
}

JobState state_from(std::string_view s) {
  if (s == "done") return JobState::done;
  if (s == "failed") return JobState::failed;
  if (s == "cancelled") return JobState::cancelled;
  if (s == "running") return JobState::running;
  return JobState::queued;
}

}  // namespace

std::string_view to_string(JobState s) noexcept {
  switch (s) {
    case JobState::queued:
      return "queued";
    case JobState::running:
      return "running";
    case JobState::done:
      return "done";
    case JobState::failed:
      return "failed";
    case JobState::cancelled:
      return "cancelled";
  }
  return "unknown";
}

bool is_terminal(JobState s) noexcept {
  return s == JobState::done || s == JobState::failed || s == JobState::cancelled;
}

JobManager::JobManager(ServiceConfig config) : config_(std::move(config)) {
  if (config_.workers == 0) config_.workers = 1;
  id_salt_ = std::random_device{}();
  id_salt_ = (id_salt_ << 32) ^ std::random_device{}();
  if (config_.results_dir) {
    std::filesystem::create_directories(*config_.results_dir);
    load_persisted();
  }
  live_workers_ = config_.workers;
  for (std::size_t i = 0; i < config_.workers; ++i) {
    workers_.emplace_back([this](std::stop_token st) { worker_loop(st); });
  }
}

JobManager::~JobManager() { shutdown(); }

void JobManager::shutdown() {
  {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    stopping_ = true;
    for (auto& [_, job] : jobs_) {
      if (job->state == JobState::running) job->stop.request_stop();
    }
  }
  cv_.notify_all();
  for (auto& w : workers_) w.request_stop();
  workers_.clear();  // joins
}

std::string JobManager::new_id() {
  // Caller holds mu_.
  std::mt19937_64 mix(id_salt_ ^ (++id_counter_ * 0x9E3779B97F4A7C15ULL));
  char buf[40];
  std::snprintf(buf, sizeof(buf), "job-%06llu-%012llx",
                static_cast<unsigned long long>(id_counter_),
                static_cast<unsigned long long>(mix() & 0xFFFFFFFFFFFFULL));
  return buf;
}

std::shared_ptr<JobManager::Job> JobManager::find(std::string_view id) const {
  auto it = jobs_.find(id);
  return it == jobs_.end() ? nullptr : it->second;
}

Response JobManager::submit(std::string_view body) {
  PlanRequest req;
  try {
    req = parse_plan_request(body);
  } catch (const RequestRejected& e) {
    return error_response(e.status(), e.what());
  } catch (const Error& e) {
    return error_response(400, e.what());
  }

  std::string id;
  {
    std::lock_guard lock(mu_);
    if (stopping_) return error_response(503, "service is shutting down");
    if (queue_.size() >= config_.max_queue) return error_response(503, "queue full");
    auto job = std::make_shared<Job>();
    job->id = new_id();
    job->submitted_at = Clock::now();
    job->request = std::move(req);
    id = job->id;
    jobs_.emplace(id, job);
    queue_.push_back(std::move(job));
  }
  cv_.notify_all();
  return json_response(202, json{{"job_id", id}});
}

Response JobManager::status(std::string_view id) const {
  std::lock_guard lock(mu_);
  auto job = find(id);
  if (!job) return error_response(404, "unknown job id");
  json doc;
  doc["job_id"] = job->id;
  doc["state"] = to_string(job->state);
  doc["progress"] = {{"generation", job->progress.generation},
                     {"best_cov", job->progress.best_cov},
                     {"best_size", job->progress.best_size}};
  doc["submitted_at"] = iso8601(job->submitted_at);
  if (job->started_at) doc["started_at"] = iso8601(*job->started_at);
  if (job->finished_at) doc["finished_at"] = iso8601(*job->finished_at);
  if (!job->error.empty()) doc["error"] = job->error;
  return json_response(200, doc);
}

Response JobManager::result(std::string_view id) const {
  std::lock_guard lock(mu_);
  auto job = find(id);
  if (!job) return error_response(404, "unknown job id");
  if (job->state != JobState::done) {
    json body{{"error", "job not done"}, {"state", to_string(job->state)}};
    if (!job->error.empty()) body["detail"] = job->error;
    return json_response(409, body);
  }
  return Response{200, job->result_body, "application/geo+json"};
}

Response JobManager::cancel(std::string_view id) {
  json body;
  {
    std::lock_guard lock(mu_);
    auto job = find(id);
    if (!job) return error_response(404, "unknown job id");
    if (job->state == JobState::queued) {
      job->state = JobState::cancelled;
      job->finished_at = Clock::now();
      std::erase(queue_, job);
    } else if (job->state == JobState::running) {
      job->stop.request_stop();
    }
    body = {{"job_id", job->id}, {"state", to_string(job->state)}};
  }
  cv_.notify_all();
  return json_response(202, body);
}

Response JobManager::health() const {
  std::lock_guard lock(mu_);
  if (live_workers_ == 0 || stopping_) return error_response(503, "worker loop not running");
  return json_response(200, json{{"status", "ok"}});
}

std::optional<JobState> JobManager::state(std::string_view id) const {
  std::lock_guard lock(mu_);
  auto job = find(id);
  if (!job) return std::nullopt;
  return job->state;
}

std::optional<Progress> JobManager::progress(std::string_view id) const {
  std::lock_guard lock(mu_);
  auto job = find(id);
  if (!job) return std::nullopt;
  return job->progress;
}

bool JobManager::wait_terminal(std::string_view id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  auto job = find(id);
  if (!job) return false;
  return cv_.wait_for(lock, timeout, [&] { return is_terminal(job->state); });
}

std::size_t JobManager::max_running_observed() const {
  std::lock_guard lock(mu_);
  return max_running_;
}

void JobManager::worker_loop(std::stop_token stop) {
  for (;;) {
    std::shared_ptr<Job> job;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stopping_ || stop.stop_requested() || !queue_.empty(); });
      if (stopping_ || stop.stop_requested()) {
        --live_workers_;
        return;
      }
      job = std::move(queue_.front());
      queue_.pop_front();
      job->state = JobState::running;
      job->started_at = Clock::now();
      ++running_;
      max_running_ = std::max(max_running_, running_);
    }
    cv_.notify_all();
    execute(job);
    {
      std::lock_guard lock(mu_);
      --running_;
    }
    cv_.notify_all();
  }
}

void JobManager::execute(const std::shared_ptr<Job>& job) {
  std::string body;
  std::string error;
  bool cancelled = false;
  try {
    const PlanRequest& req = *job->request;
    const auto detections = req.detections();
    auto on_progress = [this, job](std::size_t gen, double cov, std::size_t size) {
      std::lock_guard lock(mu_);
      job->progress = Progress{gen, cov, size};
    };
    PlanOutcome outcome =
        run_pipeline(detections, req.settings, on_progress, job->stop.get_token());
    cancelled = outcome.result.cancelled || job->stop.stop_requested();
    if (!cancelled) body = plan_to_geojson(outcome, req.settings);
  } catch (const std::exception& e) {
    error = e.what();
  }

  std::lock_guard lock(mu_);
  job->finished_at = Clock::now();
  if (cancelled) {
    job->state = JobState::cancelled;
  } else if (!error.empty()) {
    job->state = JobState::failed;
    job->error = std::move(error);
  } else {
    job->state = JobState::done;
    job->result_body = std::move(body);
  }
  job->request.reset();
  if (config_.results_dir && job->state == JobState::done) persist(*job);
}

void JobManager::persist(const Job& job) const {
  json doc;
  doc["job_id"] = job.id;
  doc["state"] = to_string(job.state);
  doc["progress"] = {{"generation", job.progress.generation},
                     {"best_cov", job.progress.best_cov},
                     {"best_size", job.progress.best_size}};
  doc["submitted_at"] = iso8601(job.submitted_at);
  if (job.finished_at) doc["finished_at"] = iso8601(*job.finished_at);
  doc["result"] = job.result_body;
  const auto path = *config_.results_dir / (job.id + ".json");
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << doc.dump();
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
}

void JobManager::load_persisted() {
  for (const auto& entry : std::filesystem::directory_iterator(*config_.results_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("job_id") ||
        !doc.contains("result")) {
      continue;
    }
    auto job = std::make_shared<Job>();
    job->id = doc["job_id"].get<std::string>();
    job->state = state_from(doc.value("state", "done"));
    const auto& p = doc.value("progress", json::object());
    job->progress = Progress{p.value("generation", std::size_t{0}), p.value("best_cov", 0.0),
                             p.value("best_size", std::size_t{0})};
    job->submitted_at =
        parse_iso8601(doc.value("submitted_at", "")).value_or(Clock::now());
    job->finished_at = parse_iso8601(doc.value("finished_at", ""));
    job->result_body = doc["result"].get<std::string>();
    jobs_.emplace(job->id, std::move(job));
  }
}

}  // namespace poleplan::service
