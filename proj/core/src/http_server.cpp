#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "poleplan/service.hpp"

namespace poleplan::service {

struct HttpServer::Impl {
  JobManager& jobs;
  httplib::Server server;
  std::thread thread;

  explicit Impl(JobManager& j) : jobs(j) {
    // The library default sets SO_REUSEPORT, which lets a second server
    // silently share a busy port. Plain SO_REUSEADDR makes bind fail.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    routes();
  }

  static void reply(httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});

    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
    });
    server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      reply(res, jobs.health());
    });
    server.Post("/api/plans", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, jobs.submit(req.body));
    });
    server.Get(R"(/api/plans/([A-Za-z0-9_-]+))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 reply(res, jobs.status(req.matches[1].str()));
               });
    server.Get(R"(/api/plans/([A-Za-z0-9_-]+)/result)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 reply(res, jobs.result(req.matches[1].str()));
               });
    server.Delete(R"(/api/plans/([A-Za-z0-9_-]+))",
                  [this](const httplib::Request& req, httplib::Response& res) {
                    reply(res, jobs.cancel(req.matches[1].str()));
                  });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        res.set_content(R"({"error":"not found"})", "application/json");
      }
    });
    server.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
          std::string msg = "internal error";
          try {
            std::rethrow_exception(ep);
          } catch (const std::exception& e) {
            msg = e.what();
          } catch (...) {
          }
          res.status = 500;
          res.set_content(nlohmann::json{{"error", msg}}.dump(), "application/json");
        });
  }
};

HttpServer::HttpServer(JobManager& jobs) : impl_(std::make_unique<Impl>(jobs)) {}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string& host, int port) {
  return impl_->server.bind_to_port(host, port);
}

int HttpServer::bind_any(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace poleplan::service
