#pragma once

#include <memory>
#include <string>
#include <thread>

#include <httplib.h>

#include "netzoo/coordinator.hpp"

namespace netzoo {

// JSON-over-HTTP face of the coordinator:
//   GET  /work?worker=ID  -> 200 {unit}       when a unit is available
//                            204               when the queue is empty
//   POST /result          -> 200 {accepted, reason, eval_loss, ...}
//        body: {work_unit_id, worker, weights, metadata}
//   GET  /status          -> 200 {total, by_status, by_source, archive_size}
class CoordinatorServer {
 public:
  explicit CoordinatorServer(Coordinator& coord) : coord_(coord) {
    server_.Get("/work", [this](const httplib::Request& req, httplib::Response& res) {
      std::string worker = req.get_param_value("worker");
      if (worker.empty()) worker = "anonymous";
      auto unit = coord_.assign_work(worker);
      if (!unit) {
        res.status = 204;
        return;
      }
      res.set_content(work_unit_to_json(*unit).dump(), "application/json");
    });

    server_.Post("/result", [this](const httplib::Request& req, httplib::Response& res) {
      json reply;
      try {
        json body = json::parse(req.body);
        auto r = coord_.submit_result(body.at("work_unit_id").get<std::string>(),
                                      body.value("worker", "anonymous"),
                                      body.at("weights"),
                                      body.value("metadata", json::object()));
        reply = {{"accepted", r.accepted},
                 {"reason", r.reason},
                 {"eval_loss", r.eval_loss},
                 {"pathological_loss", r.pathological_loss}};
      } catch (const std::exception& e) {
        res.status = 400;
        reply = {{"accepted", false}, {"reason", std::string("bad-request: ") + e.what()}};
      }
      res.set_content(reply.dump(), "application/json");
    });

    server_.Get("/status", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(coord_.status().dump(), "application/json");
    });
  }

  // Binds to an OS-assigned port and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    if (port == 0) {
      port_ = server_.bind_to_any_port(host);
    } else {
      server_.bind_to_port(host, port);
      port_ = port;
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  // Blocking serve (CLI entry point).
  bool listen(const std::string& host, int port) {
    return server_.listen(host, port);
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  ~CoordinatorServer() { stop(); }

 private:
  Coordinator& coord_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace netzoo
