#pragma once

#include <atomic>
#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "netzoo/coordinator.hpp"
#include "netzoo/presets.hpp"
#include "netzoo/serialize.hpp"
#include "netzoo/trainer.hpp"

namespace netzoo {

struct WorkerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string worker_id = "worker";
  int slots = 1;
  double poll_interval_s = 1.0;
  bool exit_when_idle = false;  // stop once the queue drains (batch mode)
};

struct WorkerReport {
  int fetched = 0;
  int accepted = 0;
  int rejected = 0;
  int errors = 0;
};

namespace detail {

// Train the unit locally from its seeds and submit. Traces are regenerated
// client-side from the unit's seeds instead of being downloaded.
inline bool process_unit(httplib::Client& client, const json& unit_json,
                         const std::string& worker_id, WorkerReport& report) {
  auto preset = require_preset(unit_json.at("preset").get<std::string>());
  TraceSource src = parse_source_id(unit_json.at("source").get<std::string>());
  auto spec = preset_trace_spec(preset, src, unit_json.at("trace_seed").get<std::uint64_t>());
  auto traces = build_trace_set(spec);

  TrainingConfig cfg = preset.training;
  cfg.seed = unit_json.at("train_seed").get<std::uint64_t>();
  auto rec = train<float>(preset.arch, traces, cfg);
  rec.work_unit_id = unit_json.at("id").get<std::string>();

  json body = {{"work_unit_id", rec.work_unit_id},
               {"worker", worker_id},
               {"weights", params_to_json(rec.params)},
               {"metadata", record_summary_json(rec)}};
  auto res = client.Post("/result", body.dump(), "application/json");
  if (!res || res->status != 200) {
    ++report.errors;
    return false;
  }
  json reply = json::parse(res->body);
  if (reply.value("accepted", false))
    ++report.accepted;
  else
    ++report.rejected;
  return true;
}

}  // namespace detail

// Fetch/train/submit loop. Honors `stop` between jobs; network failures are
// retried with exponential backoff (base 1s, cap 60s).
inline WorkerReport run_worker(const WorkerConfig& cfg, std::atomic<bool>& stop) {
  WorkerReport total;
  std::mutex report_mu;
  std::vector<std::thread> threads;
  for (int slot = 0; slot < std::max(1, cfg.slots); ++slot) {
    threads.emplace_back([&, slot] {
      httplib::Client client(cfg.host, cfg.port);
      client.set_read_timeout(600, 0);
      WorkerReport report;
      double backoff = 1.0;
      while (!stop.load()) {
        auto res = client.Get("/work?worker=" + cfg.worker_id + "-" + std::to_string(slot));
        if (!res) {
          ++report.errors;
          std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
          backoff = std::min(backoff * 2.0, 60.0);
          continue;
        }
        backoff = 1.0;
        if (res->status == 204) {
          if (cfg.exit_when_idle) break;
          std::this_thread::sleep_for(std::chrono::duration<double>(cfg.poll_interval_s));
          continue;
        }
        if (res->status != 200) {
          ++report.errors;
          continue;
        }
        ++report.fetched;
        try {
          detail::process_unit(client, json::parse(res->body), cfg.worker_id, report);
        } catch (const std::exception&) {
          ++report.errors;
        }
      }
      std::lock_guard lock(report_mu);
      total.fetched += report.fetched;
      total.accepted += report.accepted;
      total.rejected += report.rejected;
      total.errors += report.errors;
    });
  }
  for (auto& t : threads) t.join();
  return total;
}

}  // namespace netzoo
