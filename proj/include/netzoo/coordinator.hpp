#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "netzoo/presets.hpp"
#include "netzoo/serialize.hpp"
#include "netzoo/traces.hpp"
#include "netzoo/trainer.hpp"

namespace netzoo {

enum class UnitStatus { Pending, Assigned, Completed, Failed };

inline const char* unit_status_name(UnitStatus s) {
  switch (s) {
    case UnitStatus::Pending: return "pending";
    case UnitStatus::Assigned: return "assigned";
    case UnitStatus::Completed: return "completed";
    case UnitStatus::Failed: return "failed";
  }
  return "?";
}

// Source ids: machine kind names ("eightbit", "eightbit-mod", ...) or
// "automaton:<seed>" for generated automata at the default (16, 4, 14) shape.
inline TraceSource parse_source_id(const std::string& id) {
  if (id.starts_with("automaton:")) {
    auto seed = std::stoull(id.substr(10));
    return generate_automaton(seed);
  }
  auto kind = parse_machine_kind(id);
  if (!kind) throw std::invalid_argument("unknown source id: " + id);
  return *kind;
}

struct WorkUnit {
  std::string id;
  std::string source;
  std::string preset;
  std::uint64_t trace_seed = 0;
  std::uint64_t train_seed = 0;
  UnitStatus status = UnitStatus::Pending;
  std::string assigned_worker;
  double deadline_unix = 0;  // absolute wall-clock seconds
  int retries = 0;
  std::string failure_reason;
};

inline json work_unit_to_json(const WorkUnit& u) {
  return {{"id", u.id},
          {"source", u.source},
          {"preset", u.preset},
          {"trace_seed", u.trace_seed},
          {"train_seed", u.train_seed},
          {"status", unit_status_name(u.status)},
          {"worker", u.assigned_worker},
          {"deadline_unix", u.deadline_unix},
          {"retries", u.retries}};
}

struct SubmitResult {
  bool accepted = false;
  std::string reason;  // "archived" or a rejection reason
  double eval_loss = 0;
  double pathological_loss = 0;
};

// Work-unit queue with filesystem persistence. Units are snapshotted to
// units.json on every mutation; accepted models land under
// archive/<label>/<unit-id>.json with one manifest.jsonl line each.
class Coordinator {
 public:
  explicit Coordinator(std::string archive_dir, double deadline_s = 600,
                       int retry_cap = 3)
      : dir_(std::move(archive_dir)), deadline_s_(deadline_s), retry_cap_(retry_cap) {
    std::filesystem::create_directories(dir_);
    load();
  }

  std::vector<WorkUnit> create_batch(const std::string& source, int count,
                                     const std::string& preset,
                                     std::uint64_t batch_seed) {
    require_preset(preset);
    parse_source_id(source);  // validate early
    std::lock_guard lock(mu_);
    std::vector<WorkUnit> batch;
    for (int i = 0; i < count; ++i) {
      WorkUnit u;
      u.id = source + "-" + std::to_string(batch_seed) + "-" + std::to_string(i);
      if (units_.count(u.id))
        throw std::invalid_argument("duplicate work unit id: " + u.id);
      u.source = source;
      u.preset = preset;
      u.trace_seed = derive_seed(batch_seed, 2 * static_cast<std::uint64_t>(i));
      u.train_seed = derive_seed(batch_seed, 2 * static_cast<std::uint64_t>(i) + 1);
      batch.push_back(u);
    }
    for (const auto& u : batch) units_[u.id] = u;
    if (!batch.empty()) persist();
    return batch;
  }

  std::optional<WorkUnit> assign_work(const std::string& worker) {
    std::lock_guard lock(mu_);
    const double now = unix_now();
    for (auto& [id, u] : units_) {
      bool expired = u.status == UnitStatus::Assigned && u.deadline_unix < now;
      if (u.status == UnitStatus::Pending || expired) {
        u.status = UnitStatus::Assigned;
        u.assigned_worker = worker;
        u.deadline_unix = now + deadline_s_;
        persist();
        return u;
      }
    }
    return std::nullopt;
  }

  SubmitResult submit_result(const std::string& unit_id, const std::string& worker,
                             const json& weights_json, const json& metadata) {
    std::unique_lock lock(mu_);
    auto it = units_.find(unit_id);
    if (it == units_.end()) return {false, "unknown-unit", 0, 0};
    WorkUnit& u = it->second;
    if (u.status == UnitStatus::Completed) return {false, "already-completed", 0, 0};
    if (u.status == UnitStatus::Failed) return {false, "unit-failed", 0, 0};

    auto preset = require_preset(u.preset);
    ParameterSet<float> params;
    try {
      params = params_from_json<float>(weights_json);
    } catch (const std::exception& e) {
      return reject(u, std::string("unparseable-weights: ") + e.what());
    }
    if (!(params.arch == preset.arch)) return reject(u, "arch-mismatch");

    // Server-side re-evaluation on regenerated traces; the client's reported
    // loss is never trusted.
    TraceSource src = parse_source_id(u.source);
    auto spec = preset_trace_spec(preset, src, u.trace_seed);
    TraceSet traces;
    {
      // generation and evaluation can run outside the queue lock
      lock.unlock();
      traces = build_trace_set(spec);
      lock.lock();
    }
    if (u.status == UnitStatus::Completed) return {false, "already-completed", 0, 0};
    SubmitResult res;
    res.eval_loss = evaluate(params, src, traces.eval);
    if (!traces.eval_pathological.empty())
      res.pathological_loss = evaluate(params, src, traces.eval_pathological);

    const double threshold = preset.training.eval_threshold;
    if (!(res.eval_loss <= threshold))
      return reject(u, "eval-loss-exceeded", res);
    if (!traces.eval_pathological.empty() && !(res.pathological_loss <= threshold))
      return reject(u, "pathological-eval-loss-exceeded", res);

    // Accept: archive the model and complete the unit.
    std::string label = u.source;
    auto label_dir = std::filesystem::path(dir_) / "archive" / label;
    std::filesystem::create_directories(label_dir);
    auto model_path = label_dir / (u.id + ".json");
    write_json_file(model_path.string(), weights_json);

    json manifest_line = {{"unit", u.id},
                          {"label", label},
                          {"worker", worker},
                          {"eval_loss", res.eval_loss},
                          {"model", model_path.lexically_relative(dir_).string()},
                          {"metadata", metadata}};
    if (!traces.eval_pathological.empty())
      manifest_line["pathological_loss"] = res.pathological_loss;
    {
      std::ofstream manifest(std::filesystem::path(dir_) / "manifest.jsonl",
                             std::ios::app);
      manifest << manifest_line.dump() << '\n';
    }
    u.status = UnitStatus::Completed;
    ++archive_count_;
    persist();
    res.accepted = true;
    res.reason = "archived";
    return res;
  }

  json status() const {
    std::lock_guard lock(mu_);
    std::map<std::string, int> by_status;
    std::map<std::string, int> by_source;
    for (const auto& [id, u] : units_) {
      ++by_status[unit_status_name(u.status)];
      ++by_source[u.source];
    }
    return {{"total", units_.size()},
            {"by_status", by_status},
            {"by_source", by_source},
            {"archive_size", archive_count_}};
  }

  std::optional<WorkUnit> unit(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = units_.find(id);
    if (it == units_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& archive_dir() const { return dir_; }

 private:
  static double unix_now() {
    return std::chrono::duration<double>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  }

  SubmitResult reject(WorkUnit& u, const std::string& reason,
                      SubmitResult partial = {}) {
    ++u.retries;
    u.failure_reason = reason;
    if (u.retries >= retry_cap_) {
      u.status = UnitStatus::Failed;
    } else {
      u.status = UnitStatus::Pending;
      u.assigned_worker.clear();
    }
    persist();
    partial.accepted = false;
    partial.reason = reason;
    return partial;
  }

  void persist() {
    json j = json::array();
    for (const auto& [id, u] : units_) {
      json uj = work_unit_to_json(u);
      uj["failure_reason"] = u.failure_reason;
      j.push_back(uj);
    }
    json root = {{"units", j}, {"archive_count", archive_count_}};
    auto path = std::filesystem::path(dir_) / "units.json";
    auto tmp = path;
    tmp += ".tmp";
    write_json_file(tmp.string(), root);
    std::filesystem::rename(tmp, path);
  }

  void load() {
    auto path = std::filesystem::path(dir_) / "units.json";
    if (!std::filesystem::exists(path)) return;
    json root = read_json_file(path.string());
    archive_count_ = root.value("archive_count", 0);
    for (const auto& uj : root.at("units")) {
      WorkUnit u;
      u.id = uj.at("id").get<std::string>();
      u.source = uj.at("source").get<std::string>();
      u.preset = uj.at("preset").get<std::string>();
      u.trace_seed = uj.at("trace_seed").get<std::uint64_t>();
      u.train_seed = uj.at("train_seed").get<std::uint64_t>();
      u.assigned_worker = uj.value("worker", "");
      u.deadline_unix = uj.value("deadline_unix", 0.0);
      u.retries = uj.value("retries", 0);
      u.failure_reason = uj.value("failure_reason", "");
      std::string st = uj.at("status").get<std::string>();
      if (st == "pending") u.status = UnitStatus::Pending;
      else if (st == "assigned") u.status = UnitStatus::Assigned;
      else if (st == "completed") u.status = UnitStatus::Completed;
      else u.status = UnitStatus::Failed;
      units_[u.id] = u;
    }
  }

  std::string dir_;
  double deadline_s_;
  int retry_cap_;
  mutable std::mutex mu_;
  std::map<std::string, WorkUnit> units_;
  int archive_count_ = 0;
};

}  // namespace netzoo
