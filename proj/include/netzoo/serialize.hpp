#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "netzoo/automata.hpp"
#include "netzoo/nn.hpp"
#include "netzoo/traces.hpp"
#include "netzoo/trainer.hpp"

namespace netzoo {

using json = nlohmann::json;

inline json arch_to_json(const Architecture& a) {
  return {{"cell", a.cell == CellKind::GRU ? "gru" : "lstm"},
          {"recurrent_layers", a.recurrent_layers},
          {"hidden", a.hidden_width},
          {"linear_layers", a.linear_layers},
          {"input", a.input_dim},
          {"output", a.output_dim}};
}

inline Architecture arch_from_json(const json& j) {
  Architecture a;
  std::string cell = j.at("cell").get<std::string>();
  if (cell == "gru") a.cell = CellKind::GRU;
  else if (cell == "lstm") a.cell = CellKind::LSTM;
  else throw std::invalid_argument("unknown cell kind: " + cell);
  a.recurrent_layers = j.at("recurrent_layers").get<int>();
  a.hidden_width = j.at("hidden").get<int>();
  a.linear_layers = j.at("linear_layers").get<int>();
  a.input_dim = j.at("input").get<int>();
  a.output_dim = j.at("output").get<int>();
  return a;
}

// Weight file schema: {"arch": {...}, "layers": [{"name","shape","values"}]}
// with values flat row-major. Floats pass through double exactly, so decimal
// round-trips are bit-exact.
template <class Real>
json params_to_json(const ParameterSet<Real>& p) {
  json layers = json::array();
  auto add = [&](const std::string& name, std::vector<int> shape,
                 const std::vector<Real>& values) {
    json v = json::array();
    for (Real x : values) v.push_back(static_cast<double>(x));
    layers.push_back({{"name", name}, {"shape", shape}, {"values", std::move(v)}});
  };
  for (std::size_t l = 0; l < p.recurrent.size(); ++l) {
    const auto& r = p.recurrent[l];
    std::string base = "rnn" + std::to_string(l);
    add(base + ".weight_ih", {r.w_ih.rows, r.w_ih.cols}, r.w_ih.a);
    add(base + ".weight_hh", {r.w_hh.rows, r.w_hh.cols}, r.w_hh.a);
    add(base + ".bias_ih", {static_cast<int>(r.b_ih.size())}, r.b_ih);
    add(base + ".bias_hh", {static_cast<int>(r.b_hh.size())}, r.b_hh);
  }
  for (std::size_t l = 0; l < p.linear.size(); ++l) {
    const auto& lin = p.linear[l];
    std::string base = "linear" + std::to_string(l);
    add(base + ".weight", {lin.w.rows, lin.w.cols}, lin.w.a);
    add(base + ".bias", {static_cast<int>(lin.b.size())}, lin.b);
  }
  return {{"arch", arch_to_json(p.arch)}, {"layers", std::move(layers)}};
}

template <class Real>
ParameterSet<Real> params_from_json(const json& j) {
  Architecture arch = arch_from_json(j.at("arch"));
  auto p = zero_parameters<Real>(arch);
  std::vector<std::vector<Real>*> blocks;
  p.for_each_block([&](std::vector<Real>& b) { blocks.push_back(&b); });
  const auto& layers = j.at("layers");
  if (layers.size() != blocks.size())
    throw std::invalid_argument("layer count does not match architecture");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& values = layers[i].at("values");
    if (values.size() != blocks[i]->size())
      throw std::invalid_argument("layer size does not match architecture");
    for (std::size_t k = 0; k < values.size(); ++k)
      (*blocks[i])[k] = static_cast<Real>(values[k].get<double>());
  }
  return p;
}

inline json automaton_to_json(const Automaton& a) {
  return {{"seed", a.seed},
          {"n_states", a.n_states},
          {"alphabet_size", a.alphabet_size},
          {"transitions", a.transitions},
          {"emitters", a.emitters},
          {"hamiltonian_order", a.hamiltonian_order},
          {"hamiltonian_labels", a.hamiltonian_labels}};
}

inline Automaton automaton_from_json(const json& j) {
  Automaton a;
  a.seed = j.at("seed").get<std::uint64_t>();
  a.n_states = j.at("n_states").get<int>();
  a.alphabet_size = j.at("alphabet_size").get<int>();
  a.transitions = j.at("transitions").get<std::vector<int>>();
  a.emitters = j.at("emitters").get<std::vector<int>>();
  a.hamiltonian_order = j.at("hamiltonian_order").get<std::vector<int>>();
  a.hamiltonian_labels = j.at("hamiltonian_labels").get<std::vector<int>>();
  return a;
}

// Trace corpora are JSON-lines: one {"input": [...], "output": [...]} per line.
inline void write_trace_file(const std::string& path, const TraceList& traces) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& t : traces) {
    json line = {{"input", t.input}, {"output", t.output}};
    out << line.dump() << '\n';
  }
}

inline TraceList read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  TraceList traces;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    traces.push_back({j.at("input").get<std::vector<int>>(),
                      j.at("output").get<std::vector<int>>()});
  }
  return traces;
}

inline void write_json_file(const std::string& path, const json& j, int indent = -1) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(indent) << '\n';
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return json::parse(in);
}

template <class Real>
json record_summary_json(const TrainedModelRecord<Real>& rec, bool with_wall_time = true) {
  json j = {{"label", rec.label},
            {"status", train_status_name(rec.status)},
            {"epochs", rec.epochs_completed},
            {"train_loss",
             rec.train_loss_history.empty() ? json() : json(rec.train_loss_history.back())},
            {"val_loss",
             rec.val_loss_history.empty() ? json() : json(rec.val_loss_history.back())},
            {"engine", rec.engine_version}};
  if (!rec.work_unit_id.empty()) j["work_unit"] = rec.work_unit_id;
  if (with_wall_time) j["wall_time_s"] = rec.wall_time_s;
  return j;
}

}  // namespace netzoo
