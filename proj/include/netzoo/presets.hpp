#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "netzoo/nn.hpp"
#include "netzoo/traces.hpp"
#include "netzoo/trainer.hpp"

namespace netzoo {

// Bundled defaults for one experiment family. `desk` variants shrink corpora
// and relax thresholds so full runs finish on a workstation.
struct ExperimentPreset {
  std::string name;
  Architecture arch;
  int sequence_length = 0;
  int n_train = 0, n_val = 0, n_eval = 0;
  bool triggers = false;        // modified machines + trigger insertion
  bool automata_source = false; // automaton sources instead of machines
  TrainingConfig training;
};

inline std::optional<ExperimentPreset> find_preset(const std::string& name) {
  ExperimentPreset p;
  p.name = name;
  if (name == "ds1" || name == "ds2") {
    p.arch = ds1_architecture();
    p.sequence_length = 1024;
    p.n_train = 2048; p.n_val = 512; p.n_eval = 64;
    p.triggers = name == "ds2";
    p.training.val_threshold = 1e-5;
    p.training.eval_threshold = 1e-5;
    p.training.max_epochs = 10000;
  } else if (name == "ds3") {
    p.arch = ds3_architecture();
    p.sequence_length = 256;
    p.n_train = 4096; p.n_val = 512; p.n_eval = 512;
    p.automata_source = true;
    p.training.val_threshold = 1e-5;
    p.training.eval_threshold = 1e-5;
    p.training.max_epochs = 10000;
  } else if (name == "desk-ds1" || name == "desk-ds2") {
    p.arch = ds1_architecture();
    p.sequence_length = 64;
    p.n_train = 128; p.n_val = 32; p.n_eval = 16;
    p.triggers = name == "desk-ds2";
    p.training.val_threshold = 1e-3;
    p.training.eval_threshold = 1e-3;
    p.training.max_epochs = 500;
    p.training.learning_rate = 5e-3;
    p.training.batch_size = 4;
  } else if (name == "desk-ds3") {
    p.arch = ds3_architecture();
    p.sequence_length = 64;
    p.n_train = 128; p.n_val = 32; p.n_eval = 16;
    p.automata_source = true;
    p.training.val_threshold = 1e-3;
    p.training.eval_threshold = 1e-3;
    p.training.max_epochs = 500;
    p.training.learning_rate = 5e-3;
    p.training.batch_size = 4;
  } else {
    return std::nullopt;
  }
  return p;
}

inline ExperimentPreset require_preset(const std::string& name) {
  auto p = find_preset(name);
  if (!p) throw std::invalid_argument("unknown preset: " + name);
  return *p;
}

// Trace spec for one source under a preset. `seed` drives corpus generation.
inline TraceSetSpec preset_trace_spec(const ExperimentPreset& p,
                                      const TraceSource& source,
                                      std::uint64_t seed) {
  TraceSetSpec spec;
  spec.source = source;
  spec.sequence_length = p.sequence_length;
  spec.n_train = p.n_train;
  spec.n_val = p.n_val;
  spec.n_eval = p.n_eval;
  spec.seed = seed;
  if (p.triggers) spec.trigger_policy.enabled = true;
  return spec;
}

}  // namespace netzoo
