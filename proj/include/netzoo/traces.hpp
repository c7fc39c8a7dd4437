#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "netzoo/automata.hpp"
#include "netzoo/machines.hpp"
#include "netzoo/rng.hpp"

namespace netzoo {

// A trace is one simulated run: raw input values and the oracle's outputs.
// Machine traces hold bytes; automaton traces hold symbol/output ids.
struct Trace {
  std::vector<int> input;
  std::vector<int> output;
};

using TraceList = std::vector<Trace>;

struct TriggerPolicy {
  bool enabled = false;
  TriggerSpec trigger;
  int min_insertions = 1;
  int max_insertions = 4;
};

using TraceSource = std::variant<MachineKind, Automaton>;

struct TraceSetSpec {
  TraceSource source;
  int sequence_length = 64;
  int n_train = 128;
  int n_val = 32;
  int n_eval = 16;
  std::uint64_t seed = 0;
  TriggerPolicy trigger_policy;
};

struct TraceSet {
  TraceList train;
  TraceList val;
  TraceList eval;
  TraceList eval_pathological;  // only populated when triggers are enabled
  TraceSetSpec spec;
};

inline bool source_is_machine(const TraceSource& src) {
  return std::holds_alternative<MachineKind>(src);
}

inline int source_input_range(const TraceSource& src) {
  return source_is_machine(src) ? 256 : std::get<Automaton>(src).alphabet_size;
}

inline std::vector<int> generate_sequence(SplitMix64& rng, int length,
                                          const TraceSource& src) {
  if (length < 1) throw std::invalid_argument("sequence length must be >= 1");
  const auto range = static_cast<std::uint64_t>(source_input_range(src));
  std::vector<int> seq(static_cast<std::size_t>(length));
  for (auto& v : seq) v = static_cast<int>(rng.bounded(range));
  return seq;
}

// Overwrites three consecutive positions at a random offset with the trigger.
inline void insert_trigger(std::vector<int>& seq, const TriggerSpec& trig,
                           SplitMix64& rng) {
  if (seq.size() < trig.sequence.size())
    throw std::invalid_argument("sequence shorter than trigger");
  auto offset = rng.bounded(seq.size() - trig.sequence.size() + 1);
  for (std::size_t i = 0; i < trig.sequence.size(); ++i)
    seq[offset + i] = trig.sequence[i];
}

inline std::vector<int> simulate_source(const TraceSource& src,
                                        const std::vector<int>& input,
                                        const TriggerSpec& trig) {
  if (source_is_machine(src)) {
    std::vector<std::uint8_t> bytes(input.begin(), input.end());
    auto out = run_machine(std::get<MachineKind>(src), bytes, trig);
    return {out.begin(), out.end()};
  }
  return run_automaton(std::get<Automaton>(src), input);
}

namespace detail {

enum class CorpusTriggerMode { None, Random, Always };

inline TraceList build_corpus(const TraceSetSpec& spec, int count,
                              std::uint64_t stream_seed,
                              CorpusTriggerMode mode) {
  SplitMix64 rng(stream_seed);
  TraceList out;
  out.reserve(static_cast<std::size_t>(count));
  const auto& policy = spec.trigger_policy;
  for (int i = 0; i < count; ++i) {
    Trace t;
    t.input = generate_sequence(rng, spec.sequence_length, spec.source);
    if (mode != CorpusTriggerMode::None && policy.enabled) {
      int span = policy.max_insertions - policy.min_insertions + 1;
      int n = policy.min_insertions +
              static_cast<int>(rng.bounded(static_cast<std::uint64_t>(span)));
      if (mode == CorpusTriggerMode::Always && n < 1) n = 1;
      for (int j = 0; j < n; ++j) insert_trigger(t.input, policy.trigger, rng);
    }
    t.output = simulate_source(spec.source, t.input, policy.trigger);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace detail

// Corpora come from independent sub-streams of the spec seed (stream-split
// rule in rng.hpp): 0 = train, 1 = val, 2 = eval, 3 = pathological eval.
// With triggers enabled, train and val carry inserted triggers, the plain
// eval set stays trigger-free, and a second all-triggered eval set is added.
inline TraceSet build_trace_set(const TraceSetSpec& spec) {
  if (spec.n_train < 1 || spec.n_val < 1 || spec.n_eval < 1)
    throw std::invalid_argument("corpus counts must be >= 1");
  using detail::CorpusTriggerMode;
  TraceSet ts;
  ts.spec = spec;
  ts.train = detail::build_corpus(spec, spec.n_train, derive_seed(spec.seed, 0),
                                  CorpusTriggerMode::Random);
  ts.val = detail::build_corpus(spec, spec.n_val, derive_seed(spec.seed, 1),
                                CorpusTriggerMode::Random);
  ts.eval = detail::build_corpus(spec, spec.n_eval, derive_seed(spec.seed, 2),
                                 CorpusTriggerMode::None);
  if (spec.trigger_policy.enabled) {
    ts.eval_pathological =
        detail::build_corpus(spec, spec.n_eval, derive_seed(spec.seed, 3),
                             CorpusTriggerMode::Always);
  }
  return ts;
}

// Learning encodings. Machine bytes become 8-dim {0,1} vectors; automaton
// symbols are one-hot over the alphabet and outputs one-hot over ids 0..14.
inline int encoded_input_dim(const TraceSource& src) {
  return source_is_machine(src) ? 8 : std::get<Automaton>(src).alphabet_size;
}

inline int encoded_output_dim(const TraceSource& src) {
  if (source_is_machine(src)) return 8;
  // ids 0..n_states-2 (silent + emitters): 16-state/14-emitter default -> 15
  const auto& a = std::get<Automaton>(src);
  int max_id = 0;
  for (int id : a.emitters) max_id = std::max(max_id, id);
  return max_id + 1;
}

template <class Real>
std::vector<std::vector<Real>> encode_bytes(const std::vector<int>& values) {
  std::vector<std::vector<Real>> enc(values.size(), std::vector<Real>(8));
  for (std::size_t i = 0; i < values.size(); ++i)
    for (int b = 0; b < 8; ++b)
      enc[i][static_cast<std::size_t>(b)] =
          static_cast<Real>((values[i] >> b) & 1);
  return enc;
}

template <class Real>
std::vector<std::vector<Real>> encode_one_hot(const std::vector<int>& values,
                                              int dim) {
  std::vector<std::vector<Real>> enc(values.size(),
                                     std::vector<Real>(static_cast<std::size_t>(dim)));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0 || values[i] >= dim)
      throw std::invalid_argument("value out of one-hot range");
    enc[i][static_cast<std::size_t>(values[i])] = Real(1);
  }
  return enc;
}

template <class Real>
std::vector<std::vector<Real>> encode_inputs(const TraceSource& src,
                                             const std::vector<int>& input) {
  if (source_is_machine(src)) return encode_bytes<Real>(input);
  return encode_one_hot<Real>(input, encoded_input_dim(src));
}

template <class Real>
std::vector<std::vector<Real>> encode_outputs(const TraceSource& src,
                                              const std::vector<int>& output) {
  if (source_is_machine(src)) return encode_bytes<Real>(output);
  return encode_one_hot<Real>(output, encoded_output_dim(src));
}

}  // namespace netzoo
