#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "netzoo/rng.hpp"

namespace netzoo {

// Randomly generated deterministic automaton. Every (state, symbol) pair has
// a transition; a Hamiltonian cycle over all states guarantees connectivity.
// `emitters[s]` is the output symbol produced on entering state s (0 = silent).
struct Automaton {
  std::uint64_t seed = 0;
  int n_states = 16;
  int alphabet_size = 4;
  std::vector<int> transitions;       // row-major: state * alphabet_size + symbol
  std::vector<int> emitters;          // output id per state, 0 for silent
  std::vector<int> hamiltonian_order; // permutation of states
  std::vector<int> hamiltonian_labels; // edge label order[i] -> order[i+1]

  int transition(int state, int symbol) const {
    return transitions[static_cast<std::size_t>(state) * alphabet_size + symbol];
  }
  int reset_state() const { return hamiltonian_order.front(); }
};

struct AutomatonState {
  int current = 0;
};

inline Automaton generate_automaton(std::uint64_t seed, int n_states = 16,
                                    int alphabet_size = 4, int n_emitters = 14) {
  if (n_states < 2) throw std::invalid_argument("n_states must be >= 2");
  if (alphabet_size < 1) throw std::invalid_argument("alphabet_size must be >= 1");
  if (n_emitters > n_states)
    throw std::invalid_argument("n_emitters must be <= n_states");

  SplitMix64 rng(seed);
  Automaton a;
  a.seed = seed;
  a.n_states = n_states;
  a.alphabet_size = alphabet_size;

  a.hamiltonian_order.resize(n_states);
  for (int i = 0; i < n_states; ++i) a.hamiltonian_order[i] = i;
  for (int i = n_states - 1; i > 0; --i) {
    int j = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(i) + 1));
    std::swap(a.hamiltonian_order[i], a.hamiltonian_order[j]);
  }

  // First n_emitters states of the shuffled order emit ids 1..n_emitters.
  a.emitters.assign(n_states, 0);
  for (int i = 0; i < n_emitters; ++i) a.emitters[a.hamiltonian_order[i]] = i + 1;

  a.transitions.assign(static_cast<std::size_t>(n_states) * alphabet_size, -1);
  a.hamiltonian_labels.resize(n_states);

  // Chain the shuffled states with random edge labels, wrapping last -> first
  // to close the cycle.
  for (int i = 0; i < n_states; ++i) {
    int src = a.hamiltonian_order[i];
    int dst = a.hamiltonian_order[(i + 1) % n_states];
    int label = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(alphabet_size)));
    a.hamiltonian_labels[i] = label;
    a.transitions[static_cast<std::size_t>(src) * alphabet_size + label] = dst;
  }

  // Remaining symbols go to a uniformly random state, excluding the source's
  // Hamiltonian successor. Self-loops are allowed.
  for (int i = 0; i < n_states; ++i) {
    int src = a.hamiltonian_order[i];
    int successor = a.hamiltonian_order[(i + 1) % n_states];
    for (int sym = 0; sym < alphabet_size; ++sym) {
      auto idx = static_cast<std::size_t>(src) * alphabet_size + sym;
      if (a.transitions[idx] != -1) continue;
      int dst;
      do {
        dst = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n_states)));
      } while (dst == successor);
      a.transitions[idx] = dst;
    }
  }
  return a;
}

inline AutomatonState automaton_reset(const Automaton& a) {
  return {a.reset_state()};
}

inline std::pair<AutomatonState, int> automaton_step(const Automaton& a,
                                                     AutomatonState st,
                                                     int symbol) {
  if (symbol < 0 || symbol >= a.alphabet_size)
    throw std::invalid_argument("symbol out of range");
  int next = a.transition(st.current, symbol);
  return {AutomatonState{next}, a.emitters[next]};
}

inline std::vector<int> run_automaton(const Automaton& a,
                                      const std::vector<int>& inputs) {
  std::vector<int> outputs;
  outputs.reserve(inputs.size());
  AutomatonState st = automaton_reset(a);
  for (int sym : inputs) {
    auto [next, out] = automaton_step(a, st, sym);
    st = next;
    outputs.push_back(out);
  }
  return outputs;
}

struct AutomatonReport {
  bool transitions_total = false;
  bool out_degree_ok = false;
  bool hamiltonian_ok = false;
  bool emitters_ok = false;
  bool reachable_ok = false;

  bool all_ok() const {
    return transitions_total && out_degree_ok && hamiltonian_ok &&
           emitters_ok && reachable_ok;
  }
  std::string summary() const {
    std::string s;
    auto add = [&](const char* name, bool ok) {
      s += name;
      s += ok ? ": pass  " : ": FAIL  ";
    };
    add("totality", transitions_total);
    add("out-degree", out_degree_ok);
    add("hamiltonian", hamiltonian_ok);
    add("emitters", emitters_ok);
    add("reachability", reachable_ok);
    return s;
  }
};

inline AutomatonReport verify_automaton(const Automaton& a) {
  AutomatonReport r;
  const auto n = static_cast<std::size_t>(a.n_states);

  r.transitions_total =
      a.transitions.size() == n * a.alphabet_size &&
      std::all_of(a.transitions.begin(), a.transitions.end(),
                  [&](int t) { return t >= 0 && t < a.n_states; });
  r.out_degree_ok = r.transitions_total;  // table form makes degree structural

  r.hamiltonian_ok = a.hamiltonian_order.size() == n &&
                     a.hamiltonian_labels.size() == n;
  if (r.hamiltonian_ok) {
    std::vector<bool> seen(n, false);
    for (int s : a.hamiltonian_order) {
      if (s < 0 || s >= a.n_states || seen[s]) { r.hamiltonian_ok = false; break; }
      seen[s] = true;
    }
  }
  if (r.hamiltonian_ok && r.transitions_total) {
    for (int i = 0; i < a.n_states; ++i) {
      int src = a.hamiltonian_order[i];
      int expect = a.hamiltonian_order[(i + 1) % a.n_states];
      int label = a.hamiltonian_labels[i];
      if (label < 0 || label >= a.alphabet_size ||
          a.transition(src, label) != expect) {
        r.hamiltonian_ok = false;
        break;
      }
    }
  }

  {
    std::vector<int> ids;
    for (int id : a.emitters)
      if (id != 0) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    r.emitters_ok = std::adjacent_find(ids.begin(), ids.end()) == ids.end();
    for (std::size_t i = 0; r.emitters_ok && i < ids.size(); ++i)
      r.emitters_ok = ids[i] == static_cast<int>(i) + 1;
  }

  if (r.transitions_total && !a.hamiltonian_order.empty()) {
    std::vector<bool> visited(n, false);
    std::vector<int> stack = {a.reset_state()};
    visited[static_cast<std::size_t>(a.reset_state())] = true;
    while (!stack.empty()) {
      int s = stack.back();
      stack.pop_back();
      for (int sym = 0; sym < a.alphabet_size; ++sym) {
        int t = a.transition(s, sym);
        if (!visited[static_cast<std::size_t>(t)]) {
          visited[static_cast<std::size_t>(t)] = true;
          stack.push_back(t);
        }
      }
    }
    r.reachable_ok =
        std::all_of(visited.begin(), visited.end(), [](bool v) { return v; });
  }
  return r;
}

}  // namespace netzoo
