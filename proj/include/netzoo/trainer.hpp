#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "netzoo/nn.hpp"
#include "netzoo/rng.hpp"
#include "netzoo/traces.hpp"

namespace netzoo {

inline constexpr const char* kEngineVersion = "netzoo-0.1";

struct TrainingConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 16;
  int max_epochs = 500;
  double val_threshold = 1e-5;
  double eval_threshold = 1e-5;
  double clip_norm = 5.0;  // 0 disables
  std::uint64_t seed = 0;

  void validate() const {
    if (learning_rate <= 0) throw std::invalid_argument("learning_rate must be > 0");
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
      throw std::invalid_argument("betas must be in [0, 1)");
    if (val_threshold <= 0 || eval_threshold <= 0)
      throw std::invalid_argument("thresholds must be > 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  }
};

enum class TrainStatus { Converged, Timeout, Diverged };

inline const char* train_status_name(TrainStatus s) {
  switch (s) {
    case TrainStatus::Converged: return "converged";
    case TrainStatus::Timeout: return "timeout";
    case TrainStatus::Diverged: return "diverged";
  }
  return "?";
}

template <class Real>
struct TrainedModelRecord {
  ParameterSet<Real> params;
  std::string label;
  TrainStatus status = TrainStatus::Timeout;
  int epochs_completed = 0;
  std::vector<double> train_loss_history;
  std::vector<double> val_loss_history;
  double wall_time_s = 0;
  std::string engine_version = kEngineVersion;
  std::string work_unit_id;
};

template <class Real>
struct AdamMoments {
  GradientSet<Real> m;
  GradientSet<Real> v;
};

template <class Real>
AdamMoments<Real> zero_moments(const Architecture& arch) {
  return {zero_parameters<Real>(arch), zero_parameters<Real>(arch)};
}

// One Adam update, elementwise over all parameter blocks.
template <class Real>
void adam_step(ParameterSet<Real>& params, const GradientSet<Real>& grads,
               AdamMoments<Real>& moments, long t, const TrainingConfig& cfg) {
  if (t < 1) throw std::invalid_argument("adam step count must be >= 1");
  if (params.scalar_count() != grads.scalar_count())
    throw std::invalid_argument("gradient shape mismatch");
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t));
  const double lr = cfg.learning_rate;

  std::vector<std::vector<Real>*> pb, mb, vb;
  std::vector<const std::vector<Real>*> gb;
  params.for_each_block([&](std::vector<Real>& b) { pb.push_back(&b); });
  moments.m.for_each_block([&](std::vector<Real>& b) { mb.push_back(&b); });
  moments.v.for_each_block([&](std::vector<Real>& b) { vb.push_back(&b); });
  grads.for_each_block([&](const std::vector<Real>& b) { gb.push_back(&b); });

  for (std::size_t i = 0; i < pb.size(); ++i) {
    auto& p = *pb[i];
    auto& m = *mb[i];
    auto& v = *vb[i];
    const auto& g = *gb[i];
    if (p.size() != g.size()) throw std::invalid_argument("gradient shape mismatch");
    for (std::size_t k = 0; k < p.size(); ++k) {
      double gd = static_cast<double>(g[k]);
      double md = b1 * static_cast<double>(m[k]) + (1.0 - b1) * gd;
      double vd = b2 * static_cast<double>(v[k]) + (1.0 - b2) * gd * gd;
      m[k] = static_cast<Real>(md);
      v[k] = static_cast<Real>(vd);
      double mhat = md / corr1;
      double vhat = vd / corr2;
      p[k] = static_cast<Real>(static_cast<double>(p[k]) -
                               lr * mhat / (std::sqrt(vhat) + cfg.epsilon));
    }
  }
}

namespace detail {

template <class Real>
void scale_grads(GradientSet<Real>& g, Real factor) {
  g.for_each_block([&](std::vector<Real>& b) {
    for (auto& x : b) x *= factor;
  });
}

template <class Real>
void accumulate_grads(GradientSet<Real>& acc, const GradientSet<Real>& g) {
  std::vector<std::vector<Real>*> ab;
  std::vector<const std::vector<Real>*> gb;
  acc.for_each_block([&](std::vector<Real>& b) { ab.push_back(&b); });
  g.for_each_block([&](const std::vector<Real>& b) { gb.push_back(&b); });
  for (std::size_t i = 0; i < ab.size(); ++i)
    for (std::size_t k = 0; k < ab[i]->size(); ++k)
      (*ab[i])[k] += (*gb[i])[k];
}

template <class Real>
double grad_norm(const GradientSet<Real>& g) {
  double sum = 0;
  g.for_each_block([&](const std::vector<Real>& b) {
    for (auto x : b) sum += static_cast<double>(x) * static_cast<double>(x);
  });
  return std::sqrt(sum);
}

}  // namespace detail

// Encoded corpus: one (inputs, targets) pair per trace.
template <class Real>
struct EncodedCorpus {
  std::vector<std::vector<Vec<Real>>> inputs;
  std::vector<std::vector<Vec<Real>>> targets;
};

template <class Real>
EncodedCorpus<Real> encode_corpus(const TraceSource& src, const TraceList& traces) {
  EncodedCorpus<Real> c;
  c.inputs.reserve(traces.size());
  c.targets.reserve(traces.size());
  for (const auto& t : traces) {
    c.inputs.push_back(encode_inputs<Real>(src, t.input));
    c.targets.push_back(encode_outputs<Real>(src, t.output));
  }
  return c;
}

// Mean squared error over every timestep and component of a corpus.
template <class Real>
double evaluate(const ParameterSet<Real>& params, const EncodedCorpus<Real>& corpus) {
  if (corpus.inputs.empty()) throw std::invalid_argument("empty evaluation corpus");
  double sum = 0;
  long count = 0;
  for (std::size_t i = 0; i < corpus.inputs.size(); ++i) {
    auto outputs = forward(params, corpus.inputs[i]);
    for (std::size_t t = 0; t < outputs.size(); ++t)
      for (std::size_t k = 0; k < outputs[t].size(); ++k) {
        double d = static_cast<double>(outputs[t][k]) -
                   static_cast<double>(corpus.targets[i][t][k]);
        sum += d * d;
        ++count;
      }
  }
  if (count == 0) throw std::invalid_argument("empty evaluation corpus");
  return sum / static_cast<double>(count);
}

template <class Real>
double evaluate(const ParameterSet<Real>& params, const TraceSource& src,
                const TraceList& traces) {
  return evaluate(params, encode_corpus<Real>(src, traces));
}

template <class Real>
TrainedModelRecord<Real> train(const Architecture& arch, const TraceSet& traces,
                               const TrainingConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const TraceSource& src = traces.spec.source;

  auto train_c = encode_corpus<Real>(src, traces.train);
  auto val_c = encode_corpus<Real>(src, traces.val);
  if (!train_c.inputs.empty() &&
      static_cast<int>(train_c.inputs[0][0].size()) != arch.input_dim)
    throw std::invalid_argument("trace input dim does not match architecture");

  TrainedModelRecord<Real> rec;
  rec.label = source_is_machine(src)
                  ? machine_kind_name(std::get<MachineKind>(src))
                  : "automaton-" + std::to_string(std::get<Automaton>(src).seed);
  rec.params = init_network<Real>(arch, cfg.seed);
  auto moments = zero_moments<Real>(arch);
  long step = 0;

  const auto n = train_c.inputs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  rec.status = TrainStatus::Timeout;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    // Seeded shuffle per epoch.
    SplitMix64 shuffle_rng(derive_seed(cfg.seed, 0x10000u + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i) {
      auto j = shuffle_rng.bounded(i);
      std::swap(order[i - 1], order[j]);
    }

    for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(n, b + static_cast<std::size_t>(cfg.batch_size));
      GradientSet<Real> acc = zero_parameters<Real>(arch);
      for (std::size_t i = b; i < end; ++i) {
        ForwardCache<Real> cache;
        forward(rec.params, train_c.inputs[order[i]], &cache);
        auto g = backward(rec.params, cache, train_c.targets[order[i]]);
        detail::accumulate_grads(acc, g);
      }
      detail::scale_grads(acc, Real(1) / static_cast<Real>(end - b));
      if (cfg.clip_norm > 0) {
        double norm = detail::grad_norm(acc);
        if (norm > cfg.clip_norm)
          detail::scale_grads(acc, static_cast<Real>(cfg.clip_norm / norm));
      }
      adam_step(rec.params, acc, moments, ++step, cfg);
    }

    double train_loss = evaluate(rec.params, train_c);
    double val_loss = evaluate(rec.params, val_c);
    rec.train_loss_history.push_back(train_loss);
    rec.val_loss_history.push_back(val_loss);
    rec.epochs_completed = epoch + 1;
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      rec.status = TrainStatus::Diverged;
      break;
    }
    if (val_loss <= cfg.val_threshold) {
      rec.status = TrainStatus::Converged;
      break;
    }
  }

  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace netzoo
