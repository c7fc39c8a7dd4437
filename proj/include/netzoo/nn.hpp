#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "netzoo/rng.hpp"

namespace netzoo {

enum class CellKind : int { GRU = 0, LSTM = 1 };

inline int gates_per_cell(CellKind kind) {
  return kind == CellKind::GRU ? 3 : 4;
}

// Stacked recurrent layers followed by a stack of linear layers with no
// activation between them, then a final linear output head.
struct Architecture {
  CellKind cell = CellKind::GRU;
  int recurrent_layers = 4;
  int hidden_width = 12;
  int linear_layers = 4;
  int input_dim = 8;
  int output_dim = 8;

  bool operator==(const Architecture&) const = default;
};

inline Architecture ds1_architecture() {
  return {CellKind::GRU, 4, 12, 4, 8, 8};
}

inline Architecture ds3_architecture() {
  return {CellKind::LSTM, 4, 64, 2, 4, 15};
}

// Exact trainable-scalar count. Recurrent layer: gates*(H*(in+H)) + 2*gates*H;
// linear layer: out*in + out. The head is counted as one extra linear layer.
inline long param_count(const Architecture& arch) {
  if (arch.recurrent_layers < 1 || arch.hidden_width < 1 ||
      arch.input_dim < 1 || arch.output_dim < 1 || arch.linear_layers < 0)
    throw std::invalid_argument("invalid architecture");
  const long g = gates_per_cell(arch.cell);
  const long h = arch.hidden_width;
  long total = 0;
  for (int l = 0; l < arch.recurrent_layers; ++l) {
    long in = l == 0 ? arch.input_dim : h;
    total += g * h * (in + h) + 2 * g * h;
  }
  for (int l = 0; l < arch.linear_layers; ++l) total += h * h + h;
  total += static_cast<long>(arch.output_dim) * h + arch.output_dim;
  return total;
}

template <class Real>
struct Mat {
  int rows = 0, cols = 0;
  std::vector<Real> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}

  Real& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  Real operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

template <class Real>
using Vec = std::vector<Real>;

template <class Real>
struct RecurrentLayer {
  Mat<Real> w_ih;   // (gates*H) x in
  Mat<Real> w_hh;   // (gates*H) x H
  Vec<Real> b_ih;   // gates*H
  Vec<Real> b_hh;   // gates*H
};

template <class Real>
struct LinearLayer {
  Mat<Real> w;  // out x in
  Vec<Real> b;  // out
};

// Canonical parameter order (defines vectorization): recurrent layers in
// stack order, each as w_ih row-major, w_hh row-major, b_ih, b_hh with
// gate-major row blocks (GRU: reset, update, new; LSTM: input, forget, cell,
// output); then linear layers in order (head last), each as w row-major, b.
template <class Real>
struct ParameterSet {
  Architecture arch;
  std::vector<RecurrentLayer<Real>> recurrent;
  std::vector<LinearLayer<Real>> linear;  // arch.linear_layers entries + head

  template <class F>
  void for_each_block(F&& f) {
    for (auto& l : recurrent) {
      f(l.w_ih.a); f(l.w_hh.a); f(l.b_ih); f(l.b_hh);
    }
    for (auto& l : linear) {
      f(l.w.a); f(l.b);
    }
  }
  template <class F>
  void for_each_block(F&& f) const {
    for (const auto& l : recurrent) {
      f(l.w_ih.a); f(l.w_hh.a); f(l.b_ih); f(l.b_hh);
    }
    for (const auto& l : linear) {
      f(l.w.a); f(l.b);
    }
  }

  long scalar_count() const {
    long n = 0;
    for_each_block([&](const std::vector<Real>& b) { n += static_cast<long>(b.size()); });
    return n;
  }
};

template <class Real>
using GradientSet = ParameterSet<Real>;

template <class Real>
ParameterSet<Real> zero_parameters(const Architecture& arch) {
  ParameterSet<Real> p;
  p.arch = arch;
  const int g = gates_per_cell(arch.cell);
  const int h = arch.hidden_width;
  for (int l = 0; l < arch.recurrent_layers; ++l) {
    int in = l == 0 ? arch.input_dim : h;
    RecurrentLayer<Real> layer;
    layer.w_ih = Mat<Real>(g * h, in);
    layer.w_hh = Mat<Real>(g * h, h);
    layer.b_ih.assign(static_cast<std::size_t>(g) * h, Real(0));
    layer.b_hh.assign(static_cast<std::size_t>(g) * h, Real(0));
    p.recurrent.push_back(std::move(layer));
  }
  for (int l = 0; l < arch.linear_layers; ++l) {
    LinearLayer<Real> layer;
    layer.w = Mat<Real>(h, h);
    layer.b.assign(static_cast<std::size_t>(h), Real(0));
    p.linear.push_back(std::move(layer));
  }
  LinearLayer<Real> head;
  head.w = Mat<Real>(arch.output_dim, h);
  head.b.assign(static_cast<std::size_t>(arch.output_dim), Real(0));
  p.linear.push_back(std::move(head));
  return p;
}

// Uniform init in [-1/sqrt(H), +1/sqrt(H)], deterministic in the seed.
template <class Real>
ParameterSet<Real> init_network(const Architecture& arch, std::uint64_t seed) {
  auto p = zero_parameters<Real>(arch);
  SplitMix64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(arch.hidden_width));
  p.for_each_block([&](std::vector<Real>& block) {
    for (auto& v : block)
      v = static_cast<Real>(rng.uniform(-bound, bound));
  });
  return p;
}

namespace detail {

template <class Real>
void gemv(const Mat<Real>& w, const Vec<Real>& x, Vec<Real>& out) {
  for (int r = 0; r < w.rows; ++r) {
    Real acc = 0;
    const Real* row = &w.a[static_cast<std::size_t>(r) * w.cols];
    for (int c = 0; c < w.cols; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] += acc;
  }
}

// out += W[row0..row0+nrows)^T x, where x has nrows entries
template <class Real>
void gemv_t(const Mat<Real>& w, int row0, int nrows, const Real* x, Vec<Real>& out) {
  for (int r = 0; r < nrows; ++r) {
    Real xv = x[r];
    if (xv == Real(0)) continue;
    const Real* row = &w.a[static_cast<std::size_t>(row0 + r) * w.cols];
    for (int c = 0; c < w.cols; ++c) out[static_cast<std::size_t>(c)] += xv * row[c];
  }
}

// dW[rows r0..r0+len) += u v^T
template <class Real>
void outer_acc(Mat<Real>& dw, int r0, const Real* u, int len, const Vec<Real>& v) {
  for (int r = 0; r < len; ++r) {
    Real uv = u[r];
    Real* row = &dw.a[static_cast<std::size_t>(r0 + r) * dw.cols];
    for (int c = 0; c < dw.cols; ++c) row[c] += uv * v[static_cast<std::size_t>(c)];
  }
}

template <class Real>
Real sigmoid(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

}  // namespace detail

// Per-timestep activations retained for backpropagation through time.
template <class Real>
struct RecurrentStepCache {
  Vec<Real> h_prev;
  // GRU: gate[0]=r, gate[1]=z, gate[2]=n, aux = W_hn h_prev + b_hn
  // LSTM: gate[0..3]=i,f,g,o, aux = tanh(c), plus cell states
  Vec<Real> gates;
  Vec<Real> aux;
  Vec<Real> c_prev;  // LSTM only
  Vec<Real> c;       // LSTM only
};

template <class Real>
struct ForwardCache {
  Architecture arch;
  // layer_inputs[l][t]: input vector fed to recurrent layer l at step t
  std::vector<std::vector<Vec<Real>>> layer_inputs;
  std::vector<std::vector<RecurrentStepCache<Real>>> steps;
  // linear_inputs[j][t]: input to linear layer j at step t
  std::vector<std::vector<Vec<Real>>> linear_inputs;
  std::vector<Vec<Real>> outputs;
  int seq_len = 0;
};

template <class Real>
Vec<Real> recurrent_cell_forward(const RecurrentLayer<Real>& layer,
                                 CellKind cell, int h, const Vec<Real>& x,
                                 const Vec<Real>& h_prev,
                                 RecurrentStepCache<Real>& cache) {
  using detail::sigmoid;
  const auto H = static_cast<std::size_t>(h);
  if (cell == CellKind::GRU) {
    Vec<Real> gi = layer.b_ih;  // 3H: [r z n]
    detail::gemv(layer.w_ih, x, gi);
    Vec<Real> gh = layer.b_hh;
    detail::gemv(layer.w_hh, h_prev, gh);
    cache.gates.resize(3 * H);
    cache.aux.resize(H);
    Vec<Real> h_next(H);
    for (std::size_t k = 0; k < H; ++k) {
      Real r = sigmoid(gi[k] + gh[k]);
      Real z = sigmoid(gi[H + k] + gh[H + k]);
      Real m = gh[2 * H + k];
      Real n = std::tanh(gi[2 * H + k] + r * m);
      cache.gates[k] = r;
      cache.gates[H + k] = z;
      cache.gates[2 * H + k] = n;
      cache.aux[k] = m;
      h_next[k] = (Real(1) - z) * n + z * h_prev[k];
    }
    cache.h_prev = h_prev;
    return h_next;
  }
  // LSTM
  Vec<Real> pre = layer.b_ih;  // 4H: [i f g o]
  for (std::size_t k = 0; k < 4 * H; ++k) pre[k] += layer.b_hh[k];
  detail::gemv(layer.w_ih, x, pre);
  detail::gemv(layer.w_hh, h_prev, pre);
  cache.gates.resize(4 * H);
  cache.aux.resize(H);
  cache.c.resize(H);
  Vec<Real> h_next(H);
  for (std::size_t k = 0; k < H; ++k) {
    Real i = sigmoid(pre[k]);
    Real f = sigmoid(pre[H + k]);
    Real g = std::tanh(pre[2 * H + k]);
    Real o = sigmoid(pre[3 * H + k]);
    Real c = f * cache.c_prev[k] + i * g;
    Real tc = std::tanh(c);
    cache.gates[k] = i;
    cache.gates[H + k] = f;
    cache.gates[2 * H + k] = g;
    cache.gates[3 * H + k] = o;
    cache.c[k] = c;
    cache.aux[k] = tc;
    h_next[k] = o * tc;
  }
  cache.h_prev = h_prev;
  return h_next;
}

template <class Real>
std::vector<Vec<Real>> forward(const ParameterSet<Real>& params,
                               const std::vector<Vec<Real>>& inputs,
                               ForwardCache<Real>* cache = nullptr) {
  const Architecture& arch = params.arch;
  const auto H = static_cast<std::size_t>(arch.hidden_width);
  const auto T = inputs.size();
  for (const auto& x : inputs)
    if (static_cast<int>(x.size()) != arch.input_dim)
      throw std::invalid_argument("input dimension mismatch");

  if (cache) {
    cache->arch = arch;
    cache->seq_len = static_cast<int>(T);
    cache->layer_inputs.assign(params.recurrent.size(), {});
    cache->steps.assign(params.recurrent.size(), {});
    cache->linear_inputs.assign(params.linear.size(), {});
    cache->outputs.clear();
  }

  // Recurrent stack
  std::vector<Vec<Real>> seq = inputs;
  for (std::size_t l = 0; l < params.recurrent.size(); ++l) {
    const auto& layer = params.recurrent[l];
    Vec<Real> h(H, Real(0));
    Vec<Real> c(H, Real(0));
    std::vector<Vec<Real>> out_seq;
    out_seq.reserve(T);
    if (cache) {
      cache->layer_inputs[l] = seq;
      cache->steps[l].resize(T);
    }
    RecurrentStepCache<Real> scratch;
    for (std::size_t t = 0; t < T; ++t) {
      RecurrentStepCache<Real>& sc = cache ? cache->steps[l][t] : scratch;
      if (arch.cell == CellKind::LSTM) sc.c_prev = c;
      Vec<Real> h_next = recurrent_cell_forward(layer, arch.cell,
                                                arch.hidden_width, seq[t], h, sc);
      if (arch.cell == CellKind::LSTM) c = sc.c;
      h = h_next;
      out_seq.push_back(std::move(h_next));
    }
    seq = std::move(out_seq);
  }

  // Linear stack, applied per timestep, no activation between layers.
  std::vector<Vec<Real>> outputs(T);
  for (std::size_t t = 0; t < T; ++t) {
    Vec<Real> v = std::move(seq[t]);
    for (std::size_t j = 0; j < params.linear.size(); ++j) {
      if (cache) cache->linear_inputs[j].push_back(v);
      Vec<Real> next = params.linear[j].b;
      detail::gemv(params.linear[j].w, v, next);
      v = std::move(next);
    }
    outputs[t] = std::move(v);
  }
  if (cache) cache->outputs = outputs;
  return outputs;
}

template <class Real>
double mse_loss(const std::vector<Vec<Real>>& outputs,
                const std::vector<Vec<Real>>& targets) {
  if (outputs.size() != targets.size())
    throw std::invalid_argument("sequence length mismatch");
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < outputs.size(); ++t) {
    if (outputs[t].size() != targets[t].size())
      throw std::invalid_argument("output dimension mismatch");
    for (std::size_t k = 0; k < outputs[t].size(); ++k) {
      double d = static_cast<double>(outputs[t][k]) - static_cast<double>(targets[t][k]);
      sum += d * d;
    }
    count += outputs[t].size();
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

// Exact MSE gradient through the linear stack and BPTT through the
// recurrent stack over the full sequence.
template <class Real>
GradientSet<Real> backward(const ParameterSet<Real>& params,
                           const ForwardCache<Real>& cache,
                           const std::vector<Vec<Real>>& targets) {
  const Architecture& arch = params.arch;
  if (cache.arch != arch) throw std::invalid_argument("cache/params mismatch");
  const auto T = static_cast<std::size_t>(cache.seq_len);
  if (targets.size() != T) throw std::invalid_argument("target length mismatch");
  const auto H = static_cast<std::size_t>(arch.hidden_width);
  const int h = arch.hidden_width;

  GradientSet<Real> grads = zero_parameters<Real>(arch);
  if (T == 0) return grads;

  const Real scale =
      Real(2) / static_cast<Real>(T * static_cast<std::size_t>(arch.output_dim));

  // Linear stack backward, per timestep; d_top[t] = gradient at top hidden.
  std::vector<Vec<Real>> d_top(T);
  for (std::size_t t = 0; t < T; ++t) {
    if (targets[t].size() != cache.outputs[t].size())
      throw std::invalid_argument("target dimension mismatch");
    Vec<Real> d(cache.outputs[t].size());
    for (std::size_t k = 0; k < d.size(); ++k)
      d[k] = scale * (cache.outputs[t][k] - targets[t][k]);
    for (std::size_t j = params.linear.size(); j-- > 0;) {
      const auto& layer = params.linear[j];
      auto& glayer = grads.linear[j];
      const Vec<Real>& x = cache.linear_inputs[j][t];
      detail::outer_acc(glayer.w, 0, d.data(), layer.w.rows, x);
      for (int r = 0; r < layer.w.rows; ++r) glayer.b[static_cast<std::size_t>(r)] += d[static_cast<std::size_t>(r)];
      Vec<Real> dx(static_cast<std::size_t>(layer.w.cols), Real(0));
      detail::gemv_t(layer.w, 0, layer.w.rows, d.data(), dx);
      d = std::move(dx);
    }
    d_top[t] = std::move(d);
  }

  // Recurrent stack backward, top layer first.
  std::vector<Vec<Real>> d_below = std::move(d_top);
  for (std::size_t l = params.recurrent.size(); l-- > 0;) {
    const auto& layer = params.recurrent[l];
    auto& glayer = grads.recurrent[l];
    const auto& inputs = cache.layer_inputs[l];
    const int in_dim = layer.w_ih.cols;
    std::vector<Vec<Real>> d_input(T, Vec<Real>(static_cast<std::size_t>(in_dim), Real(0)));
    Vec<Real> dh_carry(H, Real(0));
    Vec<Real> dc_carry(H, Real(0));

    for (std::size_t t = T; t-- > 0;) {
      const auto& sc = cache.steps[l][t];
      Vec<Real> dh(H);
      for (std::size_t k = 0; k < H; ++k) dh[k] = d_below[t][k] + dh_carry[k];

      if (arch.cell == CellKind::GRU) {
        // gates: [r z n], aux m = W_hn h_prev + b_hn
        Vec<Real> da(3 * H);  // pre-activation grads [r z n-block]
        Vec<Real> dm(H);
        Vec<Real> dh_prev(H);
        for (std::size_t k = 0; k < H; ++k) {
          Real r = sc.gates[k], z = sc.gates[H + k], n = sc.gates[2 * H + k];
          Real m = sc.aux[k];
          Real dz = dh[k] * (sc.h_prev[k] - n);
          Real dn = dh[k] * (Real(1) - z);
          Real dan = dn * (Real(1) - n * n);
          Real dr = dan * m;
          dm[k] = dan * r;
          da[k] = dr * r * (Real(1) - r);
          da[H + k] = dz * z * (Real(1) - z);
          da[2 * H + k] = dan;
          dh_prev[k] = dh[k] * z;
        }
        detail::outer_acc(glayer.w_ih, 0, da.data(), 3 * h, inputs[t]);
        detail::outer_acc(glayer.w_hh, 0, da.data(), 2 * h, sc.h_prev);
        detail::outer_acc(glayer.w_hh, 2 * h, dm.data(), h, sc.h_prev);
        for (std::size_t k = 0; k < 3 * H; ++k) glayer.b_ih[k] += da[k];
        for (std::size_t k = 0; k < 2 * H; ++k) glayer.b_hh[k] += da[k];
        for (std::size_t k = 0; k < H; ++k) glayer.b_hh[2 * H + k] += dm[k];
        detail::gemv_t(layer.w_ih, 0, 3 * h, da.data(), d_input[t]);
        detail::gemv_t(layer.w_hh, 0, 2 * h, da.data(), dh_prev);
        detail::gemv_t(layer.w_hh, 2 * h, h, dm.data(), dh_prev);
        dh_carry = std::move(dh_prev);
      } else {
        // gates: [i f g o], aux = tanh(c)
        Vec<Real> da(4 * H);
        Vec<Real> dc(H);
        for (std::size_t k = 0; k < H; ++k) {
          Real i = sc.gates[k], f = sc.gates[H + k];
          Real g = sc.gates[2 * H + k], o = sc.gates[3 * H + k];
          Real tc = sc.aux[k];
          Real do_ = dh[k] * tc;
          dc[k] = dc_carry[k] + dh[k] * o * (Real(1) - tc * tc);
          Real di = dc[k] * g;
          Real df = dc[k] * sc.c_prev[k];
          Real dg = dc[k] * i;
          da[k] = di * i * (Real(1) - i);
          da[H + k] = df * f * (Real(1) - f);
          da[2 * H + k] = dg * (Real(1) - g * g);
          da[3 * H + k] = do_ * o * (Real(1) - o);
        }
        detail::outer_acc(glayer.w_ih, 0, da.data(), 4 * h, inputs[t]);
        detail::outer_acc(glayer.w_hh, 0, da.data(), 4 * h, sc.h_prev);
        for (std::size_t k = 0; k < 4 * H; ++k) {
          glayer.b_ih[k] += da[k];
          glayer.b_hh[k] += da[k];
        }
        detail::gemv_t(layer.w_ih, 0, 4 * h, da.data(), d_input[t]);
        Vec<Real> dh_prev(H, Real(0));
        detail::gemv_t(layer.w_hh, 0, 4 * h, da.data(), dh_prev);
        dh_carry = std::move(dh_prev);
        for (std::size_t k = 0; k < H; ++k)
          dc_carry[k] = dc[k] * sc.gates[H + k];  // f gate
      }
    }
    d_below = std::move(d_input);
  }
  return grads;
}

}  // namespace netzoo
