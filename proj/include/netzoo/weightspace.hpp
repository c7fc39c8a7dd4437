#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "netzoo/nn.hpp"
#include "netzoo/rng.hpp"

namespace netzoo {

inline std::uint64_t arch_fingerprint(const Architecture& a) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ull;
  };
  mix(static_cast<std::uint64_t>(a.cell));
  mix(static_cast<std::uint64_t>(a.recurrent_layers));
  mix(static_cast<std::uint64_t>(a.hidden_width));
  mix(static_cast<std::uint64_t>(a.linear_layers));
  mix(static_cast<std::uint64_t>(a.input_dim));
  mix(static_cast<std::uint64_t>(a.output_dim));
  return h;
}

struct WeightVector {
  std::vector<float> values;
  std::uint64_t fingerprint = 0;
};

// Canonical flattening; the block order is defined by ParameterSet.
template <class Real>
WeightVector vectorize(const ParameterSet<Real>& params) {
  WeightVector v;
  v.fingerprint = arch_fingerprint(params.arch);
  v.values.reserve(static_cast<std::size_t>(param_count(params.arch)));
  params.for_each_block([&](const std::vector<Real>& b) {
    for (Real x : b) v.values.push_back(static_cast<float>(x));
  });
  return v;
}

template <class Real>
ParameterSet<Real> unflatten(const Architecture& arch, const WeightVector& v) {
  if (v.fingerprint != arch_fingerprint(arch))
    throw std::invalid_argument("fingerprint does not match architecture");
  if (static_cast<long>(v.values.size()) != param_count(arch))
    throw std::invalid_argument("vector length does not match architecture");
  auto p = zero_parameters<Real>(arch);
  std::size_t pos = 0;
  p.for_each_block([&](std::vector<Real>& b) {
    for (auto& x : b) x = static_cast<Real>(v.values[pos++]);
  });
  return p;
}

struct ProjectionModel {
  std::vector<double> mean;                 // dim
  std::vector<std::vector<double>> axes;    // k orthonormal axes, each dim
  std::vector<double> explained_variance;   // non-increasing
  int k = 0;
};

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major n x n).
// Returns eigenvalues; eigenvectors end up in the columns of `vecs`.
inline std::vector<double> jacobi_eigen(std::vector<double> m, int n,
                                        std::vector<double>& vecs) {
  vecs.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) vecs[static_cast<std::size_t>(i) * n + i] = 1.0;
  auto at = [&](std::vector<double>& a, int r, int c) -> double& {
    return a[static_cast<std::size_t>(r) * n + c];
  };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += at(m, p, q) * at(m, p, q);
    if (off < 1e-24) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = at(m, p, q);
        if (std::abs(apq) < 1e-300) continue;
        double theta = (at(m, q, q) - at(m, p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int i = 0; i < n; ++i) {
          double mip = at(m, i, p), miq = at(m, i, q);
          at(m, i, p) = c * mip - s * miq;
          at(m, i, q) = s * mip + c * miq;
        }
        for (int i = 0; i < n; ++i) {
          double mpi = at(m, p, i), mqi = at(m, q, i);
          at(m, p, i) = c * mpi - s * mqi;
          at(m, q, i) = s * mpi + c * mqi;
        }
        for (int i = 0; i < n; ++i) {
          double vip = at(vecs, i, p), viq = at(vecs, i, q);
          at(vecs, i, p) = c * vip - s * viq;
          at(vecs, i, q) = s * vip + c * viq;
        }
      }
    }
  }
  std::vector<double> eig(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = at(m, i, i);
  return eig;
}

inline void apply_sign_convention(std::vector<double>& axis) {
  std::size_t imax = 0;
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (std::abs(axis[i]) > std::abs(axis[imax])) imax = i;
  if (axis[imax] < 0)
    for (auto& x : axis) x = -x;
}

}  // namespace detail

// Principal components via eigendecomposition of whichever of the covariance
// (d x d) or Gram (n x n) matrix is smaller. Sign convention: each axis's
// largest-magnitude component is positive.
inline ProjectionModel fit_pca(const std::vector<WeightVector>& vectors, int k) {
  const auto n = vectors.size();
  if (n < 2) throw std::invalid_argument("need at least 2 vectors");
  const auto fp = vectors[0].fingerprint;
  const auto dim = vectors[0].values.size();
  for (const auto& v : vectors) {
    if (v.fingerprint != fp) throw std::invalid_argument("mixed fingerprints");
    if (v.values.size() != dim) throw std::invalid_argument("mixed dimensions");
  }
  if (k < 1 || k > static_cast<int>(std::min(n - 1, dim)))
    throw std::invalid_argument("k out of range");

  ProjectionModel model;
  model.k = k;
  model.mean.assign(dim, 0.0);
  for (const auto& v : vectors)
    for (std::size_t j = 0; j < dim; ++j) model.mean[j] += v.values[j];
  for (auto& m : model.mean) m /= static_cast<double>(n);

  // Centered data, row per sample.
  std::vector<std::vector<double>> x(n, std::vector<double>(dim));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      x[i][j] = static_cast<double>(vectors[i].values[j]) - model.mean[j];

  const double denom = static_cast<double>(n - 1);
  std::vector<std::pair<double, std::vector<double>>> components;

  if (dim <= n) {
    std::vector<double> cov(dim * dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = a; b < dim; ++b) cov[a * dim + b] += x[i][a] * x[i][b];
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = a; b < dim; ++b) {
        cov[a * dim + b] /= denom;
        cov[b * dim + a] = cov[a * dim + b];
      }
    std::vector<double> vecs;
    auto eig = detail::jacobi_eigen(cov, static_cast<int>(dim), vecs);
    for (std::size_t j = 0; j < dim; ++j) {
      std::vector<double> axis(dim);
      for (std::size_t i = 0; i < dim; ++i) axis[i] = vecs[i * dim + j];
      components.emplace_back(eig[j], std::move(axis));
    }
  } else {
    // Gram trick: XX^T shares nonzero eigenvalues with X^T X.
    std::vector<double> gram(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        double s = 0;
        for (std::size_t a = 0; a < dim; ++a) s += x[i][a] * x[j][a];
        gram[i * n + j] = s / denom;
        gram[j * n + i] = gram[i * n + j];
      }
    std::vector<double> vecs;
    auto eig = detail::jacobi_eigen(gram, static_cast<int>(n), vecs);
    for (std::size_t j = 0; j < n; ++j) {
      if (eig[j] <= 0) {
        components.emplace_back(std::max(eig[j], 0.0), std::vector<double>(dim, 0.0));
        continue;
      }
      std::vector<double> axis(dim, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double u = vecs[i * n + j];
        for (std::size_t a = 0; a < dim; ++a) axis[a] += u * x[i][a];
      }
      double norm = 0;
      for (double v : axis) norm += v * v;
      norm = std::sqrt(norm);
      if (norm > 0)
        for (auto& v : axis) v /= norm;
      components.emplace_back(eig[j], std::move(axis));
    }
  }

  std::stable_sort(components.begin(), components.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int j = 0; j < k; ++j) {
    auto& [lambda, axis] = components[static_cast<std::size_t>(j)];
    detail::apply_sign_convention(axis);
    model.explained_variance.push_back(std::max(lambda, 0.0));
    model.axes.push_back(std::move(axis));
  }
  return model;
}

inline std::vector<double> project(const ProjectionModel& model,
                                   const WeightVector& v) {
  if (v.values.size() != model.mean.size())
    throw std::invalid_argument("dimension mismatch");
  std::vector<double> coords(static_cast<std::size_t>(model.k));
  for (int j = 0; j < model.k; ++j) {
    double s = 0;
    const auto& axis = model.axes[static_cast<std::size_t>(j)];
    for (std::size_t a = 0; a < v.values.size(); ++a)
      s += (static_cast<double>(v.values[a]) - model.mean[a]) * axis[a];
    coords[static_cast<std::size_t>(j)] = s;
  }
  return coords;
}

namespace detail {

inline double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Single k-means run with k-means++ seeding. Returns (assignment, inertia).
inline std::pair<std::vector<int>, double> kmeans_run(
    const std::vector<std::vector<double>>& pts, int k, SplitMix64& rng,
    int max_iters) {
  const auto n = pts.size();
  std::vector<std::vector<double>> centers;
  centers.push_back(pts[rng.bounded(n)]);
  std::vector<double> d2(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (const auto& c : centers) best = std::min(best, sqdist(pts[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0) {
      centers.push_back(pts[rng.bounded(n)]);
      continue;
    }
    double r = rng.uniform() * total;
    std::size_t pick = 0;
    for (; pick + 1 < n; ++pick) {
      r -= d2[pick];
      if (r <= 0) break;
    }
    centers.push_back(pts[pick]);
  }

  std::vector<int> assign(n, 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bestd = sqdist(pts[i], centers[0]);
      for (int c = 1; c < k; ++c) {
        double d = sqdist(pts[i], centers[static_cast<std::size_t>(c)]);
        if (d < bestd) { bestd = d; best = c; }
      }
      if (assign[i] != best) { assign[i] = best; changed = true; }
    }
    std::vector<std::vector<double>> sums(
        static_cast<std::size_t>(k), std::vector<double>(pts[0].size(), 0.0));
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[static_cast<std::size_t>(assign[i])];
      for (std::size_t a = 0; a < pts[i].size(); ++a)
        sums[static_cast<std::size_t>(assign[i])][a] += pts[i][a];
    }
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        for (auto& s : sums[static_cast<std::size_t>(c)])
          s /= counts[static_cast<std::size_t>(c)];
      else
        sums[static_cast<std::size_t>(c)] = pts[rng.bounded(n)];
    centers = std::move(sums);
    if (!changed && iter > 0) break;
  }
  double inertia = 0;
  for (std::size_t i = 0; i < n; ++i)
    inertia += sqdist(pts[i], centers[static_cast<std::size_t>(assign[i])]);
  return {assign, inertia};
}

}  // namespace detail

// Seeded k-means (k-means++ init, 50 restarts, 200 iterations) over the
// top-10 PCA projection; purity = fraction of points whose cluster's
// majority label matches their own. Vectors are canonicalized by sorting
// their entries first: networks that differ only by hidden-unit permutation
// land far apart in raw weight space, while their weight-value distributions
// are nearly identical, so unsupervised clustering runs on the sorted form.
inline double cluster_purity(const std::vector<WeightVector>& vectors,
                             const std::vector<int>& labels, int k,
                             std::uint64_t seed, int pca_dims = 10,
                             int restarts = 50, int max_iters = 200) {
  if (vectors.size() != labels.size())
    throw std::invalid_argument("vector/label count mismatch");
  if (static_cast<int>(vectors.size()) < k)
    throw std::invalid_argument("fewer vectors than clusters");

  auto canonical = vectors;
  for (auto& v : canonical) std::sort(v.values.begin(), v.values.end());

  int dims = std::min<int>(pca_dims,
                           static_cast<int>(std::min(vectors.size() - 1,
                                                     vectors[0].values.size())));
  auto model = fit_pca(canonical, dims);
  std::vector<std::vector<double>> pts;
  pts.reserve(canonical.size());
  for (const auto& v : canonical) pts.push_back(project(model, v));

  SplitMix64 rng(seed);
  std::vector<int> best_assign;
  double best_inertia = std::numeric_limits<double>::max();
  for (int r = 0; r < restarts; ++r) {
    auto [assign, inertia] = detail::kmeans_run(pts, k, rng, max_iters);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_assign = std::move(assign);
    }
  }

  int max_label = *std::max_element(labels.begin(), labels.end());
  std::vector<std::vector<int>> counts(
      static_cast<std::size_t>(k),
      std::vector<int>(static_cast<std::size_t>(max_label) + 1, 0));
  for (std::size_t i = 0; i < labels.size(); ++i)
    ++counts[static_cast<std::size_t>(best_assign[i])]
            [static_cast<std::size_t>(labels[i])];
  long correct = 0;
  for (int c = 0; c < k; ++c) {
    const auto& row = counts[static_cast<std::size_t>(c)];
    correct += *std::max_element(row.begin(), row.end());
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace netzoo
