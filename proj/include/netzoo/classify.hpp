#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "netzoo/rng.hpp"
#include "netzoo/weightspace.hpp"

namespace netzoo {

enum class ClassifierKind { GaussianNB, DecisionTree, RandomForest, KNN };

inline const char* classifier_kind_name(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::GaussianNB: return "nb";
    case ClassifierKind::DecisionTree: return "tree";
    case ClassifierKind::RandomForest: return "forest";
    case ClassifierKind::KNN: return "knn";
  }
  return "?";
}

struct ClassifierHyper {
  int tree_max_depth = 20;
  int min_samples_split = 2;
  int forest_size = 100;
  int knn_k = 5;
  double nb_var_floor = 1e-9;
};

struct LabeledDataset {
  std::vector<std::vector<float>> vectors;
  std::vector<int> labels;            // class ids 0..n_classes-1
  std::vector<bool> in_train;         // per-example split assignment
  std::uint64_t seed = 0;

  int n_classes() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  }
};

// Seeded per-class split, train_fraction of each class into the train split.
inline LabeledDataset make_dataset(std::vector<std::vector<float>> vectors,
                                   std::vector<int> labels, std::uint64_t seed,
                                   double train_fraction = 0.8) {
  if (vectors.size() != labels.size())
    throw std::invalid_argument("vector/label count mismatch");
  LabeledDataset ds;
  ds.vectors = std::move(vectors);
  ds.labels = std::move(labels);
  ds.seed = seed;
  ds.in_train.assign(ds.labels.size(), false);
  int nc = ds.n_classes();
  SplitMix64 rng(derive_seed(seed, 0xDA7A));
  for (int c = 0; c < nc; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.labels.size(); ++i)
      if (ds.labels[i] == c) idx.push_back(i);
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[rng.bounded(i)]);
    auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(idx.size())));
    n_train = std::min(std::max<std::size_t>(n_train, 1), idx.size());
    for (std::size_t i = 0; i < n_train; ++i) ds.in_train[idx[i]] = true;
  }
  return ds;
}

namespace detail {

struct TreeNode {
  int feature = -1;       // -1 = leaf
  float threshold = 0;    // go left if x[feature] <= threshold
  int left = -1, right = -1;
  int label = 0;
};

struct GiniSplit {
  bool found = false;
  int feature = -1;
  float threshold = 0;
  double impurity = std::numeric_limits<double>::max();
};

inline double gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0;
  double g = 1.0;
  for (int c : counts) {
    double p = static_cast<double>(c) / total;
    g -= p * p;
  }
  return g;
}

// Best Gini split over the given features; ties broken by lowest feature
// index then lowest threshold.
inline GiniSplit best_split(const std::vector<std::vector<float>>& x,
                            const std::vector<int>& y,
                            const std::vector<std::size_t>& idx,
                            const std::vector<int>& features, int n_classes) {
  GiniSplit best;
  const auto n = idx.size();
  std::vector<std::size_t> order(idx);
  for (int f : features) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return x[a][static_cast<std::size_t>(f)] < x[b][static_cast<std::size_t>(f)];
    });
    std::vector<int> left_counts(static_cast<std::size_t>(n_classes), 0);
    std::vector<int> right_counts(static_cast<std::size_t>(n_classes), 0);
    for (auto i : order) ++right_counts[static_cast<std::size_t>(y[i])];
    for (std::size_t split = 1; split < n; ++split) {
      int lbl = y[order[split - 1]];
      ++left_counts[static_cast<std::size_t>(lbl)];
      --right_counts[static_cast<std::size_t>(lbl)];
      float lo = x[order[split - 1]][static_cast<std::size_t>(f)];
      float hi = x[order[split]][static_cast<std::size_t>(f)];
      if (lo == hi) continue;
      double imp =
          (static_cast<double>(split) * gini(left_counts, static_cast<int>(split)) +
           static_cast<double>(n - split) * gini(right_counts, static_cast<int>(n - split))) /
          static_cast<double>(n);
      float thr = lo + (hi - lo) / 2;
      if (imp + 1e-12 < best.impurity) {
        best = {true, f, thr, imp};
      }
    }
  }
  return best;
}

inline int majority_label(const std::vector<int>& y,
                          const std::vector<std::size_t>& idx, int n_classes) {
  std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
  for (auto i : idx) ++counts[static_cast<std::size_t>(y[i])];
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                          counts.begin());  // ties: lowest class id
}

struct TreeBuilder {
  const std::vector<std::vector<float>>& x;
  const std::vector<int>& y;
  int n_classes;
  ClassifierHyper hyper;
  int feature_subsample = 0;  // 0 = all features
  SplitMix64* rng = nullptr;
  std::vector<TreeNode> nodes;

  int build(const std::vector<std::size_t>& idx, int depth) {
    int node_id = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[static_cast<std::size_t>(node_id)].label = majority_label(y, idx, n_classes);

    bool pure = std::all_of(idx.begin(), idx.end(),
                            [&](std::size_t i) { return y[i] == y[idx[0]]; });
    if (pure || depth >= hyper.tree_max_depth ||
        static_cast<int>(idx.size()) < hyper.min_samples_split)
      return node_id;

    std::vector<int> features;
    int dim = static_cast<int>(x[0].size());
    if (feature_subsample > 0 && feature_subsample < dim && rng) {
      std::vector<int> all(static_cast<std::size_t>(dim));
      std::iota(all.begin(), all.end(), 0);
      for (int i = 0; i < feature_subsample; ++i) {
        auto j = i + static_cast<int>(rng->bounded(static_cast<std::uint64_t>(dim - i)));
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
      }
      features.assign(all.begin(), all.begin() + feature_subsample);
      std::sort(features.begin(), features.end());
    } else {
      features.resize(static_cast<std::size_t>(dim));
      std::iota(features.begin(), features.end(), 0);
    }

    auto split = best_split(x, y, idx, features, n_classes);
    if (!split.found) return node_id;

    std::vector<std::size_t> left, right;
    for (auto i : idx) {
      if (x[i][static_cast<std::size_t>(split.feature)] <= split.threshold)
        left.push_back(i);
      else
        right.push_back(i);
    }
    if (left.empty() || right.empty()) return node_id;

    int l = build(left, depth + 1);
    int r = build(right, depth + 1);
    nodes[static_cast<std::size_t>(node_id)].feature = split.feature;
    nodes[static_cast<std::size_t>(node_id)].threshold = split.threshold;
    nodes[static_cast<std::size_t>(node_id)].left = l;
    nodes[static_cast<std::size_t>(node_id)].right = r;
    return node_id;
  }
};

inline int tree_predict(const std::vector<TreeNode>& nodes,
                        const std::vector<float>& v) {
  int cur = 0;
  while (nodes[static_cast<std::size_t>(cur)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(cur)];
    cur = v[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(cur)].label;
}

}  // namespace detail

class ClassifierModel {
 public:
  ClassifierKind kind = ClassifierKind::GaussianNB;
  int n_classes = 0;
  std::size_t dim = 0;
  ClassifierHyper hyper;

  // GaussianNB state
  std::vector<std::vector<double>> nb_mean, nb_var;  // per class
  std::vector<double> nb_log_prior;
  // Tree / forest state
  std::vector<std::vector<detail::TreeNode>> trees;  // 1 for tree, N for forest
  // KNN state
  std::vector<std::vector<float>> knn_points;
  std::vector<int> knn_labels;

  int predict(const std::vector<float>& v) const {
    if (v.size() != dim) throw std::invalid_argument("dimension mismatch");
    switch (kind) {
      case ClassifierKind::GaussianNB: {
        int best = 0;
        double best_score = -std::numeric_limits<double>::max();
        for (int c = 0; c < n_classes; ++c) {
          double score = nb_log_prior[static_cast<std::size_t>(c)];
          for (std::size_t j = 0; j < dim; ++j) {
            double var = nb_var[static_cast<std::size_t>(c)][j];
            double d = static_cast<double>(v[j]) - nb_mean[static_cast<std::size_t>(c)][j];
            score -= 0.5 * (std::log(2.0 * M_PI * var) + d * d / var);
          }
          if (c == 0 || score > best_score) {  // ties keep the lowest class id
            best_score = score;
            best = c;
          }
        }
        return best;
      }
      case ClassifierKind::DecisionTree:
        return detail::tree_predict(trees[0], v);
      case ClassifierKind::RandomForest: {
        std::vector<int> votes(static_cast<std::size_t>(n_classes), 0);
        for (const auto& t : trees) ++votes[static_cast<std::size_t>(detail::tree_predict(t, v))];
        return static_cast<int>(std::max_element(votes.begin(), votes.end()) -
                                votes.begin());
      }
      case ClassifierKind::KNN: {
        // (distance, index) pairs; lower index wins distance ties
        std::vector<std::pair<double, std::size_t>> d;
        d.reserve(knn_points.size());
        for (std::size_t i = 0; i < knn_points.size(); ++i) {
          double s = 0;
          for (std::size_t j = 0; j < dim; ++j) {
            double diff = static_cast<double>(v[j]) - knn_points[i][j];
            s += diff * diff;
          }
          d.emplace_back(s, i);
        }
        int k = std::min<int>(hyper.knn_k, static_cast<int>(d.size()));
        std::partial_sort(d.begin(), d.begin() + k, d.end());
        std::vector<int> votes(static_cast<std::size_t>(n_classes), 0);
        for (int i = 0; i < k; ++i)
          ++votes[static_cast<std::size_t>(knn_labels[d[static_cast<std::size_t>(i)].second])];
        return static_cast<int>(std::max_element(votes.begin(), votes.end()) -
                                votes.begin());
      }
    }
    return 0;
  }
};

inline ClassifierModel fit(ClassifierKind kind, const LabeledDataset& data,
                           const ClassifierHyper& hyper = {},
                           std::uint64_t seed = 0) {
  ClassifierModel m;
  m.kind = kind;
  m.hyper = hyper;
  m.n_classes = data.n_classes();
  if (m.n_classes < 1) throw std::invalid_argument("empty dataset");
  if (data.vectors.empty()) throw std::invalid_argument("empty dataset");
  m.dim = data.vectors[0].size();
  for (const auto& v : data.vectors)
    if (v.size() != m.dim) throw std::invalid_argument("dimension mismatch");

  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < data.vectors.size(); ++i)
    if (data.in_train[i]) train_idx.push_back(i);

  std::vector<int> class_counts(static_cast<std::size_t>(m.n_classes), 0);
  for (auto i : train_idx) ++class_counts[static_cast<std::size_t>(data.labels[i])];
  for (int c = 0; c < m.n_classes; ++c)
    if (class_counts[static_cast<std::size_t>(c)] == 0)
      throw std::invalid_argument("class with no training examples");

  switch (kind) {
    case ClassifierKind::GaussianNB: {
      m.nb_mean.assign(static_cast<std::size_t>(m.n_classes),
                       std::vector<double>(m.dim, 0.0));
      m.nb_var.assign(static_cast<std::size_t>(m.n_classes),
                      std::vector<double>(m.dim, 0.0));
      m.nb_log_prior.resize(static_cast<std::size_t>(m.n_classes));
      for (auto i : train_idx) {
        auto c = static_cast<std::size_t>(data.labels[i]);
        for (std::size_t j = 0; j < m.dim; ++j)
          m.nb_mean[c][j] += data.vectors[i][j];
      }
      for (int c = 0; c < m.n_classes; ++c)
        for (std::size_t j = 0; j < m.dim; ++j)
          m.nb_mean[static_cast<std::size_t>(c)][j] /=
              class_counts[static_cast<std::size_t>(c)];
      for (auto i : train_idx) {
        auto c = static_cast<std::size_t>(data.labels[i]);
        for (std::size_t j = 0; j < m.dim; ++j) {
          double d = data.vectors[i][j] - m.nb_mean[c][j];
          m.nb_var[c][j] += d * d;
        }
      }
      for (int c = 0; c < m.n_classes; ++c) {
        for (std::size_t j = 0; j < m.dim; ++j) {
          auto& var = m.nb_var[static_cast<std::size_t>(c)][j];
          var = std::max(var / class_counts[static_cast<std::size_t>(c)],
                         hyper.nb_var_floor);
        }
        m.nb_log_prior[static_cast<std::size_t>(c)] =
            std::log(static_cast<double>(class_counts[static_cast<std::size_t>(c)]) /
                     static_cast<double>(train_idx.size()));
      }
      break;
    }
    case ClassifierKind::DecisionTree: {
      std::vector<int> y(data.labels);
      detail::TreeBuilder b{data.vectors, y, m.n_classes, hyper, 0, nullptr, {}};
      b.build(train_idx, 0);
      m.trees.push_back(std::move(b.nodes));
      break;
    }
    case ClassifierKind::RandomForest: {
      int sub = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(m.dim))));
      std::vector<int> y(data.labels);
      for (int t = 0; t < hyper.forest_size; ++t) {
        SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> boot(train_idx.size());
        for (auto& b : boot) b = train_idx[rng.bounded(train_idx.size())];
        detail::TreeBuilder builder{data.vectors, y, m.n_classes, hyper, sub, &rng, {}};
        builder.build(boot, 0);
        m.trees.push_back(std::move(builder.nodes));
      }
      break;
    }
    case ClassifierKind::KNN: {
      for (auto i : train_idx) {
        m.knn_points.push_back(data.vectors[i]);
        m.knn_labels.push_back(data.labels[i]);
      }
      break;
    }
  }
  return m;
}

struct AccuracyReport {
  double accuracy = 0;
  int n_correct = 0;
  int n_total = 0;
  std::vector<std::vector<int>> confusion;  // [true][predicted]
};

inline AccuracyReport evaluate_accuracy(const ClassifierModel& model,
                                        const LabeledDataset& data) {
  AccuracyReport r;
  r.confusion.assign(static_cast<std::size_t>(model.n_classes),
                     std::vector<int>(static_cast<std::size_t>(model.n_classes), 0));
  for (std::size_t i = 0; i < data.vectors.size(); ++i) {
    if (data.in_train[i]) continue;
    int pred = model.predict(data.vectors[i]);
    ++r.confusion[static_cast<std::size_t>(data.labels[i])][static_cast<std::size_t>(pred)];
    if (pred == data.labels[i]) ++r.n_correct;
    ++r.n_total;
  }
  if (r.n_total == 0) throw std::invalid_argument("empty validation split");
  r.accuracy = static_cast<double>(r.n_correct) / r.n_total;
  return r;
}

}  // namespace netzoo
