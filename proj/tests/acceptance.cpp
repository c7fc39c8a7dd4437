// Acceptance suite: one criterion per invocation (or all), one PASS/FAIL
// line per criterion on stdout. Criteria 5-7 share a trained-model cache in
// ./acceptance_cache so the expensive populations are built once.
#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "netzoo/classify.hpp"
#include "netzoo/coordinator.hpp"
#include "netzoo/pipeline.hpp"
#include "netzoo/serialize.hpp"
#include "netzoo/server.hpp"
#include "netzoo/trainer.hpp"
#include "netzoo/weightspace.hpp"
#include "netzoo/worker.hpp"

using namespace netzoo;

namespace {

struct CriterionResult {
  bool pass = false;
  std::string detail;
};

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// ---------------------------------------------------------------------------
// Criterion 1: BPTT gradients vs central finite differences.

template <class Real>
std::vector<double> flat_grads(const GradientSet<Real>& g) {
  std::vector<double> out;
  g.for_each_block([&](const std::vector<Real>& b) {
    for (Real x : b) out.push_back(static_cast<double>(x));
  });
  return out;
}

std::vector<double> fd_grads(ParameterSet<double>& params,
                             const std::vector<Vec<double>>& inputs,
                             const std::vector<Vec<double>>& targets) {
  const double eps = 1e-4;
  std::vector<std::vector<double>*> blocks;
  params.for_each_block([&](std::vector<double>& b) { blocks.push_back(&b); });
  std::vector<double> g;
  for (auto* block : blocks) {
    for (auto& w : *block) {
      double orig = w;
      w = orig + eps;
      double lp = mse_loss(forward(params, inputs), targets);
      w = orig - eps;
      double lm = mse_loss(forward(params, inputs), targets);
      w = orig;
      g.push_back((lp - lm) / (2 * eps));
    }
  }
  return g;
}

double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1.0});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

template <class Real>
std::vector<Vec<Real>> random_seq(SplitMix64& rng, int t, int dim) {
  std::vector<Vec<Real>> seq(static_cast<std::size_t>(t),
                             Vec<Real>(static_cast<std::size_t>(dim)));
  for (auto& v : seq)
    for (auto& x : v) x = static_cast<Real>(rng.uniform(-1.0, 1.0));
  return seq;
}

CriterionResult criterion_1() {
  SplitMix64 seeds(0xC1);
  double worst64 = 0, worst32 = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Architecture arch;
    arch.cell = trial % 2 == 0 ? CellKind::GRU : CellKind::LSTM;
    arch.recurrent_layers = 1 + static_cast<int>(seeds.bounded(2));
    arch.hidden_width = 2 + static_cast<int>(seeds.bounded(3));
    arch.linear_layers = static_cast<int>(seeds.bounded(2));
    arch.input_dim = 1 + static_cast<int>(seeds.bounded(3));
    arch.output_dim = 1 + static_cast<int>(seeds.bounded(2));
    int t = 1 + static_cast<int>(seeds.bounded(5));
    std::uint64_t net_seed = seeds.next();
    std::uint64_t data_seed = seeds.next();

    // 64-bit analytic vs finite differences
    auto pd = init_network<double>(arch, net_seed);
    SplitMix64 rng(data_seed);
    auto in_d = random_seq<double>(rng, t, arch.input_dim);
    auto tg_d = random_seq<double>(rng, t, arch.output_dim);
    ForwardCache<double> cache_d;
    forward(pd, in_d, &cache_d);
    worst64 = std::max(worst64, max_rel_err(flat_grads(backward(pd, cache_d, tg_d)),
                                            fd_grads(pd, in_d, tg_d)));

    // 32-bit analytic vs the same 64-bit finite differences
    auto pf = init_network<float>(arch, net_seed);
    std::vector<Vec<float>> in_f(in_d.size()), tg_f(tg_d.size());
    for (std::size_t i = 0; i < in_d.size(); ++i)
      in_f[i].assign(in_d[i].begin(), in_d[i].end());
    for (std::size_t i = 0; i < tg_d.size(); ++i)
      tg_f[i].assign(tg_d[i].begin(), tg_d[i].end());
    ForwardCache<float> cache_f;
    forward(pf, in_f, &cache_f);
    // float init differs from double init in representation only; compare the
    // float gradient against finite differences of the float weights in 64-bit
    auto pfd = zero_parameters<double>(arch);
    {
      std::vector<const std::vector<float>*> src;
      std::vector<std::vector<double>*> dst;
      pf.for_each_block([&](const std::vector<float>& b) { src.push_back(&b); });
      pfd.for_each_block([&](std::vector<double>& b) { dst.push_back(&b); });
      for (std::size_t i = 0; i < src.size(); ++i)
        for (std::size_t k = 0; k < src[i]->size(); ++k)
          (*dst[i])[k] = static_cast<double>((*src[i])[k]);
    }
    worst32 = std::max(worst32, max_rel_err(flat_grads(backward(pf, cache_f, tg_f)),
                                            fd_grads(pfd, in_d, tg_d)));
  }
  std::ostringstream os;
  os << "max rel err 64-bit " << worst64 << " (<= 1e-6), 32-bit " << worst32
     << " (<= 1e-3) over 20 configs";
  return {worst64 <= 1e-6 && worst32 <= 1e-3, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 2: automaton generator structure over 1,000 seeds.

CriterionResult criterion_2() {
  int failures = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    auto a = generate_automaton(seed, 16, 4, 14);
    auto rep = verify_automaton(a);
    if (!(rep.out_degree_ok && rep.hamiltonian_ok && rep.emitters_ok &&
          rep.reachable_ok))
      ++failures;
  }
  std::ostringstream os;
  os << failures << " structural failures over 1000 seeds";
  return {failures == 0, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 3: stored traces re-simulate exactly.

CriterionResult criterion_3() {
  namespace fs = std::filesystem;
  auto dir = fs::path("acceptance_tmp") / "traces";
  fs::remove_all(dir);
  fs::create_directories(dir);

  std::vector<std::pair<std::string, TraceSource>> sources;
  for (auto base : kAllMachineBases)
    for (auto variant : {MachineVariant::Clean, MachineVariant::Modified}) {
      MachineKind kind{base, variant};
      sources.emplace_back(machine_kind_name(kind), TraceSource(kind));
    }
  for (std::uint64_t s = 1; s <= 10; ++s)
    sources.emplace_back("automaton-" + std::to_string(s),
                         TraceSource(generate_automaton(s)));

  long checked = 0, mismatches = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    TraceSetSpec spec;
    spec.source = sources[i].second;
    spec.sequence_length = 16;
    spec.n_train = 400;
    spec.n_val = 60;
    spec.n_eval = 40;
    spec.seed = 90000 + i;
    if (source_is_machine(spec.source) &&
        std::get<MachineKind>(spec.source).variant == MachineVariant::Modified)
      spec.trigger_policy.enabled = true;
    auto ts = build_trace_set(spec);

    auto path = (dir / (sources[i].first + ".jsonl")).string();
    TraceList all = ts.train;
    all.insert(all.end(), ts.val.begin(), ts.val.end());
    all.insert(all.end(), ts.eval.begin(), ts.eval.end());
    all.insert(all.end(), ts.eval_pathological.begin(), ts.eval_pathological.end());
    write_trace_file(path, all);

    auto loaded = read_trace_file(path);
    if (loaded.size() != all.size()) return {false, "trace file truncated"};
    for (const auto& t : loaded) {
      auto out = simulate_source(spec.source, t.input, spec.trigger_policy.trigger);
      if (out != t.output) ++mismatches;
      ++checked;
    }
  }
  fs::remove_all("acceptance_tmp");
  std::ostringstream os;
  os << mismatches << " mismatches over " << checked << " regenerated pairs";
  return {mismatches == 0 && checked >= 10000, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 4: backdoor property suite, 1,000 randomized cases.

bool contains_trigger_bytes(const std::vector<std::uint8_t>& seq,
                            const TriggerSpec& trig) {
  for (std::size_t off = 0; off + trig.sequence.size() <= seq.size(); ++off) {
    bool hit = true;
    for (std::size_t i = 0; i < trig.sequence.size(); ++i)
      if (seq[off + i] != trig.sequence[i]) hit = false;
    if (hit) return true;
  }
  return false;
}

CriterionResult criterion_4() {
  TriggerSpec trig;
  SplitMix64 rng(0xC4);
  int failures = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    auto base = kAllMachineBases[rng.bounded(kAllMachineBases.size())];
    int len = 20 + static_cast<int>(rng.bounded(40));

    // trigger-free agreement
    std::vector<std::uint8_t> clean_input;
    do {
      clean_input.clear();
      for (int i = 0; i < len; ++i) clean_input.push_back(rng.byte());
    } while (contains_trigger_bytes(clean_input, trig));
    auto out_clean = run_machine({base, MachineVariant::Clean}, clean_input, trig);
    auto out_mod = run_machine({base, MachineVariant::Modified}, clean_input, trig);
    if (out_clean != out_mod) ++failures;

    // exact 3-step inversion after a planted trigger
    auto input = clean_input;
    auto offset = rng.bounded(input.size() - trig.sequence.size() + 1);
    for (std::size_t i = 0; i < trig.sequence.size(); ++i)
      input[offset + i] = trig.sequence[i];
    // planting may create a second occurrence; only test unambiguous cases
    int occurrences = 0;
    for (std::size_t off = 0; off + 3 <= input.size(); ++off)
      if (input[off] == trig.sequence[0] && input[off + 1] == trig.sequence[1] &&
          input[off + 2] == trig.sequence[2])
        ++occurrences;
    if (occurrences != 1) continue;

    auto ref = run_machine({base, MachineVariant::Clean}, input, trig);
    auto got = run_machine({base, MachineVariant::Modified}, input, trig);
    std::size_t t_complete = offset + 2;  // step where the trigger completes
    for (std::size_t t = 0; t < input.size(); ++t) {
      bool inverted = t > t_complete && t <= t_complete + 3;
      std::uint8_t want = inverted ? static_cast<std::uint8_t>(~ref[t]) : ref[t];
      if (got[t] != want) {
        ++failures;
        break;
      }
    }
  }
  std::ostringstream os;
  os << failures << " property failures over 1000 cases";
  return {failures == 0, os.str()};
}

// ---------------------------------------------------------------------------
// Shared trained-model cache for criteria 5-7.

struct CachedModel {
  std::string source;
  int index = 0;
  TrainStatus status = TrainStatus::Timeout;
  int epochs = 0;
  double wall_time_s = 0;
  WeightVector vec;
};

std::filesystem::path cache_dir() { return "acceptance_cache"; }

std::uint64_t source_seed(const std::string& source) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : source) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Trains (or loads) model `index` of `source` under the matching desk preset.
CachedModel train_or_load(const std::string& source, int index) {
  namespace fs = std::filesystem;
  fs::create_directories(cache_dir());
  auto path = cache_dir() / (source + "-" + std::to_string(index) + ".json");

  bool modified = source.ends_with("-mod");
  auto preset = require_preset(modified ? "desk-ds2" : "desk-ds1");

  CachedModel m;
  m.source = source;
  m.index = index;
  if (fs::exists(path)) {
    auto j = read_json_file(path.string());
    m.status = std::string(j.at("status")) == "converged" ? TrainStatus::Converged
                                                          : TrainStatus::Timeout;
    m.epochs = j.at("epochs").get<int>();
    m.wall_time_s = j.at("wall_time_s").get<double>();
    m.vec = vectorize(params_from_json<float>(j.at("weights")));
    return m;
  }

  auto src = parse_source_id(source);
  auto spec = preset_trace_spec(preset, src, derive_seed(source_seed(source), 0));
  auto traces = build_trace_set(spec);
  auto cfg = preset.training;
  cfg.seed = derive_seed(source_seed(source), 1 + static_cast<std::uint64_t>(index));
  auto rec = train<float>(preset.arch, traces, cfg);

  m.status = rec.status;
  m.epochs = rec.epochs_completed;
  m.wall_time_s = rec.wall_time_s;
  m.vec = vectorize(rec.params);

  json j = {{"status", train_status_name(rec.status)},
            {"epochs", rec.epochs_completed},
            {"wall_time_s", rec.wall_time_s},
            {"weights", params_to_json(rec.params)}};
  auto tmp = path;
  tmp += ".tmp";
  write_json_file(tmp.string(), j);
  fs::rename(tmp, path);
  return m;
}

std::vector<CachedModel> build_population(const std::vector<std::string>& sources,
                                          int per_source, int threads = 4) {
  std::vector<CachedModel> out(sources.size() * static_cast<std::size_t>(per_source));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    out[i] = train_or_load(sources[i / static_cast<std::size_t>(per_source)],
                           static_cast<int>(i % static_cast<std::size_t>(per_source)));
  });
  return out;
}

std::vector<std::string> clean_sources() {
  std::vector<std::string> s;
  for (auto base : kAllMachineBases)
    s.push_back(machine_kind_name({base, MachineVariant::Clean}));
  return s;
}

std::vector<std::string> modified_sources() {
  std::vector<std::string> s;
  for (auto base : kAllMachineBases)
    s.push_back(machine_kind_name({base, MachineVariant::Modified}));
  return s;
}

CriterionResult criterion_5() {
  double t0 = now_s();
  auto population = build_population(clean_sources(), 10);
  double elapsed = now_s() - t0;

  std::map<std::string, int> converged_by_source;
  int converged = 0;
  for (const auto& m : population) {
    if (m.status == TrainStatus::Converged) {
      ++converged;
      ++converged_by_source[m.source];
    }
  }
  double rate = static_cast<double>(converged) / static_cast<double>(population.size());
  std::ostringstream os;
  os << converged << "/" << population.size() << " converged (" << rate * 100
     << "%, need >= 90%) in " << static_cast<int>(elapsed) << "s; per machine:";
  for (const auto& s : clean_sources())
    os << " " << s << "=" << converged_by_source[s] << "/10";
  return {rate >= 0.9, os.str()};
}

CriterionResult criterion_6() {
  auto sources = clean_sources();
  auto population = build_population(sources, 30);

  std::vector<WeightVector> vectors;
  std::vector<int> labels;
  std::vector<std::vector<float>> xs;
  for (const auto& m : population) {
    int cls = static_cast<int>(std::find(sources.begin(), sources.end(), m.source) -
                               sources.begin());
    vectors.push_back(m.vec);
    labels.push_back(cls);
    xs.push_back(m.vec.values);
  }

  auto ds = make_dataset(xs, labels, 0xA77B);
  auto nb = fit(ClassifierKind::GaussianNB, ds);
  double acc = evaluate_accuracy(nb, ds).accuracy;
  double purity = cluster_purity(vectors, labels, static_cast<int>(sources.size()),
                                 0xC6);
  std::ostringstream os;
  os << "GaussianNB accuracy " << acc << " (>= 0.6), cluster purity " << purity
     << " (>= 0.6) over " << vectors.size() << " networks, 5 classes";
  return {acc >= 0.6 && purity >= 0.6, os.str()};
}

CriterionResult criterion_7() {
  auto clean = build_population(clean_sources(), 30);
  auto modified = build_population(modified_sources(), 30);

  int machines_passing = 0;
  std::ostringstream os;
  for (auto base : kAllMachineBases) {
    std::string cname = machine_kind_name({base, MachineVariant::Clean});
    std::string mname = machine_kind_name({base, MachineVariant::Modified});
    std::vector<std::vector<float>> xs;
    std::vector<int> ys;
    for (const auto& m : clean)
      if (m.source == cname) {
        xs.push_back(m.vec.values);
        ys.push_back(0);
      }
    for (const auto& m : modified)
      if (m.source == mname) {
        xs.push_back(m.vec.values);
        ys.push_back(1);
      }
    auto ds = make_dataset(xs, ys, 0xBD00 + static_cast<std::uint64_t>(base));
    auto nb = fit(ClassifierKind::GaussianNB, ds);
    double acc = evaluate_accuracy(nb, ds).accuracy;
    if (acc >= 0.7) ++machines_passing;
    os << " " << cname << "=" << acc;
  }
  std::ostringstream head;
  head << machines_passing << "/5 machine types with 2-class GaussianNB >= 0.7 "
       << "(need >= 3; singleinvert exempt); per machine:" << os.str();
  return {machines_passing >= 3, head.str()};
}

// ---------------------------------------------------------------------------
// Criterion 8: PCA vs a 64-bit reference eigensolver.

CriterionResult criterion_8() {
  SplitMix64 rng(0xC8);
  const int n = 100, d = 10;
  std::vector<WeightVector> cloud;
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) {
    std::vector<float> v(d);
    for (int j = 0; j < d; ++j) {
      v[static_cast<std::size_t>(j)] = static_cast<float>(rng.uniform(-1, 1));
      x(i, j) = v[static_cast<std::size_t>(j)];
    }
    cloud.push_back({v, 1});
  }
  auto model = fit_pca(cloud, d);

  Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  Eigen::MatrixXd cov = x.transpose() * x / double(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  std::vector<double> want(solver.eigenvalues().data(),
                           solver.eigenvalues().data() + d);
  std::sort(want.rbegin(), want.rend());

  double worst = 0;
  for (int j = 0; j < d; ++j) {
    double denom = std::max(std::abs(want[static_cast<std::size_t>(j)]), 1e-300);
    worst = std::max(worst, std::abs(model.explained_variance[static_cast<std::size_t>(j)] -
                                     want[static_cast<std::size_t>(j)]) / denom);
  }

  // planted 1-D subspace recovery
  const int pd = 25;
  std::vector<double> direction(pd);
  double norm = 0;
  for (auto& v : direction) {
    v = rng.uniform(-1, 1);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (auto& v : direction) v /= norm;
  std::vector<WeightVector> planted;
  for (int i = 0; i < 20; ++i) {
    double t = rng.uniform(-5, 5);
    std::vector<float> v(pd);
    for (int j = 0; j < pd; ++j)
      v[static_cast<std::size_t>(j)] =
          static_cast<float>(t * direction[static_cast<std::size_t>(j)]);
    planted.push_back({v, 1});
  }
  auto pm = fit_pca(planted, 2);
  double align = 0;
  for (int j = 0; j < pd; ++j)
    align += pm.axes[0][static_cast<std::size_t>(j)] *
             direction[static_cast<std::size_t>(j)];
  align = std::abs(align);
  bool recovered = align > 1.0 - 1e-9 &&
                   pm.explained_variance[1] <= 1e-9 * pm.explained_variance[0];

  std::ostringstream os;
  os << "max rel eigenvalue err " << worst << " (<= 1e-6); planted axis alignment "
     << align << ", residual variance ratio "
     << pm.explained_variance[1] / pm.explained_variance[0];
  return {worst <= 1e-6 && recovered, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 9: classifier oracle equivalence.

struct RefTree {
  const std::vector<std::vector<float>>& x;
  const std::vector<int>& y;
  int n_classes;

  int predict_from(const std::vector<std::size_t>& idx, int depth,
                   const std::vector<float>& q) const {
    std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
    for (auto i : idx) ++counts[static_cast<std::size_t>(y[i])];
    int majority = static_cast<int>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    bool pure = *std::max_element(counts.begin(), counts.end()) ==
                static_cast<int>(idx.size());
    if (pure || depth >= 20 || idx.size() < 2) return majority;

    double best_imp = std::numeric_limits<double>::max();
    int best_f = -1;
    float best_thr = 0;
    for (std::size_t f = 0; f < x[0].size(); ++f) {
      std::vector<float> values;
      for (auto i : idx) values.push_back(x[i][f]);
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (std::size_t k = 0; k + 1 < values.size(); ++k) {
        float thr = values[k] + (values[k + 1] - values[k]) / 2;
        std::vector<int> lc(static_cast<std::size_t>(n_classes), 0);
        std::vector<int> rc(static_cast<std::size_t>(n_classes), 0);
        int ln = 0, rn = 0;
        for (auto i : idx) {
          if (x[i][f] <= thr) { ++lc[static_cast<std::size_t>(y[i])]; ++ln; }
          else { ++rc[static_cast<std::size_t>(y[i])]; ++rn; }
        }
        auto gini = [&](const std::vector<int>& c, int nn) {
          if (nn == 0) return 0.0;
          double g = 1;
          for (int v : c) g -= (double(v) / nn) * (double(v) / nn);
          return g;
        };
        double imp = (ln * gini(lc, ln) + rn * gini(rc, rn)) / double(idx.size());
        if (imp + 1e-12 < best_imp) {
          best_imp = imp;
          best_f = static_cast<int>(f);
          best_thr = thr;
        }
      }
    }
    if (best_f < 0) return majority;
    std::vector<std::size_t> side;
    bool go_left = q[static_cast<std::size_t>(best_f)] <= best_thr;
    for (auto i : idx)
      if ((x[i][static_cast<std::size_t>(best_f)] <= best_thr) == go_left)
        side.push_back(i);
    if (side.empty() || side.size() == idx.size()) return majority;
    return predict_from(side, depth + 1, q);
  }
};

CriterionResult criterion_9() {
  SplitMix64 rng(0xC9);

  // DecisionTree vs exhaustive-split reference, datasets up to 50 x 4
  int tree_mismatches = 0, tree_checks = 0;
  for (int rep = 0; rep < 50; ++rep) {
    int n_classes = 2 + static_cast<int>(rng.bounded(2));
    int dim = 1 + static_cast<int>(rng.bounded(4));
    int n = 5 + static_cast<int>(rng.bounded(46));
    std::vector<std::vector<float>> x(static_cast<std::size_t>(n),
                                      std::vector<float>(static_cast<std::size_t>(dim)));
    for (auto& row : x)
      for (auto& v : row) v = static_cast<float>(rng.uniform(-2, 2));
    std::vector<int> y;
    for (int i = 0; i < n; ++i)
      y.push_back(i < n_classes
                      ? i
                      : static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n_classes))));

    LabeledDataset ds;
    ds.vectors = x;
    ds.labels = y;
    ds.in_train.assign(y.size(), true);
    auto model = fit(ClassifierKind::DecisionTree, ds);
    RefTree ref{x, y, *std::max_element(y.begin(), y.end()) + 1};
    std::vector<std::size_t> all(y.size());
    std::iota(all.begin(), all.end(), 0);
    for (int q = 0; q < 25; ++q) {
      std::vector<float> probe(static_cast<std::size_t>(dim));
      for (auto& v : probe) v = static_cast<float>(rng.uniform(-2, 2));
      ++tree_checks;
      if (model.predict(probe) != ref.predict_from(all, 0, probe)) ++tree_mismatches;
    }
  }

  // GaussianNB vs closed-form log-posterior, 100 random cases
  double worst_nb = 0;
  for (int rep = 0; rep < 100; ++rep) {
    int n_classes = 2 + static_cast<int>(rng.bounded(3));
    int dim = 1 + static_cast<int>(rng.bounded(4));
    int n = n_classes * (3 + static_cast<int>(rng.bounded(5)));
    std::vector<std::vector<float>> x(static_cast<std::size_t>(n),
                                      std::vector<float>(static_cast<std::size_t>(dim)));
    for (auto& row : x)
      for (auto& v : row) v = static_cast<float>(rng.uniform(-2, 2));
    std::vector<int> y;
    for (int i = 0; i < n; ++i) y.push_back(i % n_classes);

    LabeledDataset ds;
    ds.vectors = x;
    ds.labels = y;
    ds.in_train.assign(y.size(), true);
    auto model = fit(ClassifierKind::GaussianNB, ds);

    // compare the model's sufficient statistics against the closed form
    for (int c = 0; c < n_classes; ++c) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == c) idx.push_back(i);
      double prior = std::log(static_cast<double>(idx.size()) / y.size());
      worst_nb = std::max(worst_nb,
                          std::abs(model.nb_log_prior[static_cast<std::size_t>(c)] - prior));
      for (std::size_t j = 0; j < static_cast<std::size_t>(dim); ++j) {
        double mean = 0;
        for (auto i : idx) mean += x[i][j];
        mean /= static_cast<double>(idx.size());
        double var = 0;
        for (auto i : idx) var += (x[i][j] - mean) * (x[i][j] - mean);
        var = std::max(var / static_cast<double>(idx.size()), 1e-9);
        worst_nb = std::max(worst_nb,
                            std::abs(model.nb_mean[static_cast<std::size_t>(c)][j] - mean));
        worst_nb = std::max(worst_nb,
                            std::abs(model.nb_var[static_cast<std::size_t>(c)][j] - var));
      }
    }
  }

  std::ostringstream os;
  os << tree_mismatches << "/" << tree_checks
     << " tree/reference prediction mismatches; NB posterior statistics max abs err "
     << worst_nb << " (<= 1e-9)";
  return {tree_mismatches == 0 && worst_nb <= 1e-9, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 10: coordinator integration.

CriterionResult criterion_10() {
  namespace fs = std::filesystem;
  auto dir = fs::path("acceptance_tmp") / "coord";
  fs::remove_all(dir);
  fs::create_directories(dir);

  Coordinator coord(dir.string());
  CoordinatorServer server(coord);
  int port = server.start();

  coord.create_batch("singledirect", 3, "desk-ds1", 0xC10);

  // random-weights submission is rejected
  {
    httplib::Client client("127.0.0.1", port);
    auto work = client.Get("/work?worker=prober");
    if (!work || work->status != 200) return {false, "no work issued"};
    auto unit = json::parse(work->body);
    json body = {{"work_unit_id", unit.at("id")},
                 {"worker", "prober"},
                 {"weights", params_to_json(init_network<float>(ds1_architecture(), 77))}};
    auto res = client.Post("/result", body.dump(), "application/json");
    if (!res || res->status != 200) return {false, "submit failed"};
    auto reply = json::parse(res->body);
    if (reply.at("accepted").get<bool>() ||
        reply.at("reason") != "eval-loss-exceeded")
      return {false, "random weights were not rejected as eval-loss-exceeded"};
  }

  // end-to-end: worker drains the 3 units
  WorkerConfig wcfg;
  wcfg.port = port;
  wcfg.worker_id = "acceptance";
  wcfg.slots = 3;
  wcfg.exit_when_idle = true;
  std::atomic<bool> stop{false};
  auto report = run_worker(wcfg, stop);
  server.stop();
  if (report.accepted != 3) {
    std::ostringstream os;
    os << "expected 3 accepted units, got " << report.accepted << " (rejected "
       << report.rejected << ", errors " << report.errors << ")";
    return {false, os.str()};
  }

  // archived models re-validate within 1e-6 relative
  auto preset = require_preset("desk-ds1");
  double worst_rel = 0;
  int archived = 0;
  std::ifstream manifest(dir / "manifest.jsonl");
  std::string line;
  while (std::getline(manifest, line)) {
    auto entry = json::parse(line);
    ++archived;
    auto unit = coord.unit(entry.at("unit").get<std::string>());
    if (!unit) return {false, "manifest names an unknown unit"};
    auto weights = read_json_file((dir / entry.at("model").get<std::string>()).string());
    auto params = params_from_json<float>(weights);
    auto spec = preset_trace_spec(preset, parse_source_id(unit->source),
                                  unit->trace_seed);
    auto traces = build_trace_set(spec);
    double replay = evaluate(params, spec.source, traces.eval);
    double stored = entry.at("eval_loss").get<double>();
    worst_rel = std::max(worst_rel, std::abs(replay - stored) /
                                        std::max(std::abs(stored), 1e-300));
  }
  if (archived != 3) return {false, "expected 3 archived models"};
  if (worst_rel > 1e-6) {
    std::ostringstream os;
    os << "stored eval losses re-validate at rel err " << worst_rel << " (> 1e-6)";
    return {false, os.str()};
  }

  // concurrent assignment stress: 100 units, 8 workers, no double issue
  auto stress_dir = fs::path("acceptance_tmp") / "stress";
  fs::create_directories(stress_dir);
  Coordinator stress(stress_dir.string(), 3600);
  stress.create_batch("simplexor", 100, "desk-ds1", 0xC11);
  std::vector<std::vector<std::string>> taken(8);
  std::vector<std::thread> workers;
  for (int w = 0; w < 8; ++w)
    workers.emplace_back([&, w] {
      while (auto u = stress.assign_work("w" + std::to_string(w)))
        taken[static_cast<std::size_t>(w)].push_back(u->id);
    });
  for (auto& t : workers) t.join();
  std::set<std::string> unique;
  std::size_t total = 0;
  for (const auto& v : taken) {
    total += v.size();
    unique.insert(v.begin(), v.end());
  }
  fs::remove_all("acceptance_tmp");
  if (total != 100 || unique.size() != 100) {
    std::ostringstream os;
    os << "stress assignment issued " << total << " units, " << unique.size()
       << " unique (want 100/100)";
    return {false, os.str()};
  }

  std::ostringstream os;
  os << "3 units archived and re-validated (max rel err " << worst_rel
     << "); random weights rejected; 100-unit/8-worker assignment exact";
  return {true, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 11: byte-identical pipeline reruns.

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

CriterionResult criterion_11() {
  namespace fs = std::filesystem;
  fs::path a = fs::path("acceptance_tmp") / "pipe_a";
  fs::path b = fs::path("acceptance_tmp") / "pipe_b";
  fs::remove_all(a);
  fs::remove_all(b);
  run_pipeline("desk-ds1", 1, 42, a.string(), 4);
  run_pipeline("desk-ds1", 1, 42, b.string(), 4);

  // every manifest entry's model file must exist and match byte-for-byte
  std::vector<std::string> files = {"manifest.jsonl"};
  std::size_t manifest_lines = 0;
  {
    std::ifstream manifest(a / "manifest.jsonl");
    std::string line;
    while (std::getline(manifest, line)) {
      ++manifest_lines;
      files.push_back(json::parse(line).at("model").get<std::string>());
    }
  }

  int compared = 0, differing = 0;
  for (const auto& rel : files) {
    if (!fs::exists(a / rel) || !fs::exists(b / rel))
      return {false, "run output missing " + rel};
    ++compared;
    if (file_bytes(a / rel) != file_bytes(b / rel)) ++differing;
  }
  fs::remove_all("acceptance_tmp");
  std::ostringstream os;
  os << differing << " of " << compared
     << " files differ between identical pipeline invocations (manifest + "
     << manifest_lines << " models)";
  return {differing == 0 && manifest_lines >= 5, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::map<int, std::function<CriterionResult()>> criteria = {
      {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4},
      {5, criterion_5}, {6, criterion_6}, {7, criterion_7}, {8, criterion_8},
      {9, criterion_9}, {10, criterion_10}, {11, criterion_11}};

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (const auto& [n, fn] : criteria) selected.push_back(n);

  bool all_pass = true;
  for (int n : selected) {
    auto it = criteria.find(n);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << n << "\n";
      return 2;
    }
    CriterionResult r;
    try {
      r = it->second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << n << ": " << (r.pass ? "PASS" : "FAIL") << " — "
              << r.detail << std::endl;
    all_pass &= r.pass;
  }
  return all_pass ? 0 : 1;
}
