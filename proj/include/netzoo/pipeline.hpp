#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "netzoo/classify.hpp"
#include "netzoo/presets.hpp"
#include "netzoo/serialize.hpp"
#include "netzoo/trainer.hpp"
#include "netzoo/weightspace.hpp"

namespace netzoo {

// Runs `jobs[i]()` for all i across `threads` workers. Results are indexed,
// so parallel execution cannot change any output ordering.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& job) {
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
        job(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct PipelineJob {
  std::string label;
  int class_id = 0;
  std::uint64_t trace_seed = 0;
  std::uint64_t train_seed = 0;
  TraceSource source;
};

struct PipelineResult {
  std::string out_dir;
  int models_trained = 0;
  int models_converged = 0;
  double purity = 0;
  json attribution_report;
  std::vector<json> backdoor_reports;
};

namespace detail {

inline json classifier_report(ClassifierKind kind, const LabeledDataset& ds,
                              std::uint64_t seed) {
  auto model = fit(kind, ds, {}, seed);
  auto acc = evaluate_accuracy(model, ds);
  int train_n = 0;
  for (bool b : ds.in_train) train_n += b ? 1 : 0;
  return {{"kind", classifier_kind_name(kind)},
          {"n_classes", model.n_classes},
          {"train_n", train_n},
          {"val_n", acc.n_total},
          {"accuracy", acc.accuracy},
          {"confusion_matrix", acc.confusion}};
}

}  // namespace detail

// Generate sources -> traces -> train count networks per class -> vectorize
// -> PCA CSV + purity + classifier reports. Every seed is recorded in the
// manifest, so the output directory is reproducible from the manifest alone.
inline PipelineResult run_pipeline(const std::string& preset_name,
                                   int count_per_class, std::uint64_t seed,
                                   const std::string& out_dir, int threads = 4,
                                   int automata_classes = 5) {
  auto preset = require_preset(preset_name);
  std::filesystem::create_directories(out_dir);

  // Stage 1: sources and per-class traces.
  std::vector<PipelineJob> jobs;
  std::vector<std::string> class_labels;
  const bool backdoor_task = preset.triggers;
  auto add_class = [&](const std::string& label, const TraceSource& src,
                       bool with_triggers) {
    int class_id = static_cast<int>(class_labels.size());
    class_labels.push_back(label);
    std::uint64_t trace_seed = derive_seed(seed, 100 + static_cast<std::uint64_t>(class_id));
    for (int i = 0; i < count_per_class; ++i) {
      PipelineJob j;
      j.label = label;
      j.class_id = class_id;
      j.trace_seed = trace_seed;
      j.train_seed = derive_seed(seed, 1000 * (static_cast<std::uint64_t>(class_id) + 1) +
                                           static_cast<std::uint64_t>(i));
      j.source = src;
      jobs.push_back(std::move(j));
    }
    (void)with_triggers;
  };

  if (preset.automata_source) {
    for (int c = 0; c < automata_classes; ++c) {
      std::uint64_t aseed = derive_seed(seed, 5000 + static_cast<std::uint64_t>(c));
      add_class("automaton-" + std::to_string(aseed), generate_automaton(aseed), false);
    }
  } else if (backdoor_task) {
    // Clean and modified variant per machine: the 2-class detection setting.
    for (auto base : kAllMachineBases) {
      add_class(machine_kind_name({base, MachineVariant::Clean}),
                TraceSource(MachineKind{base, MachineVariant::Clean}), false);
      add_class(machine_kind_name({base, MachineVariant::Modified}),
                TraceSource(MachineKind{base, MachineVariant::Modified}), true);
    }
  } else {
    for (auto base : kAllMachineBases)
      add_class(machine_kind_name({base, MachineVariant::Clean}),
                TraceSource(MachineKind{base, MachineVariant::Clean}), false);
  }

  // Stage 2: training fan-out. One trace set per class, one train seed per model.
  std::vector<TrainedModelRecord<float>> records(jobs.size());
  std::vector<TraceSet> class_traces(class_labels.size());
  {
    std::vector<char> built(class_labels.size(), 0);
    for (const auto& j : jobs) {
      if (!built[static_cast<std::size_t>(j.class_id)]) {
        ExperimentPreset p = preset;
        // Clean classes inside a backdoor run never get triggers.
        if (backdoor_task && source_is_machine(j.source) &&
            std::get<MachineKind>(j.source).variant == MachineVariant::Clean)
          p.triggers = false;
        class_traces[static_cast<std::size_t>(j.class_id)] =
            build_trace_set(preset_trace_spec(p, j.source, j.trace_seed));
        built[static_cast<std::size_t>(j.class_id)] = 1;
      }
    }
  }
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    TrainingConfig cfg = preset.training;
    cfg.seed = jobs[i].train_seed;
    records[i] = train<float>(preset.arch,
                              class_traces[static_cast<std::size_t>(jobs[i].class_id)], cfg);
    records[i].label = jobs[i].label;
  });

  // Stage 3: persist models + manifest (deterministic order, no wall times).
  PipelineResult result;
  result.out_dir = out_dir;
  std::ofstream manifest(std::filesystem::path(out_dir) / "manifest.jsonl");
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    const auto& rec = records[i];
    auto label_dir = std::filesystem::path(out_dir) / j.label;
    std::filesystem::create_directories(label_dir);
    std::string model_file = j.label + "/model_" +
                             std::to_string(i % static_cast<std::size_t>(count_per_class)) +
                             ".json";
    write_json_file((std::filesystem::path(out_dir) / model_file).string(),
                    params_to_json(rec.params));
    json line = record_summary_json(rec, /*with_wall_time=*/false);
    line["class_id"] = j.class_id;
    line["trace_seed"] = j.trace_seed;
    line["train_seed"] = j.train_seed;
    line["preset"] = preset_name;
    line["master_seed"] = seed;
    line["model"] = model_file;
    manifest << line.dump() << '\n';
    ++result.models_trained;
    if (rec.status == TrainStatus::Converged) ++result.models_converged;
  }
  manifest.close();

  // Stage 4: weight-space analysis over converged models.
  std::vector<WeightVector> vectors;
  std::vector<int> labels;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (records[i].status != TrainStatus::Converged) continue;
    vectors.push_back(vectorize(records[i].params));
    labels.push_back(jobs[i].class_id);
  }
  // Compress class ids in case some class produced no converged model.
  std::vector<int> id_map(class_labels.size(), -1);
  {
    int next_id = 0;
    for (std::size_t c = 0; c < class_labels.size(); ++c)
      if (std::find(labels.begin(), labels.end(), static_cast<int>(c)) != labels.end())
        id_map[c] = next_id++;
    for (auto& l : labels) l = id_map[static_cast<std::size_t>(l)];
  }
  std::vector<std::string> present_labels;
  for (std::size_t c = 0; c < class_labels.size(); ++c)
    if (id_map[c] >= 0) present_labels.push_back(class_labels[c]);
  if (vectors.size() >= 3) {
    int n_distinct = *std::max_element(labels.begin(), labels.end()) + 1;
    auto pca2 = fit_pca(vectors, std::min<int>(2, static_cast<int>(vectors.size() - 1)));
    std::ofstream csv(std::filesystem::path(out_dir) / "projection.csv");
    csv << "label,pc1,pc2\n";
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      auto coords = project(pca2, vectors[i]);
      csv << present_labels[static_cast<std::size_t>(labels[i])];
      for (double c : coords) csv << ',' << c;
      csv << '\n';
    }

    if (static_cast<int>(vectors.size()) >= n_distinct && n_distinct >= 1)
      result.purity = cluster_purity(vectors, labels, n_distinct, derive_seed(seed, 7));

    json reports = json::object();
    reports["purity"] = result.purity;

    if (backdoor_task) {
      // Per-machine 2-class reports: clean (0) vs modified (1).
      for (std::size_t b = 0; b < kAllMachineBases.size(); ++b) {
        int clean_id = id_map[2 * b];
        int mod_id = id_map[2 * b + 1];
        std::vector<std::vector<float>> xs;
        std::vector<int> ys;
        for (std::size_t i = 0; i < vectors.size(); ++i) {
          if (labels[i] == clean_id || labels[i] == mod_id) {
            xs.push_back(vectors[i].values);
            ys.push_back(labels[i] == mod_id ? 1 : 0);
          }
        }
        json rep;
        if (xs.size() >= 4 &&
            std::count(ys.begin(), ys.end(), 0) >= 2 &&
            std::count(ys.begin(), ys.end(), 1) >= 2) {
          auto ds = make_dataset(std::move(xs), std::move(ys), derive_seed(seed, 8 + b));
          rep = detail::classifier_report(ClassifierKind::GaussianNB, ds,
                                          derive_seed(seed, 16 + b));
        } else {
          rep = {{"error", "insufficient converged models"}};
        }
        rep["machine"] = machine_kind_name({kAllMachineBases[b], MachineVariant::Clean});
        result.backdoor_reports.push_back(rep);
      }
      reports["backdoor"] = result.backdoor_reports;
    } else {
      // A class needs >= 3 models before the 80/20 split leaves it any
      // validation examples at all.
      int smallest = static_cast<int>(vectors.size());
      for (int c = 0; c < n_distinct; ++c)
        smallest = std::min<int>(smallest,
                                 static_cast<int>(std::count(labels.begin(),
                                                             labels.end(), c)));
      if (smallest >= 3) {
        std::vector<std::vector<float>> xs;
        for (const auto& v : vectors) xs.push_back(v.values);
        auto ds = make_dataset(std::move(xs), labels, derive_seed(seed, 8));
        result.attribution_report =
            detail::classifier_report(ClassifierKind::GaussianNB, ds, derive_seed(seed, 16));
      } else {
        result.attribution_report = {{"error", "insufficient converged models"}};
      }
      reports["attribution"] = result.attribution_report;
    }
    write_json_file((std::filesystem::path(out_dir) / "reports.json").string(),
                    reports, 2);
  }
  return result;
}

}  // namespace netzoo
