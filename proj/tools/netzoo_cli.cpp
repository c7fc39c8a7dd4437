// Command-line front end: trace generation, training, batch runs,
// weight-space analysis, meta-classification, and the work-unit
// server/worker pair. Exit codes: 0 ok, 1 usage error, 2 stage failure.

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netzoo/classify.hpp"
#include "netzoo/coordinator.hpp"
#include "netzoo/pipeline.hpp"
#include "netzoo/presets.hpp"
#include "netzoo/serialize.hpp"
#include "netzoo/server.hpp"
#include "netzoo/trainer.hpp"
#include "netzoo/weightspace.hpp"
#include "netzoo/worker.hpp"

namespace fs = std::filesystem;
using namespace netzoo;

namespace {

std::atomic<bool> g_stop{false};

// A traces directory is self-describing: spec.json + one JSONL per corpus.
void write_traces_dir(const std::string& dir, const TraceSet& ts,
                      const std::string& source_id) {
  fs::create_directories(dir);
  json spec = {{"source", source_id},
               {"sequence_length", ts.spec.sequence_length},
               {"n_train", ts.spec.n_train},
               {"n_val", ts.spec.n_val},
               {"n_eval", ts.spec.n_eval},
               {"seed", ts.spec.seed},
               {"triggers", ts.spec.trigger_policy.enabled}};
  if (!source_is_machine(ts.spec.source))
    spec["automaton"] = automaton_to_json(std::get<Automaton>(ts.spec.source));
  write_json_file(dir + "/spec.json", spec, 2);
  write_trace_file(dir + "/train.jsonl", ts.train);
  write_trace_file(dir + "/val.jsonl", ts.val);
  write_trace_file(dir + "/eval.jsonl", ts.eval);
  if (!ts.eval_pathological.empty())
    write_trace_file(dir + "/eval_pathological.jsonl", ts.eval_pathological);
}

TraceSet read_traces_dir(const std::string& dir) {
  json spec = read_json_file(dir + "/spec.json");
  TraceSet ts;
  ts.spec.source = parse_source_id(spec.at("source").get<std::string>());
  if (spec.contains("automaton"))
    ts.spec.source = automaton_from_json(spec.at("automaton"));
  ts.spec.sequence_length = spec.at("sequence_length").get<int>();
  ts.spec.n_train = spec.at("n_train").get<int>();
  ts.spec.n_val = spec.at("n_val").get<int>();
  ts.spec.n_eval = spec.at("n_eval").get<int>();
  ts.spec.seed = spec.at("seed").get<std::uint64_t>();
  ts.spec.trigger_policy.enabled = spec.value("triggers", false);
  ts.train = read_trace_file(dir + "/train.jsonl");
  ts.val = read_trace_file(dir + "/val.jsonl");
  ts.eval = read_trace_file(dir + "/eval.jsonl");
  if (fs::exists(dir + "/eval_pathological.jsonl"))
    ts.eval_pathological = read_trace_file(dir + "/eval_pathological.jsonl");
  return ts;
}

// Manifest rows -> (vectors, string labels). Model paths are relative to the
// manifest's directory.
void load_manifest_vectors(const std::string& manifest_path,
                           std::vector<WeightVector>& vectors,
                           std::vector<std::string>& labels) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
  fs::path base = fs::path(manifest_path).parent_path();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.value("status", "converged") != "converged") continue;
    std::string model = j.contains("model") ? j.at("model").get<std::string>()
                                            : j.at("file").get<std::string>();
    auto params = params_from_json<float>(read_json_file((base / model).string()));
    vectors.push_back(vectorize(params));
    labels.push_back(j.at("label").get<std::string>());
  }
}

std::vector<int> label_ids(const std::vector<std::string>& labels,
                           std::vector<std::string>& classes) {
  classes.clear();
  std::vector<int> ids;
  for (const auto& l : labels) {
    auto it = std::find(classes.begin(), classes.end(), l);
    if (it == classes.end()) {
      classes.push_back(l);
      ids.push_back(static_cast<int>(classes.size()) - 1);
    } else {
      ids.push_back(static_cast<int>(it - classes.begin()));
    }
  }
  return ids;
}

int run(int argc, char** argv) {
  CLI::App app{"population training and weight-space analysis for small recurrent networks"};
  app.require_subcommand(1);

  // traces
  auto* traces_cmd = app.add_subcommand("traces", "generate trace corpora for a source");
  std::string t_source = "eightbit", t_preset = "desk-ds1", t_out = "traces";
  std::uint64_t t_seed = 0;
  traces_cmd->add_option("--source", t_source, "machine id or automaton:<seed>");
  traces_cmd->add_option("--preset", t_preset, "ds1|ds2|ds3|desk-ds1|desk-ds2|desk-ds3");
  traces_cmd->add_option("--seed", t_seed)->required();
  traces_cmd->add_option("--out", t_out)->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train one network on a traces dir");
  std::string tr_arch = "ds1", tr_traces, tr_out = "model.json";
  std::uint64_t tr_seed = 0;
  double tr_val_threshold = 1e-3;
  int tr_max_epochs = 500;
  double tr_lr = 2e-3;
  int tr_batch = 16;
  train_cmd->add_option("--arch", tr_arch, "ds1|ds3");
  train_cmd->add_option("--batch", tr_batch);
  train_cmd->add_option("--traces", tr_traces)->required();
  train_cmd->add_option("--seed", tr_seed)->required();
  train_cmd->add_option("--out", tr_out);
  train_cmd->add_option("--val-threshold", tr_val_threshold);
  train_cmd->add_option("--max-epochs", tr_max_epochs);
  train_cmd->add_option("--lr", tr_lr);

  // batch
  auto* batch_cmd = app.add_subcommand("batch", "train many networks of one source");
  std::string b_source = "eightbit", b_preset = "desk-ds1", b_out = "batch";
  std::uint64_t b_seed = 0;
  int b_count = 10, b_parallel = 4;
  batch_cmd->add_option("--source", b_source);
  batch_cmd->add_option("--preset", b_preset);
  batch_cmd->add_option("--count", b_count);
  batch_cmd->add_option("--parallel", b_parallel);
  batch_cmd->add_option("--seed", b_seed)->required();
  batch_cmd->add_option("--out", b_out)->required();

  // vectorize
  auto* vec_cmd = app.add_subcommand("vectorize", "flatten models from a manifest to CSV");
  std::string v_manifest, v_out = "vectors.csv";
  vec_cmd->add_option("--manifest", v_manifest)->required();
  vec_cmd->add_option("--out", v_out);

  // project
  auto* proj_cmd = app.add_subcommand("project", "PCA projection of manifest models to CSV");
  std::string p_manifest, p_out = "projection.csv";
  int p_k = 2;
  proj_cmd->add_option("--manifest", p_manifest)->required();
  proj_cmd->add_option("--k", p_k);
  proj_cmd->add_option("--out", p_out);

  // purity
  auto* pur_cmd = app.add_subcommand("purity", "k-means cluster purity of manifest models");
  std::string pu_manifest;
  std::uint64_t pu_seed = 0;
  pur_cmd->add_option("--manifest", pu_manifest)->required();
  pur_cmd->add_option("--seed", pu_seed)->required();

  // classify
  auto* cls_cmd = app.add_subcommand("classify", "fit a meta-classifier on manifest models");
  std::string c_kind = "nb", c_manifest, c_task = "attribution", c_out;
  std::uint64_t c_seed = 0;
  cls_cmd->add_option("--kind", c_kind, "nb|tree|forest|knn");
  cls_cmd->add_option("--manifest", c_manifest)->required();
  cls_cmd->add_option("--task", c_task, "attribution|backdoor");
  cls_cmd->add_option("--seed", c_seed)->required();
  cls_cmd->add_option("--out", c_out, "write report JSON here (default: stdout)");

  // enqueue
  auto* enq_cmd = app.add_subcommand("enqueue", "create a batch of work units");
  std::string e_archive, e_source = "eightbit", e_preset = "desk-ds1";
  int e_count = 10;
  std::uint64_t e_seed = 0;
  enq_cmd->add_option("--archive", e_archive)->required();
  enq_cmd->add_option("--source", e_source);
  enq_cmd->add_option("--preset", e_preset);
  enq_cmd->add_option("--count", e_count);
  enq_cmd->add_option("--seed", e_seed)->required();

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run the work-unit HTTP server");
  std::string s_archive, s_host = "0.0.0.0";
  int s_port = 8080;
  double s_deadline = 600;
  serve_cmd->add_option("--archive", s_archive)->required();
  serve_cmd->add_option("--host", s_host);
  serve_cmd->add_option("--port", s_port);
  serve_cmd->add_option("--deadline", s_deadline, "seconds before reassignment");

  // work
  auto* work_cmd = app.add_subcommand("work", "run the worker loop against a server");
  std::string w_host = "127.0.0.1", w_id = "worker";
  int w_port = 8080, w_slots = 1;
  bool w_once = false;
  work_cmd->add_option("--host", w_host);
  work_cmd->add_option("--port", w_port);
  work_cmd->add_option("--slots", w_slots);
  work_cmd->add_option("--id", w_id);
  work_cmd->add_flag("--once", w_once, "exit when the queue is empty");

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "full generate/train/analyze pipeline");
  std::string pl_preset = "desk-ds1", pl_out = "pipeline-out";
  std::uint64_t pl_seed = 0;
  int pl_count = 10, pl_threads = 4, pl_classes = 5;
  pipe_cmd->add_option("preset", pl_preset, "ds1|ds2|ds3|desk-ds1|desk-ds2|desk-ds3");
  pipe_cmd->add_option("--seed", pl_seed)->required();
  pipe_cmd->add_option("--out", pl_out)->required();
  pipe_cmd->add_option("--count", pl_count, "networks per class");
  pipe_cmd->add_option("--threads", pl_threads);
  pipe_cmd->add_option("--classes", pl_classes, "automata classes (ds3 only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (traces_cmd->parsed()) {
    auto preset = require_preset(t_preset);
    TraceSource src = parse_source_id(t_source);
    auto ts = build_trace_set(preset_trace_spec(preset, src, t_seed));
    write_traces_dir(t_out, ts, t_source);
    std::cout << "wrote " << ts.train.size() << "/" << ts.val.size() << "/"
              << ts.eval.size() << " traces to " << t_out << "\n";
  } else if (train_cmd->parsed()) {
    auto ts = read_traces_dir(tr_traces);
    Architecture arch = tr_arch == "ds3" ? ds3_architecture() : ds1_architecture();
    TrainingConfig cfg;
    cfg.seed = tr_seed;
    cfg.val_threshold = tr_val_threshold;
    cfg.eval_threshold = tr_val_threshold;
    cfg.max_epochs = tr_max_epochs;
    cfg.learning_rate = tr_lr;
    cfg.batch_size = tr_batch;
    auto rec = train<float>(arch, ts, cfg);
    write_json_file(tr_out, params_to_json(rec.params));
    std::cout << record_summary_json(rec).dump(2) << "\n";
    if (rec.status != TrainStatus::Converged) return 2;
  } else if (batch_cmd->parsed()) {
    auto preset = require_preset(b_preset);
    TraceSource src = parse_source_id(b_source);
    auto ts = build_trace_set(preset_trace_spec(preset, src, derive_seed(b_seed, 0)));
    fs::create_directories(b_out);
    std::vector<TrainedModelRecord<float>> recs(static_cast<std::size_t>(b_count));
    parallel_for(recs.size(), b_parallel, [&](std::size_t i) {
      TrainingConfig cfg = preset.training;
      cfg.seed = derive_seed(b_seed, i + 1);
      recs[i] = train<float>(preset.arch, ts, cfg);
    });
    std::ofstream manifest(fs::path(b_out) / "manifest.jsonl");
    for (std::size_t i = 0; i < recs.size(); ++i) {
      std::string file = "model_" + std::to_string(i) + ".json";
      write_json_file((fs::path(b_out) / file).string(), params_to_json(recs[i].params));
      json line = record_summary_json(recs[i]);
      line["model"] = file;
      line["train_seed"] = derive_seed(b_seed, i + 1);
      manifest << line.dump() << '\n';
    }
    std::cout << "trained " << b_count << " models into " << b_out << "\n";
  } else if (vec_cmd->parsed()) {
    std::vector<WeightVector> vectors;
    std::vector<std::string> labels;
    load_manifest_vectors(v_manifest, vectors, labels);
    std::ofstream csv(v_out);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      csv << labels[i];
      for (float x : vectors[i].values) csv << ',' << x;
      csv << '\n';
    }
    std::cout << "wrote " << vectors.size() << " vectors to " << v_out << "\n";
  } else if (proj_cmd->parsed()) {
    std::vector<WeightVector> vectors;
    std::vector<std::string> labels;
    load_manifest_vectors(p_manifest, vectors, labels);
    auto model = fit_pca(vectors, p_k);
    std::ofstream csv(p_out);
    csv << "label";
    for (int j = 0; j < p_k; ++j) csv << ",pc" << j + 1;
    csv << '\n';
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      csv << labels[i];
      for (double c : project(model, vectors[i])) csv << ',' << c;
      csv << '\n';
    }
    std::cout << "explained variance:";
    for (double v : model.explained_variance) std::cout << ' ' << v;
    std::cout << "\n";
  } else if (pur_cmd->parsed()) {
    std::vector<WeightVector> vectors;
    std::vector<std::string> labels;
    load_manifest_vectors(pu_manifest, vectors, labels);
    std::vector<std::string> classes;
    auto ids = label_ids(labels, classes);
    double purity = cluster_purity(vectors, ids, static_cast<int>(classes.size()), pu_seed);
    std::cout << json({{"n", vectors.size()},
                       {"classes", classes.size()},
                       {"purity", purity}})
                     .dump(2)
              << "\n";
  } else if (cls_cmd->parsed()) {
    std::vector<WeightVector> vectors;
    std::vector<std::string> labels;
    load_manifest_vectors(c_manifest, vectors, labels);
    std::vector<int> ids;
    std::vector<std::string> classes;
    if (c_task == "backdoor") {
      for (const auto& l : labels) ids.push_back(l.ends_with("-mod") ? 1 : 0);
      classes = {"clean", "backdoored"};
    } else {
      ids = label_ids(labels, classes);
    }
    std::vector<std::vector<float>> xs;
    for (const auto& v : vectors) xs.push_back(v.values);
    auto ds = make_dataset(std::move(xs), ids, c_seed);
    ClassifierKind kind;
    if (c_kind == "nb") kind = ClassifierKind::GaussianNB;
    else if (c_kind == "tree") kind = ClassifierKind::DecisionTree;
    else if (c_kind == "forest") kind = ClassifierKind::RandomForest;
    else if (c_kind == "knn") kind = ClassifierKind::KNN;
    else throw CLI::ValidationError("--kind", "unknown classifier kind");
    auto model = fit(kind, ds, {}, c_seed);
    auto acc = evaluate_accuracy(model, ds);
    int train_n = 0;
    for (bool b : ds.in_train) train_n += b ? 1 : 0;
    json report = {{"kind", c_kind},
                   {"task", c_task},
                   {"n_classes", model.n_classes},
                   {"classes", classes},
                   {"train_n", train_n},
                   {"val_n", acc.n_total},
                   {"accuracy", acc.accuracy},
                   {"confusion_matrix", acc.confusion}};
    if (c_out.empty())
      std::cout << report.dump(2) << "\n";
    else
      write_json_file(c_out, report, 2);
  } else if (enq_cmd->parsed()) {
    Coordinator coord(e_archive);
    auto batch = coord.create_batch(e_source, e_count, e_preset, e_seed);
    std::cout << "enqueued " << batch.size() << " units\n";
  } else if (serve_cmd->parsed()) {
    Coordinator coord(s_archive, s_deadline);
    CoordinatorServer server(coord);
    std::cout << "serving on " << s_host << ":" << s_port << "\n";
    if (!server.listen(s_host, s_port)) {
      std::cerr << "failed to bind " << s_host << ":" << s_port << "\n";
      return 2;
    }
  } else if (work_cmd->parsed()) {
    WorkerConfig cfg;
    cfg.host = w_host;
    cfg.port = w_port;
    cfg.worker_id = w_id;
    cfg.slots = w_slots;
    cfg.exit_when_idle = w_once;
    std::signal(SIGINT, [](int) { g_stop.store(true); });
    auto report = run_worker(cfg, g_stop);
    std::cout << json({{"fetched", report.fetched},
                       {"accepted", report.accepted},
                       {"rejected", report.rejected},
                       {"errors", report.errors}})
                     .dump(2)
              << "\n";
  } else if (pipe_cmd->parsed()) {
    auto result = run_pipeline(pl_preset, pl_count, pl_seed, pl_out, pl_threads, pl_classes);
    std::cout << json({{"out", result.out_dir},
                       {"trained", result.models_trained},
                       {"converged", result.models_converged},
                       {"purity", result.purity}})
                     .dump(2)
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::Error&) {
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
