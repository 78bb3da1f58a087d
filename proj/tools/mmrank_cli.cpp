// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: train, predict, eval and simulate over CSV files.

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mmrank/mmrank.h"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Failure {
  int code;
  std::string message;
};

int exit_code(mmr_status s) {
  switch (s) {
    case MMR_OK: return kOk;
    case MMR_ERR_USAGE: return kUsage;
    case MMR_ERR_DATA:
    case MMR_ERR_CHECKSUM: return kData;
    default: return kNumeric;
  }
}

void check(mmr_status s, std::string const& context) {
  if (s != MMR_OK) throw Failure{exit_code(s), context + ": " + mmr_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using DatasetPtr = std::unique_ptr<mmr_dataset, Deleter<mmr_dataset, mmr_dataset_free>>;
using ModelPtr = std::unique_ptr<mmr_model, Deleter<mmr_model, mmr_model_free>>;
using ReportPtr = std::unique_ptr<mmr_cv_report, Deleter<mmr_cv_report, mmr_cv_free>>;
using TruthPtr = std::unique_ptr<mmr_truth, Deleter<mmr_truth, mmr_truth_free>>;

std::string num(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

class CsvWriter {
 public:
  explicit CsvWriter(std::string const& path) : path_(path) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw Failure{kData, "cannot write '" + path + "'"};
    }
  }
  ~CsvWriter() = default;

  void row(std::vector<std::string> const& cells) {
    std::ostream& os = path_ == "-" ? std::cout : static_cast<std::ostream&>(file_);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) os << ',';
      os << cells[c];
    }
    os << '\n';
    if (!os) throw Failure{kData, "write failed for '" + path_ + "'"};
  }

 private:
  std::string path_;
  std::ofstream file_;
};

struct Layout {
  bool no_header = false;
  bool no_ids = false;
  bool features_as_rows = false;

  void attach(CLI::App* cmd) {
    cmd->add_flag("--no-header", no_header, "Data file has no header row");
    cmd->add_flag("--no-ids", no_ids, "Data file has no sample-id column (plain matrix)");
    cmd->add_flag("--features-as-rows", features_as_rows, "Rows are features, columns samples");
  }
  mmr_csv_layout get() const {
    mmr_csv_layout l;
    mmr_csv_layout_init(&l);
    l.header = !no_header;
    l.ids = !no_ids;
    l.features_as_rows = features_as_rows;
    return l;
  }
};

int default_threads() {
  if (char const* env = std::getenv("MMRANK_THREADS")) {
    int t = 0;
    auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), t);
    if (ec == std::errc() && t >= 1) return t;
  }
  return 1;
}

struct ModelFlags {
  std::string likelihood = "rank";
  std::string classifier = "linear";
  std::string engine = "gibbs";
  std::string init = "spectral";
  mmr_options opts{};
  std::optional<int> threads;

  ModelFlags() { mmr_options_init(&opts); }

  void attach(CLI::App* cmd, bool many_likelihoods, std::vector<std::string>* likelihoods) {
    if (many_likelihoods)
      cmd->add_option("--likelihood", *likelihoods, "rank and/or gaussian (repeatable)")
          ->check(CLI::IsMember({"rank", "gaussian"}));
    else
      cmd->add_option("--likelihood", likelihood, "rank or gaussian")
          ->check(CLI::IsMember({"rank", "gaussian"}))
          ->capture_default_str();
    cmd->add_option("--classifier", classifier, "linear or dpm")
        ->check(CLI::IsMember({"linear", "dpm"}))
        ->capture_default_str();
    cmd->add_option("--engine", engine, "gibbs or vb")
        ->check(CLI::IsMember({"gibbs", "vb"}))
        ->capture_default_str();
    cmd->add_option("--init", init, "spectral or random")
        ->check(CLI::IsMember({"spectral", "random"}))
        ->capture_default_str();
    cmd->add_option("--factors,-K", opts.factors, "Latent factors K")->capture_default_str();
    cmd->add_option("--truncation,-T", opts.truncation, "DPM truncation level T")->capture_default_str();
    cmd->add_option("--epsilon", opts.epsilon, "Rank margin")->capture_default_str();
    cmd->add_option("--iters", opts.iterations, "Gibbs sweeps")->capture_default_str();
    cmd->add_option("--burnin", opts.burnin, "Gibbs burn-in sweeps")->capture_default_str();
    cmd->add_option("--thin", opts.thin, "Gibbs thinning")->capture_default_str();
    cmd->add_option("--vb-tol", opts.vb_tolerance, "VB relative-change tolerance")->capture_default_str();
    cmd->add_option("--vb-max-iters", opts.vb_max_iterations, "VB iteration cap")->capture_default_str();
    cmd->add_option("--seed", opts.seed, "Random seed")->capture_default_str();
    cmd->add_option("--threads", threads, "Worker threads (default $MMRANK_THREADS or 1)");
    cmd->add_option("--predict-iters", opts.predict_iterations, "Test-score fixed-point steps")
        ->capture_default_str();
    cmd->add_flag("--hard-assignment", opts.hard_assignment, "DPM: score with the top component");
  }

  mmr_options resolve(std::string const& lik) const {
    mmr_options o = opts;
    o.likelihood = lik == "gaussian" ? MMR_LIKELIHOOD_GAUSSIAN : MMR_LIKELIHOOD_RANK;
    o.classifier = classifier == "dpm" ? MMR_CLASSIFIER_DPM : MMR_CLASSIFIER_LINEAR;
    o.engine = engine == "vb" ? MMR_ENGINE_VB : MMR_ENGINE_GIBBS;
    o.init = init == "random" ? MMR_INIT_RANDOM : MMR_INIT_SPECTRAL;
    o.threads = threads.value_or(default_threads());
    if (o.engine == MMR_ENGINE_VB && o.classifier == MMR_CLASSIFIER_DPM)
      throw Failure{kUsage, "--engine vb with --classifier dpm is out of scope: variational "
                            "inference covers the linear classifier only"};
    return o;
  }
};

DatasetPtr load_data(std::string const& path, Layout const& layout,
                     std::vector<std::string> const& labels) {
  mmr_dataset* raw = nullptr;
  const auto l = layout.get();
  check(mmr_dataset_read_csv(path.c_str(), &l, &raw), "reading " + path);
  DatasetPtr data(raw);
  for (auto const& lp : labels) check(mmr_dataset_add_labels_csv(data.get(), lp.c_str()), "reading " + lp);
  return data;
}

void write_trace(std::string const& path, mmr_model const* model, bool vb) {
  std::vector<double> trace(mmr_model_trace_length(model));
  check(mmr_model_trace(model, trace.data()), "trace");
  CsvWriter out(path);
  out.row({"iteration", vb ? "relative_change" : "log_pseudo_joint"});
  for (std::size_t i = 0; i < trace.size(); ++i) out.row({std::to_string(i + 1), num(trace[i])});
}

int run_train(std::string const& data_path, std::vector<std::string> const& labels,
              Layout const& layout, ModelFlags const& flags, std::string const& out,
              std::string trace_path) {
  const mmr_options o = flags.resolve(flags.likelihood);
  auto data = load_data(data_path, layout, labels);
  mmr_model* raw = nullptr;
  check(mmr_train(data.get(), &o, &raw), "training");
  ModelPtr model(raw);
  const nlohmann::json created = {{"tool", std::string("mmrank ") + mmr_version()},
                                  {"command", "train"},
                                  {"seed", o.seed},
                                  {"engine", flags.engine},
                                  {"iterations", o.iterations},
                                  {"burnin", o.burnin},
                                  {"thin", o.thin},
                                  {"vb_tolerance", o.vb_tolerance},
                                  {"vb_max_iterations", o.vb_max_iterations},
                                  {"threads", o.threads}};
  check(mmr_model_save(model.get(), out.c_str(), created.dump().c_str()), "saving " + out);
  if (trace_path.empty()) trace_path = out + ".trace.csv";
  write_trace(trace_path, model.get(), o.engine == MMR_ENGINE_VB);
  std::cerr << "trained " << mmr_options_label(&o) << " (" << flags.engine << ", K=" << o.factors
            << ") on " << mmr_dataset_samples(data.get()) << " samples x "
            << mmr_dataset_dims(data.get()) << " features";
  if (o.engine == MMR_ENGINE_VB) std::cerr << (mmr_model_converged(model.get()) ? ", converged" : ", not converged");
  std::cerr << "\nmodel: " << out << "\ntrace: " << trace_path << "\n";
  return kOk;
}

int run_predict(std::string const& model_path, std::string const& data_path, Layout const& layout,
                ModelFlags const& flags, std::string const& out) {
  mmr_model* raw = nullptr;
  check(mmr_model_load(model_path.c_str(), &raw), "loading " + model_path);
  ModelPtr model(raw);
  auto data = load_data(data_path, layout, {});
  mmr_options o = flags.opts;
  o.threads = flags.threads.value_or(default_threads());
  const std::size_t N = mmr_dataset_samples(data.get()), M = mmr_model_tasks(model.get());
  std::vector<double> decisions(N * M);
  std::vector<int8_t> labels(N * M);
  check(mmr_predict(model.get(), data.get(), &o, decisions.data(), labels.data()), "predicting");
  CsvWriter w(out);
  std::vector<std::string> header{"id"};
  for (std::size_t m = 0; m < M; ++m) header.push_back("decision_task" + std::to_string(m + 1));
  for (std::size_t m = 0; m < M; ++m) header.push_back("label_task" + std::to_string(m + 1));
  w.row(header);
  for (std::size_t n = 0; n < N; ++n) {
    char const* id = mmr_dataset_sample_id(data.get(), n);
    std::vector<std::string> row{id ? id : std::to_string(n + 1)};
    for (std::size_t m = 0; m < M; ++m) row.push_back(num(decisions[n * M + m]));
    for (std::size_t m = 0; m < M; ++m) row.push_back(std::to_string(labels[n * M + m]));
    w.row(row);
  }
  return kOk;
}

int run_eval(std::string const& data_path, std::vector<std::string> const& labels,
             Layout const& layout, ModelFlags const& flags, std::vector<std::string> likelihoods,
             int folds, std::string const& out) {
  if (likelihoods.empty()) likelihoods.push_back("rank");
  std::vector<mmr_options> configs;
  for (auto const& lik : likelihoods) configs.push_back(flags.resolve(lik));
  auto data = load_data(data_path, layout, labels);
  CsvWriter w(out);
  w.row({"model", "task", "fold", "n_test", "error", "error_sd", "auc", "auc_sd", "seconds"});
  for (auto const& o : configs) {
    mmr_cv_report* raw = nullptr;
    check(mmr_cross_validate(data.get(), &o, folds, &raw), "cross-validation");
    ReportPtr report(raw);
    const std::string label = mmr_cv_model_label(report.get());
    for (std::size_t i = 0; i < mmr_cv_fold_count(report.get()); ++i) {
      mmr_fold_row f;
      check(mmr_cv_fold(report.get(), i, &f), "report");
      w.row({label, std::to_string(f.task), std::to_string(f.fold), std::to_string(f.n_test),
             num(f.error), "", num(f.auc), "", num(f.seconds)});
    }
    for (std::size_t i = 0; i < mmr_cv_summary_count(report.get()); ++i) {
      mmr_summary_row s;
      check(mmr_cv_summary(report.get(), i, &s), "report");
      w.row({label, std::to_string(s.task), "all", "", num(s.error_mean), num(s.error_sd),
             num(s.auc_mean), num(s.auc_sd), num(s.seconds_mean)});
      std::cerr << label << " task " << s.task << ": error " << num(s.error_mean) << " +/- "
                << num(s.error_sd) << ", AUC " << num(s.auc_mean) << "\n";
    }
  }
  return kOk;
}

int run_simulate(mmr_sim_options const& sim, std::string const& transform, std::string const& prefix) {
  mmr_sim_options o = sim;
  o.transform = transform == "exp" ? MMR_TRANSFORM_EXP
                : transform == "cube" ? MMR_TRANSFORM_CUBE
                                      : MMR_TRANSFORM_IDENTITY;
  mmr_dataset* draw = nullptr;
  mmr_truth* traw = nullptr;
  check(mmr_simulate(&o, &draw, &traw), "simulation");
  DatasetPtr data(draw);
  TruthPtr truth(traw);
  const std::size_t d = mmr_dataset_dims(data.get()), N = mmr_dataset_samples(data.get());
  std::vector<double> values(d * N);
  check(mmr_dataset_values(data.get(), values.data()), "simulation");
  {
    CsvWriter w(prefix + "data.csv");
    std::vector<std::string> header{"id"};
    for (std::size_t i = 0; i < d; ++i) header.push_back("f" + std::to_string(i + 1));
    w.row(header);
    for (std::size_t n = 0; n < N; ++n) {
      std::vector<std::string> row{mmr_dataset_sample_id(data.get(), n)};
      for (std::size_t i = 0; i < d; ++i) row.push_back(num(values[n * d + i]));
      w.row(row);
    }
  }
  std::vector<int8_t> y(N);
  check(mmr_dataset_labels(data.get(), 0, y.data()), "simulation");
  {
    CsvWriter w(prefix + "labels.csv");
    w.row({"id", "label"});
    for (std::size_t n = 0; n < N; ++n) w.row({mmr_dataset_sample_id(data.get(), n), std::to_string(y[n])});
  }
  if (o.dpm) {
    CsvWriter w(prefix + "clusters.csv");
    w.row({"id", "cluster"});
    for (std::size_t n = 0; n < N; ++n)
      w.row({mmr_dataset_sample_id(data.get(), n), std::to_string(mmr_truth_cluster(truth.get(), n))});
  }
  const std::string truth_path = prefix + "truth.mmr";
  check(mmr_truth_save(truth.get(), truth_path.c_str()), "saving " + truth_path);
  std::cerr << "wrote " << prefix << "data.csv, " << prefix << "labels.csv, " << truth_path
            << (o.dpm ? ", " + prefix + "clusters.csv" : std::string()) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discriminative factor models with a max-margin rank likelihood"};
  app.set_version_flag("--version", std::string("mmrank ") + mmr_version());
  app.require_subcommand(1);

  std::string data_path, model_path, out, trace_path;
  std::vector<std::string> labels, likelihoods;
  Layout layout;
  ModelFlags flags;
  int folds = 10;

  auto* train = app.add_subcommand("train", "Fit a model and write a container");
  train->add_option("--data", data_path, "Data CSV")->required();
  train->add_option("--labels", labels, "Label CSV, one per task (repeatable)");
  train->add_option("--out", out, "Output model container")->required();
  train->add_option("--trace", trace_path, "Trace CSV (default <out>.trace.csv)");
  layout.attach(train);
  flags.attach(train, false, nullptr);

  auto* predict = app.add_subcommand("predict", "Score test samples with a trained model");
  predict->add_option("--model", model_path, "Model container")->required();
  predict->add_option("--data", data_path, "Test data CSV")->required();
  predict->add_option("--out", out, "Prediction CSV ('-' for stdout)")->required();
  layout.attach(predict);
  predict->add_option("--predict-iters", flags.opts.predict_iterations, "Test-score fixed-point steps")
      ->capture_default_str();
  predict->add_flag("--hard-assignment", flags.opts.hard_assignment, "DPM: score with the top component");
  predict->add_option("--threads", flags.threads, "Worker threads (default $MMRANK_THREADS or 1)");

  auto* eval = app.add_subcommand("eval", "Stratified k-fold cross-validation");
  eval->add_option("--data", data_path, "Data CSV")->required();
  eval->add_option("--labels", labels, "Label CSV, one per task (repeatable)")->required();
  eval->add_option("--folds", folds, "Number of folds")->capture_default_str();
  eval->add_option("--out", out, "Metrics CSV ('-' for stdout)")->default_val("-");
  layout.attach(eval);
  flags.attach(eval, true, &likelihoods);

  mmr_sim_options sim;
  mmr_sim_options_init(&sim);
  std::string transform = "id", prefix;
  bool dpm = false;
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic data with ground truth");
  simulate->add_option("--dims,-d", sim.dims, "Features")->capture_default_str();
  simulate->add_option("--samples,-n", sim.samples, "Samples")->capture_default_str();
  simulate->add_option("--factors,-K", sim.factors, "True factors")->capture_default_str();
  simulate->add_option("--sparsity", sim.sparsity, "Fraction of nonzero loadings")->capture_default_str();
  simulate->add_option("--label-noise", sim.label_noise, "Label noise scale")->capture_default_str();
  simulate->add_option("--transform", transform, "id, exp or cube")
      ->check(CLI::IsMember({"id", "exp", "cube"}))
      ->capture_default_str();
  simulate->add_flag("--dpm", dpm, "Two-cluster layout with opposing classifiers");
  simulate->add_option("--separation", sim.separation, "Cluster separation")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--out-prefix", prefix, "Prefix for the written files")->required();

  try {
    app.parse(argc, argv);
  } catch (CLI::CallForHelp const& e) {
    return app.exit(e);
  } catch (CLI::CallForVersion const& e) {
    return app.exit(e);
  } catch (CLI::ParseError const& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*train) return run_train(data_path, labels, layout, flags, out, trace_path);
    if (*predict) return run_predict(model_path, data_path, layout, flags, out);
    if (*eval) return run_eval(data_path, labels, layout, flags, likelihoods, folds, out);
    sim.dpm = dpm ? 1 : 0;
    return run_simulate(sim, transform, prefix);
  } catch (Failure const& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (std::exception const& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
}
