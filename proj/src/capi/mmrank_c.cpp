// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mmrank/mmrank.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "mmrank/container.hpp"
#include "mmrank/csv.hpp"
#include "mmrank/errors.hpp"
#include "mmrank/metrics.hpp"
#include "mmrank/synthetic.hpp"
#include "mmrank/train.hpp"

struct mmr_dataset {
  mmrank::Dataset data;
};

struct mmr_model {
  mmrank::TrainedModel model;
  std::vector<double> trace;
  bool converged = true;
};

struct mmr_cv_report {
  mmrank::CvReport report;
  std::string label;
};

struct mmr_truth {
  mmrank::SyntheticTruth truth;
  mmrank::SyntheticSpec spec;
};

namespace {

thread_local std::string last_error;

mmr_status fail(mmr_status code, char const* what) {
  last_error = what;
  return code;
}

template <class F>
mmr_status guarded(F&& body) {
  try {
    body();
    return MMR_OK;
  } catch (mmrank::ChecksumError const& e) {
    return fail(MMR_ERR_CHECKSUM, e.what());
  } catch (mmrank::DataError const& e) {
    return fail(MMR_ERR_DATA, e.what());
  } catch (mmrank::ConfigError const& e) {
    return fail(MMR_ERR_USAGE, e.what());
  } catch (mmrank::DomainError const& e) {
    return fail(MMR_ERR_USAGE, e.what());
  } catch (mmrank::NumericError const& e) {
    return fail(MMR_ERR_NUMERIC, e.what());
  } catch (std::bad_alloc const&) {
    return fail(MMR_ERR_INTERNAL, "out of memory");
  } catch (std::exception const& e) {
    return fail(MMR_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MMR_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, char const* what) {
  if (!ok) throw mmrank::ConfigError(what);
}

mmrank::TrainSettings settings_from(mmr_options const& o) {
  mmrank::TrainSettings s;
  auto& h = s.hyper;
  h.factors = o.factors;
  h.truncation = o.truncation;
  h.epsilon = o.epsilon;
  h.r_a = o.r_a;
  h.s_a = o.s_a;
  h.r_beta = o.r_beta;
  h.s_beta = o.s_beta;
  h.psi_shape = o.psi_shape;
  h.psi_rate = o.psi_rate;
  h.alpha_shape = o.alpha_shape;
  h.alpha_rate = o.alpha_rate;
  require(o.likelihood == MMR_LIKELIHOOD_RANK || o.likelihood == MMR_LIKELIHOOD_GAUSSIAN,
          "unknown likelihood code");
  require(o.classifier == MMR_CLASSIFIER_LINEAR || o.classifier == MMR_CLASSIFIER_DPM,
          "unknown classifier code");
  require(o.engine == MMR_ENGINE_GIBBS || o.engine == MMR_ENGINE_VB, "unknown engine code");
  require(o.init == MMR_INIT_SPECTRAL || o.init == MMR_INIT_RANDOM, "unknown init code");
  h.likelihood = o.likelihood == MMR_LIKELIHOOD_GAUSSIAN ? mmrank::Likelihood::gaussian
                                                         : mmrank::Likelihood::max_margin_rank;
  h.classifier = o.classifier == MMR_CLASSIFIER_DPM ? mmrank::ClassifierKind::dpm
                                                    : mmrank::ClassifierKind::linear;
  h.init = o.init == MMR_INIT_RANDOM ? mmrank::InitScheme::random : mmrank::InitScheme::spectral;
  s.engine = o.engine == MMR_ENGINE_VB ? mmrank::Engine::vb : mmrank::Engine::gibbs;
  s.gibbs.iterations = o.iterations;
  s.gibbs.burnin = o.burnin;
  s.gibbs.thin = o.thin;
  require(o.threads >= 1, "thread count must be at least 1");
  s.gibbs.threads = o.threads;
  s.gibbs.parallel = o.threads > 1;
  s.vb.tolerance = o.vb_tolerance;
  s.vb.max_iterations = o.vb_max_iterations;
  s.vb.threads = o.threads;
  s.seed = o.seed;
  s.validate();
  return s;
}

mmrank::PredictOptions predict_options_from(mmr_options const& o) {
  require(o.predict_iterations >= 1, "prediction needs at least one fixed-point iteration");
  mmrank::PredictOptions p;
  p.iterations = o.predict_iterations;
  p.hard_assignment = o.hard_assignment != 0;
  p.threads = o.threads;
  return p;
}

mmr_options defaults() {
  mmr_options o;
  mmr_options_init(&o);
  return o;
}

}  // namespace

extern "C" {

const char* mmr_version(void) { return "0.1.0"; }

const char* mmr_last_error(void) { return last_error.c_str(); }

void mmr_csv_layout_init(mmr_csv_layout* layout) {
  if (!layout) return;
  layout->header = 1;
  layout->ids = 1;
  layout->features_as_rows = 0;
}

mmr_status mmr_dataset_read_csv(const char* path, const mmr_csv_layout* layout, mmr_dataset** out) {
  return guarded([&] {
    require(path && out, "null argument");
    mmrank::CsvLayout l;
    if (layout) {
      l.header = layout->header != 0;
      l.ids = layout->ids != 0;
      l.features_as_rows = layout->features_as_rows != 0;
    }
    auto* d = new mmr_dataset{mmrank::read_data_csv(path, l)};
    *out = d;
  });
}

mmr_status mmr_dataset_from_matrix(const double* values, size_t dims, size_t samples,
                                   mmr_dataset** out) {
  return guarded([&] {
    require(out && (values || dims * samples == 0), "null argument");
    auto* d = new mmr_dataset;
    d->data.values = Eigen::Map<const Eigen::MatrixXd>(values, static_cast<Eigen::Index>(dims),
                                                       static_cast<Eigen::Index>(samples));
    for (size_t n = 0; n < samples; ++n) d->data.sample_ids.push_back(std::to_string(n + 1));
    *out = d;
  });
}

mmr_status mmr_dataset_add_labels_csv(mmr_dataset* data, const char* path) {
  return guarded([&] {
    require(data && path, "null argument");
    auto y = mmrank::read_labels_csv(path);
    if (y.size() != data->data.samples())
      throw mmrank::DataError(std::string("label file '") + path + "' has " +
                              std::to_string(y.size()) + " entries, expected " +
                              std::to_string(data->data.samples()));
    data->data.labels.push_back(std::move(y));
  });
}

mmr_status mmr_dataset_add_labels(mmr_dataset* data, const int8_t* labels, size_t n) {
  return guarded([&] {
    require(data && (labels || n == 0), "null argument");
    if (n != data->data.samples()) throw mmrank::DataError("label count does not match samples");
    mmrank::LabelVector y(labels, labels + n);
    for (auto v : y)
      if (v != -1 && v != 0 && v != 1) throw mmrank::DataError("labels must be -1, 0 or +1");
    data->data.labels.push_back(std::move(y));
  });
}

size_t mmr_dataset_dims(const mmr_dataset* data) { return data ? data->data.dims() : 0; }
size_t mmr_dataset_samples(const mmr_dataset* data) { return data ? data->data.samples() : 0; }
size_t mmr_dataset_tasks(const mmr_dataset* data) { return data ? data->data.tasks() : 0; }

const char* mmr_dataset_sample_id(const mmr_dataset* data, size_t n) {
  if (!data || n >= data->data.sample_ids.size()) return nullptr;
  return data->data.sample_ids[n].c_str();
}

mmr_status mmr_dataset_values(const mmr_dataset* data, double* out) {
  return guarded([&] {
    require(data && out, "null argument");
    Eigen::Map<Eigen::MatrixXd>(out, data->data.values.rows(), data->data.values.cols()) =
        data->data.values;
  });
}

mmr_status mmr_dataset_labels(const mmr_dataset* data, size_t task, int8_t* out) {
  return guarded([&] {
    require(data && out, "null argument");
    require(task < data->data.tasks(), "task index out of range");
    auto const& y = data->data.labels[task];
    std::memcpy(out, y.data(), y.size());
  });
}

void mmr_dataset_free(mmr_dataset* data) { delete data; }

void mmr_options_init(mmr_options* o) {
  if (!o) return;
  const mmrank::Hyperparams h;
  const mmrank::GibbsConfig g;
  const mmrank::VbConfig v;
  const mmrank::PredictOptions p;
  o->factors = h.factors;
  o->truncation = h.truncation;
  o->epsilon = h.epsilon;
  o->r_a = h.r_a;
  o->s_a = h.s_a;
  o->r_beta = h.r_beta;
  o->s_beta = h.s_beta;
  o->psi_shape = h.psi_shape;
  o->psi_rate = h.psi_rate;
  o->alpha_shape = h.alpha_shape;
  o->alpha_rate = h.alpha_rate;
  o->likelihood = MMR_LIKELIHOOD_RANK;
  o->classifier = MMR_CLASSIFIER_LINEAR;
  o->engine = MMR_ENGINE_GIBBS;
  o->init = MMR_INIT_SPECTRAL;
  o->iterations = g.iterations;
  o->burnin = g.burnin;
  o->thin = g.thin;
  o->vb_tolerance = v.tolerance;
  o->vb_max_iterations = v.max_iterations;
  o->seed = 1;
  o->threads = 1;
  o->predict_iterations = p.iterations;
  o->hard_assignment = 0;
}

const char* mmr_options_label(const mmr_options* options) {
  thread_local std::string label;
  mmrank::TrainSettings s;
  const mmr_options o = options ? *options : defaults();
  s.hyper.likelihood = o.likelihood == MMR_LIKELIHOOD_GAUSSIAN ? mmrank::Likelihood::gaussian
                                                               : mmrank::Likelihood::max_margin_rank;
  s.hyper.classifier = o.classifier == MMR_CLASSIFIER_DPM ? mmrank::ClassifierKind::dpm
                                                          : mmrank::ClassifierKind::linear;
  label = s.label();
  return label.c_str();
}

mmr_status mmr_train(const mmr_dataset* data, const mmr_options* options, mmr_model** out) {
  return guarded([&] {
    require(data && out, "null argument");
    const auto settings = settings_from(options ? *options : defaults());
    auto result = mmrank::train(data->data, settings);
    *out = new mmr_model{std::move(result.model), std::move(result.trace), result.converged};
  });
}

size_t mmr_model_trace_length(const mmr_model* model) { return model ? model->trace.size() : 0; }

mmr_status mmr_model_trace(const mmr_model* model, double* out) {
  return guarded([&] {
    require(model && (out || model->trace.empty()), "null argument");
    std::copy(model->trace.begin(), model->trace.end(), out);
  });
}

int mmr_model_converged(const mmr_model* model) { return model && model->converged ? 1 : 0; }
size_t mmr_model_dims(const mmr_model* model) { return model ? model->model.dims() : 0; }
size_t mmr_model_factors(const mmr_model* model) {
  return model ? static_cast<size_t>(model->model.A.cols()) : 0;
}
size_t mmr_model_samples(const mmr_model* model) {
  return model ? static_cast<size_t>(model->model.Z.cols()) : 0;
}
size_t mmr_model_tasks(const mmr_model* model) { return model ? model->model.tasks() : 0; }
size_t mmr_model_components(const mmr_model* model) {
  return model ? static_cast<size_t>(model->model.hyper.components()) : 0;
}
int mmr_model_has_standardization(const mmr_model* model) {
  return model && !model->model.standardization.empty() ? 1 : 0;
}

mmr_status mmr_model_loadings(const mmr_model* model, double* out) {
  return guarded([&] {
    require(model && out, "null argument");
    auto const& A = model->model.A;
    Eigen::Map<Eigen::MatrixXd>(out, A.rows(), A.cols()) = A;
  });
}

mmr_status mmr_model_scores(const mmr_model* model, double* out) {
  return guarded([&] {
    require(model && out, "null argument");
    auto const& Z = model->model.Z;
    Eigen::Map<Eigen::MatrixXd>(out, Z.rows(), Z.cols()) = Z;
  });
}

mmr_status mmr_model_beta(const mmr_model* model, size_t task, double* out) {
  return guarded([&] {
    require(model && out, "null argument");
    require(task < model->model.tasks(), "task index out of range");
    auto const& b = model->model.beta[task];
    Eigen::Map<Eigen::MatrixXd>(out, b.rows(), b.cols()) = b;
  });
}

mmr_status mmr_model_save(const mmr_model* model, const char* path, const char* created_json) {
  return guarded([&] {
    require(model && path, "null argument");
    nlohmann::json created = nlohmann::json::object();
    if (created_json) {
      try {
        created = nlohmann::json::parse(created_json);
      } catch (nlohmann::json::exception const&) {
        throw mmrank::ConfigError("creation metadata is not valid JSON");
      }
    }
    mmrank::save_container(path, mmrank::pack_model(model->model, std::move(created)));
  });
}

mmr_status mmr_model_load(const char* path, mmr_model** out) {
  return guarded([&] {
    require(path && out, "null argument");
    auto model = mmrank::unpack_model(mmrank::load_container(path));
    *out = new mmr_model{std::move(model), {}, true};
  });
}

void mmr_model_free(mmr_model* model) { delete model; }

mmr_status mmr_predict(const mmr_model* model, const mmr_dataset* test,
                       const mmr_options* options, double* decisions, int8_t* labels) {
  return guarded([&] {
    require(model && test, "null argument");
    const auto popts = predict_options_from(options ? *options : defaults());
    const size_t N = test->data.samples(), M = model->model.tasks();
    require(N * M == 0 || decisions || labels, "no output buffer");
    if (N == 0) return;
    if (test->data.dims() != model->model.dims())
      throw mmrank::DataError("test data has " + std::to_string(test->data.dims()) +
                              " features, the model expects " +
                              std::to_string(model->model.dims()));
    const mmrank::Predictor predictor(model->model);
    const auto preds = predictor.predict_all(test->data.values, popts);
    for (size_t n = 0; n < N; ++n)
      for (size_t m = 0; m < M; ++m) {
        if (decisions) decisions[n * M + m] = preds[n].decision[m];
        if (labels) labels[n * M + m] = static_cast<int8_t>(preds[n].label[m]);
      }
  });
}

mmr_status mmr_auc(const double* decisions, const int8_t* labels, size_t n, double* out) {
  return guarded([&] {
    require(decisions && labels && out, "null argument");
    *out = mmrank::auc({decisions, n}, {labels, n});
  });
}

mmr_status mmr_error_rate(const double* decisions, const int8_t* labels, size_t n, double* out) {
  return guarded([&] {
    require(decisions && labels && out, "null argument");
    *out = mmrank::error_rate({decisions, n}, {labels, n});
  });
}

mmr_status mmr_cross_validate(const mmr_dataset* data, const mmr_options* options, int folds,
                              mmr_cv_report** out) {
  return guarded([&] {
    require(data && out, "null argument");
    const mmr_options o = options ? *options : defaults();
    const auto settings = settings_from(o);
    auto report = mmrank::kfold_cv(data->data, settings, folds, o.seed, predict_options_from(o));
    *out = new mmr_cv_report{std::move(report), settings.label()};
  });
}

size_t mmr_cv_fold_count(const mmr_cv_report* r) { return r ? r->report.folds.size() : 0; }

mmr_status mmr_cv_fold(const mmr_cv_report* r, size_t i, mmr_fold_row* out) {
  return guarded([&] {
    require(r && out, "null argument");
    require(i < r->report.folds.size(), "fold row out of range");
    auto const& f = r->report.folds[i];
    *out = {f.fold, static_cast<int>(f.task), f.n_test, f.error, f.auc, f.seconds};
  });
}

size_t mmr_cv_summary_count(const mmr_cv_report* r) { return r ? r->report.summary.size() : 0; }

mmr_status mmr_cv_summary(const mmr_cv_report* r, size_t i, mmr_summary_row* out) {
  return guarded([&] {
    require(r && out, "null argument");
    require(i < r->report.summary.size(), "summary row out of range");
    auto const& s = r->report.summary[i];
    *out = {static_cast<int>(s.task), s.error_mean, s.error_sd, s.auc_mean, s.auc_sd, s.seconds_mean};
  });
}

const char* mmr_cv_model_label(const mmr_cv_report* r) { return r ? r->label.c_str() : nullptr; }

void mmr_cv_free(mmr_cv_report* r) { delete r; }

void mmr_sim_options_init(mmr_sim_options* o) {
  if (!o) return;
  const mmrank::SyntheticSpec s;
  o->dims = s.dims;
  o->samples = s.samples;
  o->factors = s.factors;
  o->sparsity = s.sparsity;
  o->label_noise = s.label_noise;
  o->transform = MMR_TRANSFORM_IDENTITY;
  o->dpm = 0;
  o->separation = s.separation;
  o->seed = s.seed;
}

mmr_status mmr_simulate(const mmr_sim_options* options, mmr_dataset** data, mmr_truth** truth) {
  return guarded([&] {
    require(options && data, "null argument");
    mmrank::SyntheticSpec s;
    s.dims = options->dims;
    s.samples = options->samples;
    s.factors = options->factors;
    s.sparsity = options->sparsity;
    s.label_noise = options->label_noise;
    require(options->transform >= MMR_TRANSFORM_IDENTITY && options->transform <= MMR_TRANSFORM_CUBE,
            "unknown transform code");
    s.transform = options->transform == MMR_TRANSFORM_EXP    ? mmrank::Transform::exp
                  : options->transform == MMR_TRANSFORM_CUBE ? mmrank::Transform::cube
                                                             : mmrank::Transform::identity;
    s.dpm = options->dpm != 0;
    s.separation = options->separation;
    s.seed = options->seed;
    auto generated = mmrank::generate_synthetic(s);
    auto* d = new mmr_dataset{std::move(generated.data)};
    if (truth) {
      try {
        *truth = new mmr_truth{std::move(generated.truth), s};
      } catch (...) {
        delete d;
        throw;
      }
    }
    *data = d;
  });
}

int mmr_truth_cluster(const mmr_truth* truth, size_t n) {
  if (!truth || n >= truth->truth.cluster.size()) return -1;
  return truth->truth.cluster[n];
}

mmr_status mmr_truth_save(const mmr_truth* truth, const char* path) {
  return guarded([&] {
    require(truth && path, "null argument");
    mmrank::save_container(path, mmrank::pack_truth(truth->truth, truth->spec));
  });
}

mmr_status mmr_truth_load(const char* path, mmr_truth** out) {
  return guarded([&] {
    require(path && out, "null argument");
    auto t = mmrank::unpack_truth(mmrank::load_container(path));
    *out = new mmr_truth{std::move(t), {}};
  });
}

void mmr_truth_free(mmr_truth* truth) { delete truth; }

}  // extern "C"
