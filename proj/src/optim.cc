// Copyright 2026 The WiC Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "wic/optim.h"

#include <cmath>
#include <string>

#include <fmt/format.h>

namespace wic {

using nn::Matrix;
using nn::Parameter;

void GcCentralize(std::span<double> data, std::span<const std::size_t> shape) {
  if (shape.size() < 2) return;
  const std::size_t slices = shape[0];
  if (slices == 0) return;
  const std::size_t width = data.size() / slices;
  if (width * slices != data.size()) throw ShapeError("gc: data size does not match shape");
  for (std::size_t s = 0; s < slices; ++s) {
    double* row = data.data() + s * width;
    double mean = 0.0;
    for (std::size_t i = 0; i < width; ++i) mean += row[i];
    mean /= static_cast<double>(width);
    for (std::size_t i = 0; i < width; ++i) row[i] -= mean;
  }
}

void GcCentralize(Matrix* grad, int rank) {
  if (rank < 2) return;
  const std::size_t shape[2] = {static_cast<std::size_t>(grad->rows()),
                                static_cast<std::size_t>(grad->cols())};
  GcCentralize(std::span<double>(grad->data(), static_cast<std::size_t>(grad->size())), shape);
}

void RangerConfig::Validate() const {
  if (!(lr > 0.0)) throw ConfigError(fmt::format("ranger: lr {} must be positive", lr));
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("ranger: betas must lie in [0, 1)");
  }
  if (eps < 0.0) throw ConfigError("ranger: eps must be non-negative");
  if (k < 1) throw ConfigError("ranger: lookahead k must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("ranger: lookahead alpha outside (0, 1]");
}

nlohmann::json RangerConfig::ToJson() const {
  return {{"lr", lr},       {"beta1", beta1}, {"beta2", beta2},
          {"eps", eps},     {"weight_decay", weight_decay},
          {"k", k},         {"alpha", alpha}, {"gradient_centralization", gradient_centralization}};
}

RangerConfig RangerConfig::FromJson(const nlohmann::json& j) {
  RangerConfig c;
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.k = j.value("k", c.k);
  c.alpha = j.value("alpha", c.alpha);
  c.gradient_centralization = j.value("gradient_centralization", c.gradient_centralization);
  return c;
}

bool RadamStep(Matrix* param, const Matrix& grad, Matrix* m, Matrix* v, std::int64_t t,
               const RangerConfig& c) {
  const double b1 = c.beta1;
  const double b2 = c.beta2;
  *m = b1 * *m + (1.0 - b1) * grad;
  *v = b2 * *v + (1.0 - b2) * grad.cwiseProduct(grad);
  const double td = static_cast<double>(t);
  const double b1t = std::pow(b1, td);
  const double b2t = std::pow(b2, td);
  const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
  const double rho_t = rho_inf - 2.0 * td * b2t / (1.0 - b2t);
  const double m_scale = 1.0 / (1.0 - b1t);
  if (c.weight_decay != 0.0) *param -= c.lr * c.weight_decay * *param;
  if (rho_t > 4.0) {
    const double r = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                               ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
    const double v_scale = 1.0 / (1.0 - b2t);
    param->array() -= c.lr * r * (m->array() * m_scale) / ((v->array() * v_scale).sqrt() + c.eps);
    return true;
  }
  *param -= c.lr * m_scale * *m;
  return false;
}

bool LookaheadSync(Matrix* fast, Matrix* slow, std::int64_t t, const RangerConfig& c) {
  if (t % c.k != 0) return false;
  *slow += c.alpha * (*fast - *slow);
  *fast = *slow;
  return true;
}

Ranger::Ranger(std::vector<Parameter*> params, const RangerConfig& config)
    : params_(std::move(params)), config_(config) {
  config_.Validate();
  for (Parameter* p : params_) {
    state_.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    state_.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    state_.slow.push_back(p->value);
  }
}

void Ranger::Step() {
  for (const Parameter* p : params_) {
    if (!p->grad.allFinite()) {
      throw NonFiniteGradient(
          fmt::format("ranger: non-finite gradient in '{}', step refused", p->name));
    }
  }
  ++state_.t;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter* p = params_[i];
    Matrix g = p->grad;
    if (config_.gradient_centralization) GcCentralize(&g, p->rank);
    RadamStep(&p->value, g, &state_.m[i], &state_.v[i], state_.t, config_);
    LookaheadSync(&p->value, &state_.slow[i], state_.t, config_);
  }
}

std::vector<TensorBlob> Ranger::StateBlobs() const {
  std::vector<TensorBlob> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.push_back({"optim.m." + params_[i]->name, state_.m[i]});
    out.push_back({"optim.v." + params_[i]->name, state_.v[i]});
    out.push_back({"optim.slow." + params_[i]->name, state_.slow[i]});
  }
  return out;
}

void Ranger::LoadStateBlobs(const std::vector<TensorBlob>& blobs, std::int64_t t) {
  if (blobs.size() != 3 * params_.size()) throw DataError("ranger: optimizer state size mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const TensorBlob* b = &blobs[3 * i];
    if (b[0].name != "optim.m." + params_[i]->name) {
      throw DataError(fmt::format("ranger: state for '{}' not found", params_[i]->name));
    }
    state_.m[i] = b[0].value;
    state_.v[i] = b[1].value;
    state_.slow[i] = b[2].value;
  }
  state_.t = t;
}

FgmBackup FgmAttack(Matrix* table, const Matrix& grad, const FgmConfig& config) {
  if (grad.rows() != table->rows() || grad.cols() != table->cols()) {
    throw ShapeError("fgm: gradient shape differs from the table");
  }
  FgmBackup backup{*table};
  if (config.per_row) {
    for (Eigen::Index r = 0; r < grad.rows(); ++r) {
      const double n = grad.row(r).norm();
      if (n > 0.0 && std::isfinite(n)) table->row(r) += (config.epsilon / n) * grad.row(r);
    }
  } else {
    const double n = grad.norm();
    if (n > 0.0 && std::isfinite(n)) *table += (config.epsilon / n) * grad;
  }
  return backup;
}

FgmBackup FgmAttack(Parameter* table, const FgmConfig& config) {
  return FgmAttack(&table->value, table->grad, config);
}

void FgmRestore(Matrix* table, const FgmBackup& backup) {
  if (backup.table.rows() != table->rows() || backup.table.cols() != table->cols()) {
    throw ShapeError("fgm: backup shape differs from the table");
  }
  *table = backup.table;
}

StepLosses AdversarialTrainingStep(WicModel& model, const Batch& batch, Ranger& optimizer,
                                   const FgmConfig& fgm) {
  StepLosses out;
  model.ZeroGrad();
  out.clean = model.AccumulateGradients(batch, true);
  Parameter& table = model.encoder().embedding_table();
  const FgmBackup backup = FgmAttack(&table, fgm);
  out.adversarial = model.AccumulateGradients(batch, true);
  FgmRestore(&table.value, backup);
  optimizer.Step();
  return out;
}

double PlainStep(WicModel& model, const Batch& batch, Ranger& optimizer, int accumulate) {
  model.ZeroGrad();
  double loss = 0.0;
  for (int i = 0; i < accumulate; ++i) loss = model.AccumulateGradients(batch, true);
  optimizer.Step();
  return loss;
}

}  // namespace wic
