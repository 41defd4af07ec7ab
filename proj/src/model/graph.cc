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

#include "wic/model/graph.h"

#include <cmath>

#include <fmt/format.h>

#include "wic/error.h"

namespace wic::nn {

std::vector<std::size_t> Parameter::shape() const {
  if (rank == 1) return {static_cast<std::size_t>(value.size())};
  return {static_cast<std::size_t>(value.rows()), static_cast<std::size_t>(value.cols())};
}

namespace {

void CheckSameShape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(fmt::format("{}: shapes {}x{} and {}x{} differ", op, a.rows(),
                                 a.cols(), b.rows(), b.cols()));
  }
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Eigen's blocked GEMM has a large fixed cost; the coefficient-based
// product is faster for the small operands of the toy encoder.
template <typename A, typename B>
Matrix Product(const A& a, const B& b) {
    return a * b;
}

template <typename A, typename B>
void AddProduct(Matrix& out, const A& a, const B& b) {
  out.noalias() += a * b;
}

}  // namespace

Var Graph::Push(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), nullptr, nullptr});
  return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Graph::Constant(Matrix value) { return Push(std::move(value)); }

Var Graph::Param(Parameter* p) {
  Var v = Push(Matrix());
  nodes_[v.index].param = p;
  if (p->grad.rows() != p->value.rows() || p->grad.cols() != p->value.cols()) p->ZeroGrad();
  return v;
}

Matrix& Graph::Grad(Var v) {
  Node& n = nodes_[v.index];
  if (n.param) return n.param->grad;
  if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::Backward(Var root) {
  if (value(root).size() != 1) throw ShapeError("backward root must be a scalar");
  nodes_[root.index].grad = Matrix::Ones(1, 1);
  for (int i = root.index; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.backward && n.grad.size() != 0) n.backward();
  }
}

Var Graph::MatMul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) {
    throw ShapeError(fmt::format("matmul: {}x{} times {}x{}", value(a).rows(),
                                 value(a).cols(), value(b).rows(), value(b).cols()));
  }
  Var out = Push(Product(value(a), value(b)));
  nodes_[out.index].backward = [this, a, b, out] {
    const Matrix& g = nodes_[out.index].grad;
    AddProduct(Grad(a), g, value(b).transpose());
    AddProduct(Grad(b), value(a).transpose(), g);
  };
  return out;
}

Var Graph::MatMulT(Var a, Var b) {
  if (value(a).cols() != value(b).cols()) {
    throw ShapeError(fmt::format("matmul_t: {}x{} times ({}x{})^T", value(a).rows(),
                                 value(a).cols(), value(b).rows(), value(b).cols()));
  }
  Var out = Push(Product(value(a), value(b).transpose()));
  nodes_[out.index].backward = [this, a, b, out] {
    const Matrix& g = nodes_[out.index].grad;
    AddProduct(Grad(a), g, value(b));
    AddProduct(Grad(b), g.transpose(), value(a));
  };
  return out;
}

Var Graph::Add(Var a, Var b) {
  CheckSameShape(value(a), value(b), "add");
  Var out = Push(value(a) + value(b));
  nodes_[out.index].backward = [this, a, b, out] {
    const Matrix& g = nodes_[out.index].grad;
    Grad(a) += g;
    Grad(b) += g;
  };
  return out;
}

Var Graph::AddRow(Var x, Var row) {
  if (value(row).rows() != 1 || value(row).cols() != value(x).cols()) {
    throw ShapeError("add_row: bias must be 1 x cols");
  }
  Matrix v = value(x);
  v.rowwise() += value(row).row(0);
  Var out = Push(std::move(v));
  nodes_[out.index].backward = [this, x, row, out] {
    const Matrix& g = nodes_[out.index].grad;
    Grad(x) += g;
    Grad(row) += g.colwise().sum();
  };
  return out;
}

Var Graph::AddConstant(Var x, const Matrix& c) {
  CheckSameShape(value(x), c, "add_constant");
  Var out = Push(value(x) + c);
  nodes_[out.index].backward = [this, x, out] { Grad(x) += nodes_[out.index].grad; };
  return out;
}

Var Graph::Scale(Var x, double s) {
  Var out = Push(value(x) * s);
  nodes_[out.index].backward = [this, x, out, s] { Grad(x) += nodes_[out.index].grad * s; };
  return out;
}

Var Graph::Mul(Var x, const Matrix& c) {
  CheckSameShape(value(x), c, "mul");
  Var out = Push(value(x).cwiseProduct(c));
  nodes_[out.index].backward = [this, x, out, c] {
    Grad(x) += nodes_[out.index].grad.cwiseProduct(c);
  };
  return out;
}

Var Graph::Gelu(Var x) {
  Var out = Push(value(x).unaryExpr(
      [](double t) { return 0.5 * t * (1.0 + std::erf(t * kInvSqrt2)); }));
  nodes_[out.index].backward = [this, x, out] {
    const Matrix d = value(x).unaryExpr([](double t) {
      return 0.5 * (1.0 + std::erf(t * kInvSqrt2)) + t * kInvSqrt2Pi * std::exp(-0.5 * t * t);
    });
    Grad(x) += nodes_[out.index].grad.cwiseProduct(d);
  };
  return out;
}

Var Graph::Tanh(Var x) {
  Var out = Push(value(x).array().tanh().matrix());
  nodes_[out.index].backward = [this, x, out] {
    const Matrix& y = value(out);
    Grad(x) += nodes_[out.index].grad.cwiseProduct(
        (1.0 - y.array().square()).matrix());
  };
  return out;
}

Var Graph::SoftmaxRows(Var x) {
  Matrix y = value(x);
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double m = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  Var out = Push(std::move(y));
  nodes_[out.index].backward = [this, x, out] {
    const Matrix& y = value(out);
    const Matrix& g = nodes_[out.index].grad;
    Matrix d = g.cwiseProduct(y);
    const Eigen::VectorXd s = d.rowwise().sum();
    d -= y.cwiseProduct(s.replicate(1, y.cols()));
    Grad(x) += d;
  };
  return out;
}

Var Graph::LayerNormRows(Var x, Var gamma, Var beta, double eps) {
  const Matrix& xv = value(x);
  const Eigen::Index n = xv.cols();
  if (value(gamma).size() != n || value(beta).size() != n) {
    throw ShapeError("layer_norm: gain/bias width mismatch");
  }
  Matrix xhat(xv.rows(), n);
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  Matrix y = xhat;
  y.array().rowwise() *= value(gamma).row(0).array();
  y.rowwise() += value(beta).row(0);
  Var out = Push(std::move(y));
  nodes_[out.index].backward = [this, x, gamma, beta, out, xhat, inv_std, n] {
    const Matrix& g = nodes_[out.index].grad;
    Grad(gamma) += g.cwiseProduct(xhat).colwise().sum();
    Grad(beta) += g.colwise().sum();
    Matrix dxhat = g;
    dxhat.array().rowwise() *= value(gamma).row(0).array();
    Matrix dx(g.rows(), n);
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const double m1 = dxhat.row(r).mean();
      const double m2 = dxhat.row(r).dot(xhat.row(r)) / static_cast<double>(n);
      dx.row(r) = (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2) * inv_std(r);
    }
    Grad(x) += dx;
  };
  return out;
}

Var Graph::Columns(Var x, int start, int count) {
  if (start < 0 || count < 0 || start + count > value(x).cols()) {
    throw ShapeError("columns: slice out of range");
  }
  Var out = Push(value(x).middleCols(start, count));
  nodes_[out.index].backward = [this, x, out, start, count] {
    Grad(x).middleCols(start, count) += nodes_[out.index].grad;
  };
  return out;
}

Var Graph::ConcatColumns(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw ShapeError("concat: row counts differ");
    cols += value(p).cols();
  }
  Matrix y(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    y.middleCols(at, value(p).cols()) = value(p);
    at += value(p).cols();
  }
  Var out = Push(std::move(y));
  std::vector<Var> inputs(parts.begin(), parts.end());
  nodes_[out.index].backward = [this, inputs, out] {
    Eigen::Index at = 0;
    for (Var p : inputs) {
      const Eigen::Index c = value(p).cols();
      Grad(p) += nodes_[out.index].grad.middleCols(at, c);
      at += c;
    }
  };
  return out;
}

Var Graph::GatherRows(Var table, std::span<const int> ids) {
  const Matrix& t = value(table);
  Matrix y(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= t.rows()) {
      throw ShapeError(fmt::format("gather: id {} outside table of {} rows", ids[i], t.rows()));
    }
    y.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
  }
  Var out = Push(std::move(y));
  std::vector<int> idv(ids.begin(), ids.end());
  nodes_[out.index].backward = [this, table, out, idv] {
    const Matrix& g = nodes_[out.index].grad;
    Matrix& dt = Grad(table);
    for (std::size_t i = 0; i < idv.size(); ++i) {
      dt.row(idv[i]) += g.row(static_cast<Eigen::Index>(i));
    }
  };
  return out;
}

Var Graph::MeanRows(Var x, std::span<const std::size_t> rows) {
  if (rows.empty()) throw ShapeError("mean_rows: empty index set");
  const Matrix& xv = value(x);
  Matrix y = Matrix::Zero(1, xv.cols());
  for (std::size_t r : rows) {
    if (r >= static_cast<std::size_t>(xv.rows())) {
      throw ShapeError(fmt::format("mean_rows: row {} outside {} rows", r, xv.rows()));
    }
    y += xv.row(static_cast<Eigen::Index>(r));
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  y *= inv;
  Var out = Push(std::move(y));
  std::vector<std::size_t> rv(rows.begin(), rows.end());
  nodes_[out.index].backward = [this, x, out, rv, inv] {
    const Matrix g = nodes_[out.index].grad * inv;
    Matrix& dx = Grad(x);
    for (std::size_t r : rv) dx.row(static_cast<Eigen::Index>(r)) += g.row(0);
  };
  return out;
}

Var Graph::Sum(std::span<const Var> scalars) {
  double s = 0.0;
  for (Var v : scalars) {
    if (value(v).size() != 1) throw ShapeError("sum: inputs must be scalars");
    s += value(v)(0, 0);
  }
  Var out = Push(Matrix::Constant(1, 1, s));
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  nodes_[out.index].backward = [this, inputs, out] {
    for (Var v : inputs) Grad(v) += nodes_[out.index].grad;
  };
  return out;
}

Var Graph::SoftmaxCrossEntropy(Var logits, int target) {
  const Matrix& z = value(logits);
  if (z.rows() != 1 || target < 0 || target >= z.cols()) {
    throw ShapeError("cross_entropy: logits must be 1 x C with target in range");
  }
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  Var out = Push(Matrix::Constant(1, 1, lse - z(0, target)));
  nodes_[out.index].backward = [this, logits, out, target, lse] {
    Matrix p = (value(logits).array() - lse).exp().matrix();
    p(0, target) -= 1.0;
    Grad(logits) += p * nodes_[out.index].grad(0, 0);
  };
  return out;
}

}  // namespace wic::nn
