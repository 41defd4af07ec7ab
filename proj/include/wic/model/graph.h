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

// Reverse-mode differentiation over row-major double matrices.
//
// A Graph is a tape: every op appends a node holding its value and a
// closure that pushes the node's gradient to its inputs. Parameters enter
// as leaves whose gradients accumulate straight into Parameter::grad, so
// several backward passes before an optimizer step add up.

#ifndef WIC_MODEL_GRAPH_H_
#define WIC_MODEL_GRAPH_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace wic::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  // 2 for weight matrices and embedding tables, 1 for biases and norm
  // gains (stored as 1 x n). Gradient centralization keys off this.
  int rank = 2;

  Parameter() = default;
  Parameter(std::string n, Matrix v, int r)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())), rank(r) {}

  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
  std::vector<std::size_t> shape() const;
};

struct Var {
  int index = -1;
};

class Graph {
 public:
  Var Constant(Matrix value);
  Var Param(Parameter* p);

  const Matrix& value(Var v) const {
    const Node& n = nodes_[v.index];
    return n.param ? n.param->value : n.value;
  }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 for a 1x1 root and runs the tape backwards.
  void Backward(Var root);

  Var MatMul(Var a, Var b);   // a * b
  Var MatMulT(Var a, Var b);  // a * b^T
  Var Add(Var a, Var b);
  Var AddRow(Var x, Var row);  // x + 1 * row, row is 1 x cols
  Var AddConstant(Var x, const Matrix& c);
  Var Scale(Var x, double s);
  Var Mul(Var x, const Matrix& c);  // elementwise by a constant
  Var Gelu(Var x);                  // exact erf form
  Var Tanh(Var x);
  Var SoftmaxRows(Var x);
  Var LayerNormRows(Var x, Var gamma, Var beta, double eps);
  Var Columns(Var x, int start, int count);
  Var ConcatColumns(std::span<const Var> parts);
  Var GatherRows(Var table, std::span<const int> ids);
  Var MeanRows(Var x, std::span<const std::size_t> rows);
  Var Sum(std::span<const Var> scalars);
  // -log softmax(logits)[target] for a 1 x C row.
  Var SoftmaxCrossEntropy(Var logits, int target);

 private:
  // Parameter leaves read the parameter's value in place; the value must
  // not change while the graph is alive.
  struct Node {
    Matrix value;
    Matrix grad;
    Parameter* param = nullptr;
    std::function<void()> backward;
  };

  Var Push(Matrix value);
  // Gradient sink of a node: the parameter's grad for leaves.
  Matrix& Grad(Var v);

  std::vector<Node> nodes_;
};

}  // namespace wic::nn

#endif  // WIC_MODEL_GRAPH_H_
