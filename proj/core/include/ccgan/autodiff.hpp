#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

#include "ccgan/errors.hpp"

namespace ccgan::ad {

using Matrix = Eigen::MatrixXd;

enum class Op : std::uint8_t {
  kInput,
  kConstant,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kRelu,
  kTanh,
  kSigmoid,
  kExp,
  kLog,
  kNeg,
  kTranspose,
  kRowSoftmax,
  kSum,
  kMean,
  kL1Norm,
  kStopGradient,
};

/// Cheap handle into a Tape. Valid only for the tape that produced it.
struct Node {
  std::int32_t id = -1;
};

/// Define-by-run computation tape over dense 64-bit matrices.
///
/// Nodes are appended in topological order; backward() walks them in reverse
/// and accumulates gradients additively over all paths. The tape holds no
/// random state, so replaying the same sequence of operations reproduces
/// every value and gradient bit for bit.
class Tape {
 public:
  /// Inputs below this bound are clamped before log so that saturated
  /// discriminators keep GAN losses finite.
  static constexpr double kLogEps = 1e-12;

  Node input(Matrix values, bool requires_grad = true);
  Node constant(Matrix values);
  Node scalar_constant(double value);

  Node matmul(Node a, Node b);

  /// Elementwise ops accept equal shapes, or broadcast one (rows,1) or
  /// (1,cols) operand against the other.
  Node add(Node a, Node b);
  Node sub(Node a, Node b);
  Node mul(Node a, Node b);

  Node relu(Node a);
  Node tanh(Node a);
  Node sigmoid(Node a);
  Node exp(Node a);
  Node log(Node a);
  Node neg(Node a);

  Node transpose(Node a);

  /// Numerically stable softmax over each row (max subtraction).
  Node row_softmax(Node a);

  Node sum(Node a);
  Node mean(Node a);
  Node l1_norm(Node a);

  /// Identity on values; contributes zero gradient to its parent.
  Node stop_gradient(Node a);

  /// Populates grad for every requires_grad ancestor of root (a 1x1 node).
  /// Clears previous gradients first, so repeated calls are idempotent.
  void backward(Node root);

  const Matrix& values(Node n) const;
  const Matrix& grad(Node n) const;
  bool has_grad(Node n) const;
  bool requires_grad(Node n) const;
  double scalar(Node n) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Record {
    Matrix values;
    Matrix grad;  // empty until backward touches this node
    Op op = Op::kInput;
    std::array<std::int32_t, 2> parents{-1, -1};
    bool requires_grad = false;
  };

  Node push(Matrix values, Op op, Node p0, Node p1, bool requires_grad);
  Node unary_result(Matrix values, Op op, Node parent);
  Node elementwise(Node a, Node b, Op op);

  const Record& at(Node n) const;
  Record& at(Node n);
  Matrix& grad_accumulator(std::int32_t id);
  void backward_into_parents(const Record& rec);

  std::vector<Record> nodes_;
};

}  // namespace ccgan::ad
