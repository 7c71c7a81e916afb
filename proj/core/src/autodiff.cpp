#include "ccgan/autodiff.hpp"

#include <cmath>
#include <sstream>

namespace ccgan::ad {

namespace {

std::string shape_of(const Matrix& m) {
  std::ostringstream os;
  os << "(" << m.rows() << "x" << m.cols() << ")";
  return os.str();
}

void require_nonempty(const Matrix& m, const char* op) {
  if (m.size() == 0) {
    throw DimensionError(std::string(op) + ": empty input " + shape_of(m));
  }
}

void require_finite(const Matrix& m, const char* op) {
  if (!m.allFinite()) {
    throw NumericError(std::string(op) + ": non-finite input");
  }
}

// Broadcast m to (rows, cols). m already matches, or is a single row/column.
Matrix broadcast_to(const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  if (m.rows() == 1 && m.cols() == cols) return m.replicate(rows, 1);
  if (m.cols() == 1 && m.rows() == rows) return m.replicate(1, cols);
  throw DimensionError("broadcast_to: cannot broadcast " + shape_of(m));
}

// Sum g back down to the shape (rows, cols) of a broadcast operand.
Matrix reduce_to(const Matrix& g, Eigen::Index rows, Eigen::Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == g.cols()) return g.colwise().sum();
  if (cols == 1 && rows == g.rows()) return g.rowwise().sum();
  throw DimensionError("reduce_to: cannot reduce " + shape_of(g));
}

bool broadcast_compatible(const Matrix& a, const Matrix& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return true;
  if (a.rows() == b.rows() && (a.cols() == 1 || b.cols() == 1)) return true;
  if (a.cols() == b.cols() && (a.rows() == 1 || b.rows() == 1)) return true;
  return false;
}

}  // namespace

Node Tape::push(Matrix values, Op op, Node p0, Node p1, bool requires_grad) {
  Record rec;
  rec.values = std::move(values);
  rec.op = op;
  rec.parents = {p0.id, p1.id};
  rec.requires_grad = requires_grad;
  nodes_.push_back(std::move(rec));
  return Node{static_cast<std::int32_t>(nodes_.size() - 1)};
}

const Tape::Record& Tape::at(Node n) const {
  if (n.id < 0 || static_cast<std::size_t>(n.id) >= nodes_.size()) {
    throw ContractError("invalid node handle");
  }
  return nodes_[static_cast<std::size_t>(n.id)];
}

Tape::Record& Tape::at(Node n) {
  return const_cast<Record&>(static_cast<const Tape*>(this)->at(n));
}

Node Tape::input(Matrix values, bool requires_grad) {
  require_finite(values, "input");
  return push(std::move(values), Op::kInput, Node{}, Node{}, requires_grad);
}

Node Tape::constant(Matrix values) {
  require_finite(values, "constant");
  return push(std::move(values), Op::kConstant, Node{}, Node{}, false);
}

Node Tape::scalar_constant(double value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return constant(std::move(m));
}

Node Tape::matmul(Node a, Node b) {
  const Matrix& va = at(a).values;
  const Matrix& vb = at(b).values;
  if (va.cols() != vb.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_of(va) + " * " + shape_of(vb));
  }
  const bool rg = at(a).requires_grad || at(b).requires_grad;
  return push(va * vb, Op::kMatMul, a, b, rg);
}

Node Tape::elementwise(Node a, Node b, Op op) {
  const Matrix& va = at(a).values;
  const Matrix& vb = at(b).values;
  const char* name = op == Op::kAdd ? "add" : op == Op::kSub ? "sub" : "mul";
  require_finite(va, name);
  require_finite(vb, name);
  if (!broadcast_compatible(va, vb)) {
    throw DimensionError(std::string(name) + ": incompatible shapes " + shape_of(va) + " vs " + shape_of(vb));
  }
  const Eigen::Index rows = std::max(va.rows(), vb.rows());
  const Eigen::Index cols = std::max(va.cols(), vb.cols());
  const Matrix ba = broadcast_to(va, rows, cols);
  const Matrix bb = broadcast_to(vb, rows, cols);
  Matrix out;
  switch (op) {
    case Op::kAdd: out = ba + bb; break;
    case Op::kSub: out = ba - bb; break;
    default: out = ba.cwiseProduct(bb); break;
  }
  const bool rg = at(a).requires_grad || at(b).requires_grad;
  return push(std::move(out), op, a, b, rg);
}

Node Tape::add(Node a, Node b) { return elementwise(a, b, Op::kAdd); }
Node Tape::sub(Node a, Node b) { return elementwise(a, b, Op::kSub); }
Node Tape::mul(Node a, Node b) { return elementwise(a, b, Op::kMul); }

Node Tape::unary_result(Matrix values, Op op, Node parent) {
  return push(std::move(values), op, parent, Node{}, at(parent).requires_grad);
}

Node Tape::relu(Node a) {
  const Matrix& v = at(a).values;
  require_finite(v, "relu");
  return unary_result(v.cwiseMax(0.0), Op::kRelu, a);
}

Node Tape::tanh(Node a) {
  const Matrix& v = at(a).values;
  require_finite(v, "tanh");
  return unary_result(v.array().tanh().matrix(), Op::kTanh, a);
}

Node Tape::sigmoid(Node a) {
  const Matrix& v = at(a).values;
  require_finite(v, "sigmoid");
  // Split by sign so neither branch exponentiates a positive argument.
  Matrix out = v.unaryExpr([](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return unary_result(std::move(out), Op::kSigmoid, a);
}

Node Tape::exp(Node a) {
  const Matrix& v = at(a).values;
  require_finite(v, "exp");
  return unary_result(v.array().exp().matrix(), Op::kExp, a);
}

Node Tape::log(Node a) {
  const Matrix& v = at(a).values;
  require_finite(v, "log");
  return unary_result(v.cwiseMax(kLogEps).array().log().matrix(), Op::kLog, a);
}

Node Tape::neg(Node a) {
  const Matrix& v = at(a).values;
  require_finite(v, "neg");
  return unary_result(-v, Op::kNeg, a);
}

Node Tape::transpose(Node a) {
  return unary_result(at(a).values.transpose(), Op::kTranspose, a);
}

Node Tape::row_softmax(Node a) {
  const Matrix& v = at(a).values;
  require_nonempty(v, "row_softmax");
  require_finite(v, "row_softmax");
  Matrix out(v.rows(), v.cols());
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double m = v.row(r).maxCoeff();
    Eigen::RowVectorXd e = (v.row(r).array() - m).exp();
    out.row(r) = e / e.sum();
  }
  return unary_result(std::move(out), Op::kRowSoftmax, a);
}

Node Tape::sum(Node a) {
  const Matrix& v = at(a).values;
  require_nonempty(v, "sum");
  Matrix out(1, 1);
  out(0, 0) = v.sum();
  return unary_result(std::move(out), Op::kSum, a);
}

Node Tape::mean(Node a) {
  const Matrix& v = at(a).values;
  require_nonempty(v, "mean");
  Matrix out(1, 1);
  out(0, 0) = v.mean();
  return unary_result(std::move(out), Op::kMean, a);
}

Node Tape::l1_norm(Node a) {
  const Matrix& v = at(a).values;
  require_nonempty(v, "l1_norm");
  Matrix out(1, 1);
  out(0, 0) = v.array().abs().sum();
  return unary_result(std::move(out), Op::kL1Norm, a);
}

Node Tape::stop_gradient(Node a) {
  return push(at(a).values, Op::kStopGradient, a, Node{}, false);
}

const Matrix& Tape::values(Node n) const { return at(n).values; }

bool Tape::has_grad(Node n) const { return at(n).grad.size() > 0; }

bool Tape::requires_grad(Node n) const { return at(n).requires_grad; }

const Matrix& Tape::grad(Node n) const {
  const Record& rec = at(n);
  if (rec.grad.size() == 0) {
    throw ContractError("grad: node has no gradient (did backward run?)");
  }
  return rec.grad;
}

double Tape::scalar(Node n) const {
  const Matrix& v = at(n).values;
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractError("scalar: node is not 1x1, got " + shape_of(v));
  }
  return v(0, 0);
}

Matrix& Tape::grad_accumulator(std::int32_t id) {
  Record& rec = nodes_[static_cast<std::size_t>(id)];
  if (rec.grad.size() == 0) {
    rec.grad = Matrix::Zero(rec.values.rows(), rec.values.cols());
  }
  return rec.grad;
}

void Tape::backward(Node root) {
  const Record& r = at(root);
  if (r.values.rows() != 1 || r.values.cols() != 1) {
    throw ContractError("backward: root must be scalar (1x1), got " + shape_of(r.values));
  }
  for (Record& rec : nodes_) rec.grad.resize(0, 0);
  if (!r.requires_grad) return;
  grad_accumulator(root.id).setOnes();
  for (std::int32_t id = root.id; id >= 0; --id) {
    const Record& rec = nodes_[static_cast<std::size_t>(id)];
    if (!rec.requires_grad || rec.grad.size() == 0) continue;
    backward_into_parents(rec);
  }
}

void Tape::backward_into_parents(const Record& rec) {
  const Matrix& g = rec.grad;
  const auto parent_needs = [&](int slot) {
    const std::int32_t pid = rec.parents[static_cast<std::size_t>(slot)];
    return pid >= 0 && nodes_[static_cast<std::size_t>(pid)].requires_grad;
  };
  const auto parent_values = [&](int slot) -> const Matrix& {
    return nodes_[static_cast<std::size_t>(rec.parents[static_cast<std::size_t>(slot)])].values;
  };
  const auto accumulate = [&](int slot, const Matrix& contribution) {
    grad_accumulator(rec.parents[static_cast<std::size_t>(slot)]) += contribution;
  };

  switch (rec.op) {
    case Op::kInput:
    case Op::kConstant:
    case Op::kStopGradient:
      break;
    case Op::kMatMul: {
      if (parent_needs(0)) accumulate(0, g * parent_values(1).transpose());
      if (parent_needs(1)) accumulate(1, parent_values(0).transpose() * g);
      break;
    }
    case Op::kAdd: {
      if (parent_needs(0)) accumulate(0, reduce_to(g, parent_values(0).rows(), parent_values(0).cols()));
      if (parent_needs(1)) accumulate(1, reduce_to(g, parent_values(1).rows(), parent_values(1).cols()));
      break;
    }
    case Op::kSub: {
      if (parent_needs(0)) accumulate(0, reduce_to(g, parent_values(0).rows(), parent_values(0).cols()));
      if (parent_needs(1)) accumulate(1, reduce_to(-g, parent_values(1).rows(), parent_values(1).cols()));
      break;
    }
    case Op::kMul: {
      const Matrix& a = parent_values(0);
      const Matrix& b = parent_values(1);
      if (parent_needs(0)) {
        accumulate(0, reduce_to(g.cwiseProduct(broadcast_to(b, g.rows(), g.cols())), a.rows(), a.cols()));
      }
      if (parent_needs(1)) {
        accumulate(1, reduce_to(g.cwiseProduct(broadcast_to(a, g.rows(), g.cols())), b.rows(), b.cols()));
      }
      break;
    }
    case Op::kRelu: {
      if (parent_needs(0)) {
        const Matrix mask = (parent_values(0).array() > 0.0).cast<double>().matrix();
        accumulate(0, g.cwiseProduct(mask));
      }
      break;
    }
    case Op::kTanh: {
      if (parent_needs(0)) {
        accumulate(0, g.cwiseProduct((1.0 - rec.values.array().square()).matrix()));
      }
      break;
    }
    case Op::kSigmoid: {
      if (parent_needs(0)) {
        accumulate(0, g.cwiseProduct((rec.values.array() * (1.0 - rec.values.array())).matrix()));
      }
      break;
    }
    case Op::kExp: {
      if (parent_needs(0)) accumulate(0, g.cwiseProduct(rec.values));
      break;
    }
    case Op::kLog: {
      if (parent_needs(0)) {
        // Zero derivative inside the clamp region, 1/x elsewhere.
        const Matrix d = parent_values(0).unaryExpr(
            [](double x) { return x > kLogEps ? 1.0 / x : 0.0; });
        accumulate(0, g.cwiseProduct(d));
      }
      break;
    }
    case Op::kNeg: {
      if (parent_needs(0)) accumulate(0, -g);
      break;
    }
    case Op::kTranspose: {
      if (parent_needs(0)) accumulate(0, g.transpose());
      break;
    }
    case Op::kRowSoftmax: {
      if (parent_needs(0)) {
        const Matrix& y = rec.values;
        Matrix d(y.rows(), y.cols());
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
          const double dot = g.row(r).dot(y.row(r));
          d.row(r) = y.row(r).cwiseProduct(g.row(r) - Eigen::RowVectorXd::Constant(y.cols(), dot));
        }
        accumulate(0, d);
      }
      break;
    }
    case Op::kSum: {
      if (parent_needs(0)) {
        const Matrix& a = parent_values(0);
        accumulate(0, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
      }
      break;
    }
    case Op::kMean: {
      if (parent_needs(0)) {
        const Matrix& a = parent_values(0);
        accumulate(0, Matrix::Constant(a.rows(), a.cols(), g(0, 0) / static_cast<double>(a.size())));
      }
      break;
    }
    case Op::kL1Norm: {
      if (parent_needs(0)) {
        // Subgradient of |x| at 0 taken as 0.
        const Matrix s = parent_values(0).unaryExpr(
            [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
        accumulate(0, g(0, 0) * s);
      }
      break;
    }
  }
}

}  // namespace ccgan::ad
