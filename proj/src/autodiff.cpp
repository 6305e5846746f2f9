// Copyright 2026 The MORF Authors. All Rights Reserved.
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
// =============================================================================

#include "morf/autodiff.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace morf::ad {
namespace {

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << "[" << m.rows() << "x" << m.cols() << "]";
  return os.str();
}

bool is_unit(const Matrix& m) { return m.rows() == 1 && m.cols() == 1; }

void check_elementwise(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return;
  if (is_unit(a) || is_unit(b)) return;
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) +
                   " vs " + shape_str(b));
}

// Result shape of a broadcasting elementwise op.
Matrix broadcast(const Matrix& a, const Matrix& other) {
  if (is_unit(a) && !is_unit(other)) {
    return Matrix::Constant(other.rows(), other.cols(), a(0, 0));
  }
  return a;
}

// Reduces an upstream gradient to the shape of an operand that may have been
// broadcast from 1x1.
Matrix reduce_to(const Matrix& grad, const Matrix& operand) {
  if (is_unit(operand) && !is_unit(grad)) {
    return Matrix::Constant(1, 1, grad.sum());
  }
  return grad;
}

void accumulate(Matrix& slot, const Matrix& g) {
  if (slot.size() == 0) {
    slot = g;
  } else {
    slot += g;
  }
}

}  // namespace

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kConstant: return "constant";
    case OpKind::kParameter: return "parameter";
    case OpKind::kAdd: return "add";
    case OpKind::kSubtract: return "subtract";
    case OpKind::kMultiply: return "multiply";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kRelu: return "relu";
    case OpKind::kLog: return "log";
    case OpKind::kExp: return "exp";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kScale: return "scale";
    case OpKind::kConcat: return "concatenate";
    case OpKind::kSlice: return "slice";
    case OpKind::kClip: return "clip";
  }
  return "unknown";
}

Index parameter_count(const ParamSet& set) {
  Index n = 0;
  for (const auto& group : set) {
    for (const Parameter* p : group.params) n += p->value.size();
  }
  return n;
}

Vector flatten(const ParamSet& set) {
  Vector flat(parameter_count(set));
  Index offset = 0;
  for (const auto& group : set) {
    for (const Parameter* p : group.params) {
      flat.segment(offset, p->value.size()) =
          p->value.reshaped(p->value.size(), 1);
      offset += p->value.size();
    }
  }
  return flat;
}

void assign(const ParamSet& set, const Vector& flat) {
  if (flat.size() != parameter_count(set)) {
    throw ShapeError("assign: expected " + std::to_string(parameter_count(set)) +
                     " values, got " + std::to_string(flat.size()));
  }
  Index offset = 0;
  for (const auto& group : set) {
    for (Parameter* p : group.params) {
      p->value.reshaped(p->value.size(), 1) =
          flat.segment(offset, p->value.size());
      offset += p->value.size();
    }
  }
}

const Matrix& Var::value() const { return tape_->value(id_); }

Scalar Var::scalar() const {
  const Matrix& v = value();
  if (!is_unit(v)) throw ShapeError("scalar(): value is " + shape_str(v));
  return v(0, 0);
}

Matrix Gradients::wrt(Var v) const {
  const Matrix& g = node_grads_.at(v.id());
  if (g.size() == 0) return Matrix::Zero(v.rows(), v.cols());
  return g;
}

Matrix Gradients::wrt(const Parameter& p) const {
  auto it = bindings_.find(&p);
  if (it == bindings_.end()) {
    return Matrix::Zero(p.value.rows(), p.value.cols());
  }
  const Matrix& g = node_grads_[it->second];
  if (g.size() == 0) return Matrix::Zero(p.value.rows(), p.value.cols());
  return g;
}

Vector Gradients::flatten(const ParamSet& set) const {
  Vector flat = Vector::Zero(parameter_count(set));
  Index offset = 0;
  for (const auto& group : set) {
    for (const Parameter* p : group.params) {
      const Index n = p->value.size();
      auto it = bindings_.find(p);
      if (it != bindings_.end() && node_grads_[it->second].size() != 0) {
        flat.segment(offset, n) = node_grads_[it->second].reshaped(n, 1);
      }
      offset += n;
    }
  }
  return flat;
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Var Tape::constant(Matrix value) {
  Node n;
  n.op = OpKind::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant(Scalar value) {
  return constant(Matrix::Constant(1, 1, value));
}

Var Tape::parameter(Parameter& p) {
  auto it = bindings_.find(&p);
  if (it != bindings_.end()) return Var(this, it->second);
  Node n;
  n.op = OpKind::kParameter;
  n.value = p.value;
  n.requires_grad = true;
  Var v = push(std::move(n));
  bindings_.emplace(&p, v.id());
  return v;
}

Var Tape::record(OpKind op, std::vector<Var> inputs, Scalar a, Scalar b,
                 int axis, std::vector<Index> indices) {
  for (const Var& v : inputs) {
    if (v.tape() != this) {
      throw Error(std::string(op_name(op)) + ": input recorded on another tape");
    }
  }
  auto in = [&](std::size_t k) -> const Matrix& {
    return nodes_[inputs[k].id()].value;
  };
  auto arity = [&](std::size_t k) {
    if (inputs.size() != k) {
      throw Error(std::string(op_name(op)) + ": expected " + std::to_string(k) +
                  " inputs, got " + std::to_string(inputs.size()));
    }
  };

  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.axis = axis;
  switch (op) {
    case OpKind::kConstant:
    case OpKind::kParameter:
      throw Error("record: leaves are created with constant()/parameter()");
    case OpKind::kAdd:
    case OpKind::kSubtract:
    case OpKind::kMultiply: {
      arity(2);
      check_elementwise(op_name(op), in(0), in(1));
      Matrix lhs = broadcast(in(0), in(1));
      Matrix rhs = broadcast(in(1), in(0));
      if (op == OpKind::kAdd) {
        n.value = lhs + rhs;
      } else if (op == OpKind::kSubtract) {
        n.value = lhs - rhs;
      } else {
        n.value = lhs.cwiseProduct(rhs);
      }
      break;
    }
    case OpKind::kMatmul:
      arity(2);
      if (in(0).cols() != in(1).rows()) {
        throw ShapeError("matmul: shape mismatch " + shape_str(in(0)) + " x " +
                         shape_str(in(1)));
      }
      n.value = in(0) * in(1);
      break;
    case OpKind::kSigmoid:
      arity(1);
      n.value = in(0).unaryExpr(
          [](Scalar x) { return Scalar(1) / (Scalar(1) + std::exp(-x)); });
      break;
    case OpKind::kRelu:
      arity(1);
      n.value = in(0).cwiseMax(0.0);
      break;
    case OpKind::kLog:
      arity(1);
      n.value = in(0).array().log().matrix();
      break;
    case OpKind::kExp:
      arity(1);
      n.value = in(0).array().exp().matrix();
      break;
    case OpKind::kSum:
      arity(1);
      n.value = Matrix::Constant(1, 1, in(0).sum());
      break;
    case OpKind::kMean:
      arity(1);
      if (in(0).size() == 0) throw ShapeError("mean: empty input");
      n.value = Matrix::Constant(1, 1, in(0).mean());
      break;
    case OpKind::kScale:
      arity(1);
      n.value = in(0) * a;
      break;
    case OpKind::kConcat: {
      if (inputs.empty()) throw Error("concatenate: no inputs");
      if (axis != 0 && axis != 1) throw Error("concatenate: axis must be 0 or 1");
      Index rows = 0;
      Index cols = 0;
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Matrix& m = in(k);
        if (axis == 1) {
          if (k > 0 && m.rows() != rows) {
            throw ShapeError("concatenate: row mismatch " + shape_str(in(0)) +
                             " vs " + shape_str(m));
          }
          rows = m.rows();
          cols += m.cols();
        } else {
          if (k > 0 && m.cols() != cols) {
            throw ShapeError("concatenate: column mismatch " +
                             shape_str(in(0)) + " vs " + shape_str(m));
          }
          cols = m.cols();
          rows += m.rows();
        }
      }
      n.value.resize(rows, cols);
      Index offset = 0;
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Matrix& m = in(k);
        if (axis == 1) {
          n.value.middleCols(offset, m.cols()) = m;
          offset += m.cols();
        } else {
          n.value.middleRows(offset, m.rows()) = m;
          offset += m.rows();
        }
      }
      break;
    }
    case OpKind::kSlice: {
      arity(1);
      if (axis != 0 && axis != 1) throw Error("slice: axis must be 0 or 1");
      const Matrix& src = in(0);
      const Index extent = axis == 1 ? src.cols() : src.rows();
      for (Index idx : indices) {
        if (idx < 0 || idx >= extent) {
          throw ShapeError("slice: index " + std::to_string(idx) +
                           " out of range for " + shape_str(src));
        }
      }
      const auto count = static_cast<Index>(indices.size());
      if (axis == 1) {
        n.value.resize(src.rows(), count);
        for (Index k = 0; k < count; ++k) n.value.col(k) = src.col(indices[k]);
      } else {
        n.value.resize(count, src.cols());
        for (Index k = 0; k < count; ++k) n.value.row(k) = src.row(indices[k]);
      }
      n.indices = std::move(indices);
      break;
    }
    case OpKind::kClip:
      arity(1);
      if (!(a <= b)) throw Error("clip: lower bound exceeds upper bound");
      n.value = in(0).cwiseMax(a).cwiseMin(b);
      break;
  }

  for (const Var& v : inputs) {
    n.inputs.push_back(v.id());
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
  }
  return push(std::move(n));
}

Gradients Tape::backward(Var loss) const {
  if (loss.tape() != this) throw Error("backward: loss is on another tape");
  const Matrix& lv = nodes_[loss.id()].value;
  if (!is_unit(lv)) {
    throw ShapeError("backward: loss must be scalar, got " + shape_str(lv));
  }

  Gradients out;
  out.tape_ = this;
  out.bindings_ = bindings_;
  out.node_grads_.assign(nodes_.size(), Matrix());
  std::vector<Matrix>& grads = out.node_grads_;
  grads[loss.id()] = Matrix::Ones(1, 1);

  for (NodeId id = loss.id(); id >= 0; --id) {
    const Node& n = nodes_[id];
    if (!n.requires_grad || grads[id].size() == 0) continue;
    const Matrix& g = grads[id];
    auto input_value = [&](std::size_t k) -> const Matrix& {
      return nodes_[n.inputs[k]].value;
    };
    auto needs = [&](std::size_t k) {
      return nodes_[n.inputs[k]].requires_grad;
    };
    auto send = [&](std::size_t k, const Matrix& contribution) {
      accumulate(grads[n.inputs[k]], contribution);
    };

    switch (n.op) {
      case OpKind::kConstant:
      case OpKind::kParameter:
        break;
      case OpKind::kAdd:
        if (needs(0)) send(0, reduce_to(g, input_value(0)));
        if (needs(1)) send(1, reduce_to(g, input_value(1)));
        break;
      case OpKind::kSubtract:
        if (needs(0)) send(0, reduce_to(g, input_value(0)));
        if (needs(1)) send(1, reduce_to(-g, input_value(1)));
        break;
      case OpKind::kMultiply: {
        const Matrix lhs = broadcast(input_value(0), input_value(1));
        const Matrix rhs = broadcast(input_value(1), input_value(0));
        if (needs(0)) send(0, reduce_to(g.cwiseProduct(rhs), input_value(0)));
        if (needs(1)) send(1, reduce_to(g.cwiseProduct(lhs), input_value(1)));
        break;
      }
      case OpKind::kMatmul:
        if (needs(0)) send(0, g * input_value(1).transpose());
        if (needs(1)) send(1, input_value(0).transpose() * g);
        break;
      case OpKind::kSigmoid:
        send(0, g.cwiseProduct(
                    n.value.cwiseProduct((1.0 - n.value.array()).matrix())));
        break;
      case OpKind::kRelu:
        send(0, (input_value(0).array() > 0.0).select(g, 0.0));
        break;
      case OpKind::kLog:
        send(0, g.cwiseQuotient(input_value(0)));
        break;
      case OpKind::kExp:
        send(0, g.cwiseProduct(n.value));
        break;
      case OpKind::kSum:
        send(0, Matrix::Constant(input_value(0).rows(), input_value(0).cols(),
                                 g(0, 0)));
        break;
      case OpKind::kMean: {
        const Matrix& x = input_value(0);
        send(0, Matrix::Constant(x.rows(), x.cols(),
                                 g(0, 0) / static_cast<Scalar>(x.size())));
        break;
      }
      case OpKind::kScale:
        send(0, g * n.a);
        break;
      case OpKind::kConcat: {
        Index offset = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const Matrix& m = input_value(k);
          if (n.axis == 1) {
            if (needs(k)) send(k, g.middleCols(offset, m.cols()));
            offset += m.cols();
          } else {
            if (needs(k)) send(k, g.middleRows(offset, m.rows()));
            offset += m.rows();
          }
        }
        break;
      }
      case OpKind::kSlice: {
        const Matrix& src = input_value(0);
        Matrix scatter = Matrix::Zero(src.rows(), src.cols());
        for (std::size_t k = 0; k < n.indices.size(); ++k) {
          const auto j = static_cast<Index>(k);
          if (n.axis == 1) {
            scatter.col(n.indices[k]) += g.col(j);
          } else {
            scatter.row(n.indices[k]) += g.row(j);
          }
        }
        send(0, scatter);
        break;
      }
      case OpKind::kClip: {
        const Matrix& x = input_value(0);
        const Scalar lo = n.a;
        const Scalar hi = n.b;
        send(0, ((x.array() >= lo) && (x.array() <= hi)).select(g, 0.0));
        break;
      }
    }
  }
  return out;
}

Var add(Var a, Var b) { return a.tape()->record(OpKind::kAdd, {a, b}); }
Var subtract(Var a, Var b) {
  return a.tape()->record(OpKind::kSubtract, {a, b});
}
Var multiply(Var a, Var b) {
  return a.tape()->record(OpKind::kMultiply, {a, b});
}
Var matmul(Var a, Var b) { return a.tape()->record(OpKind::kMatmul, {a, b}); }
Var sigmoid(Var a) { return a.tape()->record(OpKind::kSigmoid, {a}); }
Var relu(Var a) { return a.tape()->record(OpKind::kRelu, {a}); }
Var log(Var a) { return a.tape()->record(OpKind::kLog, {a}); }
Var exp(Var a) { return a.tape()->record(OpKind::kExp, {a}); }
Var sum(Var a) { return a.tape()->record(OpKind::kSum, {a}); }
Var mean(Var a) { return a.tape()->record(OpKind::kMean, {a}); }
Var scale(Var a, Scalar factor) {
  return a.tape()->record(OpKind::kScale, {a}, factor);
}
Var concatenate(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw Error("concatenate: no inputs");
  return parts.front().tape()->record(OpKind::kConcat, parts, 0.0, 0.0, axis);
}
Var slice(Var a, std::vector<Index> indices, int axis) {
  return a.tape()->record(OpKind::kSlice, {a}, 0.0, 0.0, axis,
                          std::move(indices));
}
Var clip(Var a, Scalar lo, Scalar hi) {
  return a.tape()->record(OpKind::kClip, {a}, lo, hi);
}

Vector finite_difference_gradient(const std::function<Scalar(const Vector&)>& f,
                                  const Vector& x, Scalar step) {
  if (!(step > 0.0)) throw Error("finite_difference_gradient: step must be > 0");
  Vector grad(x.size());
  Vector probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar orig = probe[i];
    probe[i] = orig + step;
    const Scalar plus = f(probe);
    probe[i] = orig - step;
    const Scalar minus = f(probe);
    probe[i] = orig;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("finite_difference_gradient: non-finite value at "
                         "coordinate " + std::to_string(i));
    }
    grad[i] = (plus - minus) / (2.0 * step);
  }
  return grad;
}

Vector finite_difference_gradient(const std::function<Scalar()>& f,
                                  const ParamSet& set, Scalar step) {
  const Vector base = flatten(set);
  Vector grad;
  try {
    grad = finite_difference_gradient(
        [&](const Vector& x) {
          assign(set, x);
          return f();
        },
        base, step);
  } catch (...) {
    assign(set, base);
    throw;
  }
  assign(set, base);
  return grad;
}

Scalar relative_error(Scalar a, Scalar b) {
  const Scalar denom = std::max(std::abs(a), std::abs(b));
  if (denom == 0.0) return 0.0;
  return std::abs(a - b) / denom;
}

GradientComparison compare_gradients(const Vector& analytic,
                                     const Vector& numeric, Scalar rel_tol,
                                     Scalar abs_floor) {
  if (analytic.size() != numeric.size()) {
    throw ShapeError("compare_gradients: sizes " +
                     std::to_string(analytic.size()) + " and " +
                     std::to_string(numeric.size()));
  }
  GradientComparison cmp;
  for (Index i = 0; i < analytic.size(); ++i) {
    const Scalar abs_err = std::abs(analytic[i] - numeric[i]);
    cmp.max_absolute_error = std::max(cmp.max_absolute_error, abs_err);
    const Scalar scale = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
    if (scale <= abs_floor) continue;
    const Scalar rel = relative_error(analytic[i], numeric[i]);
    if (rel > cmp.max_relative_error) {
      cmp.max_relative_error = rel;
      cmp.worst_index = i;
    }
    if (rel > rel_tol && abs_err > abs_floor) cmp.ok = false;
  }
  return cmp;
}

}  // namespace morf::ad
