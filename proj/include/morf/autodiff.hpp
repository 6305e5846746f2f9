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
// Minimal reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records operations in execution order. Values live on the tape and
// are addressed through lightweight Var handles. Trainable values are
// Parameters owned by the caller; a tape binds them as leaves and backward()
// reports one gradient per bound parameter (zero when unreachable).
//
// Tapes are single-use per forward pass and must not be shared across
// threads.

#ifndef MORF_AUTODIFF_HPP_
#define MORF_AUTODIFF_HPP_

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "morf/types.hpp"

namespace morf::ad {

using NodeId = int;

enum class OpKind {
  kConstant,
  kParameter,
  kAdd,
  kSubtract,
  kMultiply,
  kMatmul,
  kSigmoid,
  kRelu,
  kLog,
  kExp,
  kSum,
  kMean,
  kScale,
  kConcat,
  kSlice,
  kClip,
};

const char* op_name(OpKind op);

struct Parameter {
  std::string name;
  Matrix value;
};

// A named set of trainable parameters ("backbone", "leaves", "tww").
struct ParamGroup {
  std::string name;
  std::vector<Parameter*> params;
};

using ParamSet = std::vector<ParamGroup>;

Index parameter_count(const ParamSet& set);
Vector flatten(const ParamSet& set);
void assign(const ParamSet& set, const Vector& flat);

class Tape;

// Handle to a recorded node. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Scalar scalar() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  NodeId id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = -1;
};

// Result of a backward pass: gradient per node and per bound parameter.
class Gradients {
 public:
  // Gradient with respect to a recorded node; zero when unreachable.
  Matrix wrt(Var v) const;
  // Gradient with respect to a parameter; zero of the parameter's shape when
  // the parameter was not bound or not reachable.
  Matrix wrt(const Parameter& p) const;
  // Concatenated gradients for every parameter in the set, in flatten order.
  Vector flatten(const ParamSet& set) const;

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::vector<Matrix> node_grads_;
  std::unordered_map<const Parameter*, NodeId> bindings_;
};

class Tape {
 public:
  Tape() { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Detached input: never receives gradient.
  Var constant(Matrix value);
  Var constant(Scalar value);
  // Trainable leaf bound to p. Binding the same parameter twice returns the
  // existing node.
  Var parameter(Parameter& p);

  // Generic recording entry point; the typed free functions below wrap it.
  Var record(OpKind op, std::vector<Var> inputs, Scalar a = 0.0,
             Scalar b = 0.0, int axis = 0, std::vector<Index> indices = {});

  Gradients backward(Var loss) const;

  const Matrix& value(NodeId id) const { return nodes_[id].value; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    OpKind op;
    Matrix value;
    std::vector<NodeId> inputs;
    std::vector<Index> indices;
    Scalar a = 0.0;
    Scalar b = 0.0;
    int axis = 0;
    bool requires_grad = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, NodeId> bindings_;
};

// Elementwise add/subtract/multiply accept equal shapes or a 1x1 operand.
Var add(Var a, Var b);
Var subtract(Var a, Var b);
Var multiply(Var a, Var b);
Var matmul(Var a, Var b);
Var sigmoid(Var a);
Var relu(Var a);
Var log(Var a);
Var exp(Var a);
Var sum(Var a);
Var mean(Var a);
Var scale(Var a, Scalar factor);
// axis 0 stacks rows, axis 1 stacks columns.
Var concatenate(const std::vector<Var>& parts, int axis);
// Gathers columns (axis 1) or rows (axis 0); repeated indices are allowed and
// their gradients accumulate.
Var slice(Var a, std::vector<Index> indices, int axis = 1);
Var clip(Var a, Scalar lo, Scalar hi);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return subtract(a, b); }

// Central-difference gradient of f with respect to every coordinate of x.
// Throws NumericError naming the coordinate when f is non-finite.
Vector finite_difference_gradient(const std::function<Scalar(const Vector&)>& f,
                                  const Vector& x, Scalar step);

// Same, perturbing the parameters of `set` in place (restored afterwards).
Vector finite_difference_gradient(const std::function<Scalar()>& f,
                                  const ParamSet& set, Scalar step);

// |a-b| / max(|a|,|b|), or 0 when both are zero.
Scalar relative_error(Scalar a, Scalar b);

// Largest elementwise mismatch between two gradients. A coordinate passes
// when its relative error is within `rel_tol` or its absolute difference is
// within `abs_floor`.
struct GradientComparison {
  Scalar max_relative_error = 0.0;
  Scalar max_absolute_error = 0.0;
  Index worst_index = -1;
  bool ok = true;
};
GradientComparison compare_gradients(const Vector& analytic,
                                     const Vector& numeric, Scalar rel_tol,
                                     Scalar abs_floor);

}  // namespace morf::ad

#endif  // MORF_AUTODIFF_HPP_
