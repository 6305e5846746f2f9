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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace morf::ad {
namespace {

TEST(Tape, ForwardValues) {
  Tape tape;
  EXPECT_DOUBLE_EQ(sigmoid(tape.constant(0.0)).scalar(), 0.5);
  Matrix a = Matrix::Ones(2, 3);
  Matrix b = Matrix::Ones(3, 1);
  Var m = matmul(tape.constant(a), tape.constant(b));
  EXPECT_EQ(m.rows(), 2);
  EXPECT_EQ(m.cols(), 1);
  EXPECT_DOUBLE_EQ(m.value()(0, 0), 3.0);
  RowVector v(3);
  v << 1, 2, 3;
  EXPECT_DOUBLE_EQ(sum(tape.constant(Matrix(v))).scalar(), 6.0);
}

TEST(Tape, ShapeMismatchNamesShapes) {
  Tape tape;
  Var a = tape.constant(Matrix::Ones(2, 3));
  Var b = tape.constant(Matrix::Ones(2, 3));
  try {
    matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
  }
  EXPECT_THROW(add(a, tape.constant(Matrix::Ones(3, 2))), ShapeError);
}

TEST(Tape, BackwardRequiresScalar) {
  Tape tape;
  Parameter p{"p", Matrix::Ones(2, 2)};
  EXPECT_THROW(tape.backward(tape.parameter(p)), ShapeError);
}

TEST(Backward, SquareAndSigmoid) {
  Parameter x{"x", Matrix::Constant(1, 1, 3.0)};
  Tape tape;
  Var v = tape.parameter(x);
  EXPECT_DOUBLE_EQ(tape.backward(multiply(v, v)).wrt(x)(0, 0), 6.0);

  Parameter z{"z", Matrix::Zero(1, 1)};
  Tape t2;
  EXPECT_DOUBLE_EQ(t2.backward(sigmoid(t2.parameter(z))).wrt(z)(0, 0), 0.25);
}

TEST(Backward, ConstantsReceiveNoGradient) {
  Parameter x{"x", Matrix::Constant(1, 1, 2.0)};
  Tape tape;
  Var c = tape.constant(5.0);
  Var loss = multiply(tape.parameter(x), c);
  Gradients g = tape.backward(loss);
  EXPECT_DOUBLE_EQ(g.wrt(x)(0, 0), 5.0);
  EXPECT_DOUBLE_EQ(g.wrt(c)(0, 0), 0.0);
}

TEST(Backward, UnreachableParameterIsZero) {
  Parameter x{"x", Matrix::Constant(1, 1, 2.0)};
  Parameter y{"y", Matrix::Constant(2, 2, 1.0)};
  Tape tape;
  tape.parameter(y);
  Gradients g = tape.backward(exp(tape.parameter(x)));
  EXPECT_TRUE(g.wrt(y).isZero());
  EXPECT_EQ(g.wrt(y).rows(), 2);
}

TEST(Backward, FanOutAccumulates) {
  Parameter x{"x", Matrix::Constant(1, 1, 1.5)};
  Tape tape;
  Var v = tape.parameter(x);
  Var loss = add(add(v, v), multiply(v, v));
  EXPECT_DOUBLE_EQ(tape.backward(loss).wrt(x)(0, 0), 2.0 + 3.0);
}

TEST(FiniteDifference, Examples) {
  Vector x(1);
  x << 3.0;
  Vector g = finite_difference_gradient([](const Vector& v) { return v(0) * v(0); }, x, 1e-4);
  EXPECT_NEAR(g(0), 6.0, 1e-7);
  g = finite_difference_gradient([](const Vector&) { return 4.0; }, x, 1e-4);
  EXPECT_EQ(g(0), 0.0);
  x << 0.0;
  g = finite_difference_gradient(
      [](const Vector& v) { return 1.0 / (1.0 + std::exp(-v(0))); }, x, 1e-4);
  EXPECT_NEAR(g(0), 0.25, 1e-8);
}

TEST(FiniteDifference, RejectsNonFinite) {
  Vector x = Vector::Zero(3);
  try {
    finite_difference_gradient(
        [](const Vector& v) { return v(2) > 0 ? std::log(-1.0) : 0.0; }, x, 1e-4);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
  EXPECT_THROW(finite_difference_gradient([](const Vector&) { return 0.0; }, x, 0.0),
               Error);
}

// Random composite graphs: a chain of layers over bound parameters with mixed
// nonlinearities, concatenation and slicing.
struct RandomGraph {
  std::vector<Parameter> params;
  std::vector<int> ops;
  int rows = 1;

  explicit RandomGraph(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> width(1, 16);
    std::uniform_int_distribution<int> depth(1, 6);
    std::uniform_int_distribution<int> op(0, 7);
    std::normal_distribution<Scalar> normal(0.0, 0.7);
    rows = std::uniform_int_distribution<int>(1, 4)(rng);
    int cols = width(rng);
    const int layers = depth(rng);
    auto make = [&](Index r, Index c) {
      Matrix m(r, c);
      for (Index i = 0; i < m.size(); ++i) m(i) = normal(rng);
      params.push_back({"p" + std::to_string(params.size()), m});
    };
    params.reserve(4 * layers + 1);
    make(rows, cols);
    for (int l = 0; l < layers; ++l) {
      const int next = width(rng);
      const int kind = op(rng);
      ops.push_back(kind);
      make(cols, next);      // weight
      make(rows, next);      // elementwise partner
      cols = next;
    }
  }

  Var build(Tape& tape) {
    Var h = tape.parameter(params[0]);
    std::size_t k = 1;
    for (int kind : ops) {
      Var w = tape.parameter(params[k++]);
      Var e = tape.parameter(params[k++]);
      h = matmul(h, w);
      switch (kind) {
        case 0: h = sigmoid(h); break;
        case 1: h = relu(h); break;
        case 2: h = exp(scale(sigmoid(h), 0.5)); break;
        case 3: h = log(add(sigmoid(h), tape.constant(Matrix::Constant(h.rows(), h.cols(), 0.5)))); break;
        case 4: h = multiply(sigmoid(h), e); break;
        case 5: h = subtract(sigmoid(h), e); break;
        case 6: {
          Var both = concatenate({sigmoid(h), e}, 1);
          std::vector<Index> idx;
          for (Index c = 0; c < h.cols(); ++c) idx.push_back(2 * c % both.cols());
          h = slice(both, idx, 1);
          break;
        }
        default: h = clip(sigmoid(h), 0.2, 0.8); break;
      }
    }
    return mean(multiply(h, h));
  }

  ParamSet set() {
    ParamGroup g{"graph", {}};
    for (auto& p : params) g.params.push_back(&p);
    return {g};
  }
};

TEST(Gradcheck, RandomCompositeGraphs) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    RandomGraph graph(rng);
    const ParamSet set = graph.set();
    Tape tape;
    const Vector analytic = tape.backward(graph.build(tape)).flatten(set);
    const Vector numeric = finite_difference_gradient(
        [&] {
          Tape t;
          return graph.build(t).scalar();
        },
        set, 1e-5);
    const GradientComparison cmp = compare_gradients(analytic, numeric, 1e-5, 1e-8);
    EXPECT_TRUE(cmp.ok) << "trial " << trial << " worst coordinate " << cmp.worst_index
                        << " rel " << cmp.max_relative_error;
  }
}

TEST(Backward, Linearity) {
  std::mt19937_64 rng(7);
  RandomGraph a(rng);
  const ParamSet set = a.set();
  Tape t1;
  Var l1 = a.build(t1);
  Var l2 = scale(sum(multiply(t1.parameter(a.params[0]), t1.parameter(a.params[0]))), 0.3);
  const Vector combined = t1.backward(add(l1, l2)).flatten(set);
  const Vector separate = t1.backward(l1).flatten(set) + t1.backward(l2).flatten(set);
  EXPECT_LE((combined - separate).cwiseAbs().maxCoeff(),
            1e-15 * std::max(1.0, combined.cwiseAbs().maxCoeff()));
}

TEST(Backward, DeterministicAcrossRuns) {
  std::mt19937_64 r1(99);
  std::mt19937_64 r2(99);
  RandomGraph a(r1);
  RandomGraph b(r2);
  Tape ta;
  Tape tb;
  const Vector ga = ta.backward(a.build(ta)).flatten(a.set());
  const Vector gb = tb.backward(b.build(tb)).flatten(b.set());
  ASSERT_EQ(ga.size(), gb.size());
  for (Index i = 0; i < ga.size(); ++i) EXPECT_EQ(ga(i), gb(i));
}

TEST(Ops, SliceScatterAdd) {
  Parameter x{"x", Matrix::Zero(1, 3)};
  x.value << 1, 2, 3;
  Tape tape;
  Var s = slice(tape.parameter(x), {0, 0, 2}, 1);
  EXPECT_DOUBLE_EQ(s.value()(0, 1), 1.0);
  const Matrix g = tape.backward(sum(s)).wrt(x);
  EXPECT_DOUBLE_EQ(g(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(g(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(g(0, 2), 1.0);
}

TEST(Ops, ScalarBroadcastMultiply) {
  Parameter x{"x", Matrix::Constant(1, 1, 2.0)};
  Parameter y{"y", Matrix::Ones(2, 2)};
  Tape tape;
  Var prod = multiply(tape.parameter(x), tape.parameter(y));
  EXPECT_EQ(prod.rows(), 2);
  Gradients g = tape.backward(sum(prod));
  EXPECT_DOUBLE_EQ(g.wrt(x)(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(g.wrt(y)(1, 1), 2.0);
}

TEST(ParamSets, FlattenAssignRoundTrip) {
  Parameter a{"a", Matrix::Zero(2, 2)};
  Parameter b{"b", Matrix::Zero(1, 3)};
  ParamSet set{{"g", {&a, &b}}};
  EXPECT_EQ(parameter_count(set), 7);
  Vector v = Vector::LinSpaced(7, 0, 6);
  assign(set, v);
  EXPECT_EQ(flatten(set), v);
  EXPECT_THROW(assign(set, Vector::Zero(3)), ShapeError);
}

TEST(CompareGradients, AbsoluteFloor) {
  Vector a(2), b(2);
  a << 1e-10, 1.0;
  b << 5e-10, 1.0 + 1e-7;
  GradientComparison c = compare_gradients(a, b, 1e-5, 1e-8);
  EXPECT_TRUE(c.ok);
  b(1) = 1.1;
  c = compare_gradients(a, b, 1e-5, 1e-8);
  EXPECT_FALSE(c.ok);
  EXPECT_EQ(c.worst_index, 1);
}

}  // namespace
}  // namespace morf::ad
