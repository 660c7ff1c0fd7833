// Copyright 2026 The Flowse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Conditional flow-matching mathematics: Gaussian probability paths, their
// flow maps and target vector fields, and the regression residual used to
// train a vector-field network. Nothing here knows about neural networks; the
// functions are templates over any array type that provides elementwise
// arithmetic and an ArrayTraits specialization (TFArray below, and
// torch::Tensor in nn_arrays.h).

#ifndef FLOWSE_FLOWMATH_H_
#define FLOWSE_FLOWMATH_H_

#include <concepts>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowse {
namespace flowmath {

using Shape = std::vector<int64_t>;

std::string ShapeToString(const Shape& shape);

class ShapeMismatchError : public std::invalid_argument {
 public:
  ShapeMismatchError(std::string operand, const Shape& expected,
                     const Shape& actual);
  const std::string& operand() const { return operand_; }

 private:
  std::string operand_;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Dense row-major real array. Complex time-frequency data is carried with a
// leading (real, imaginary) axis of size 2.
class TFArray {
 public:
  TFArray() = default;
  explicit TFArray(Shape shape, double fill = 0.0);
  TFArray(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](size_t i) { return values_[i]; }
  double operator[](size_t i) const { return values_[i]; }

  bool AllFinite() const;
  double MaxAbs() const;

  TFArray& operator+=(const TFArray& other);
  TFArray& operator-=(const TFArray& other);
  TFArray& operator*=(double s);

  friend TFArray operator+(TFArray a, const TFArray& b) { return a += b; }
  friend TFArray operator-(TFArray a, const TFArray& b) { return a -= b; }
  friend TFArray operator*(TFArray a, double s) { return a *= s; }
  friend TFArray operator*(double s, TFArray a) { return a *= s; }

 private:
  void CheckSameShape(const TFArray& other, const char* op) const;

  Shape shape_;
  std::vector<double> values_;
};

double MaxAbsDiff(const TFArray& a, const TFArray& b);

template <class A>
struct ArrayTraits;

template <>
struct ArrayTraits<TFArray> {
  using Scalar = double;
  static Shape shape(const TFArray& a) { return a.shape(); }
  static bool all_finite(const TFArray& a) { return a.AllFinite(); }
  static double mean_square(const TFArray& a);
};

template <class A>
concept FieldArray = requires(const A& a, const A& b, double s) {
  { a + b } -> std::convertible_to<A>;
  { a - b } -> std::convertible_to<A>;
  { a * s } -> std::convertible_to<A>;
  { ArrayTraits<A>::shape(a) } -> std::convertible_to<Shape>;
  { ArrayTraits<A>::all_finite(a) } -> std::convertible_to<bool>;
  ArrayTraits<A>::mean_square(a);
};

// z = (x0, x1): prior point and data target of one conditional path.
template <FieldArray A>
struct PathCondition {
  A x0;
  A x1;

  void Validate() const {
    const Shape s0 = ArrayTraits<A>::shape(x0);
    const Shape s1 = ArrayTraits<A>::shape(x1);
    if (s0 != s1) throw ShapeMismatchError("x1", s0, s1);
    if (!ArrayTraits<A>::all_finite(x0))
      throw DomainError("path condition x0 has non-finite entries");
    if (!ArrayTraits<A>::all_finite(x1))
      throw DomainError("path condition x1 has non-finite entries");
  }
};

struct SigmaConfig {
  double sigma = 0.04;

  void Validate() const {
    if (!(sigma > 0.0)) throw DomainError("sigma must be > 0");
  }
};

// A Gaussian conditional path N(mu_t(z), sigma_t(z)^2 I) with the time
// derivatives of both parameters.
template <FieldArray A>
struct PathSchedule {
  std::function<A(double, const PathCondition<A>&)> mu;
  std::function<double(double, const PathCondition<A>&)> sigma;
  std::function<A(double, const PathCondition<A>&)> dmu;
  std::function<double(double, const PathCondition<A>&)> dsigma;
};

// mu = t x1 + (1 - t) x0, constant sigma.
template <FieldArray A>
PathSchedule<A> SimplifiedSchedule(SigmaConfig cfg) {
  cfg.Validate();
  PathSchedule<A> s;
  s.mu = [](double t, const PathCondition<A>& z) -> A {
    return z.x1 * t + z.x0 * (1.0 - t);
  };
  s.sigma = [v = cfg.sigma](double, const PathCondition<A>&) { return v; };
  s.dmu = [](double, const PathCondition<A>& z) -> A { return z.x1 - z.x0; };
  s.dsigma = [](double, const PathCondition<A>&) { return 0.0; };
  return s;
}

inline void CheckTime(double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw DomainError("path time t must lie in [0, 1], got " +
                      std::to_string(t));
}

template <FieldArray A>
void CheckShape(const char* operand, const A& a, const PathCondition<A>& z) {
  const Shape expected = ArrayTraits<A>::shape(z.x0);
  const Shape actual = ArrayTraits<A>::shape(a);
  if (expected != actual) throw ShapeMismatchError(operand, expected, actual);
}

// psi_t(eps) = sigma_t(z) eps + mu_t(z).
template <FieldArray A>
A FlowMap(const A& eps, double t, const PathSchedule<A>& sched,
          const PathCondition<A>& z) {
  CheckTime(t);
  CheckShape("x1", z.x1, z);
  CheckShape("eps", eps, z);
  return eps * sched.sigma(t, z) + sched.mu(t, z);
}

// u_t(x|z) = (sigma'/sigma)(x - mu) + mu'.
template <FieldArray A>
A TargetVectorFieldGeneral(const A& x, double t, const PathSchedule<A>& sched,
                           const PathCondition<A>& z) {
  CheckTime(t);
  CheckShape("x", x, z);
  const double sigma = sched.sigma(t, z);
  if (!(sigma > 0.0))
    throw DomainError("sigma_t must be > 0 at t=" + std::to_string(t));
  return (x - sched.mu(t, z)) * (sched.dsigma(t, z) / sigma) + sched.dmu(t, z);
}

// u_t(x|z) = x1 - x0 for the simplified path, independent of x and t.
template <FieldArray A>
A TargetVectorFieldSimplified(const PathCondition<A>& z) {
  CheckShape("x1", z.x1, z);
  return z.x1 - z.x0;
}

// Mean over all entries of (v_pred - (x1 - x0))^2.
template <FieldArray A>
auto CfmRegressionResidual(const A& v_pred, const PathCondition<A>& z) {
  CheckShape("v_pred", v_pred, z);
  return ArrayTraits<A>::mean_square(v_pred - TargetVectorFieldSimplified(z));
}

// Standard-normal array of the given shape.
TFArray StandardNormal(const Shape& shape, std::mt19937_64& rng);

// One draw from N(t x1 + (1 - t) x0, sigma^2 I).
TFArray SamplePathPoint(double t, const PathCondition<TFArray>& z,
                        SigmaConfig cfg, std::mt19937_64& rng);

}  // namespace flowmath
}  // namespace flowse

#endif  // FLOWSE_FLOWMATH_H_
