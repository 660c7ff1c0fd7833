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

#include "flowse/flowmath.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace flowse {
namespace flowmath {

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

ShapeMismatchError::ShapeMismatchError(std::string operand,
                                       const Shape& expected,
                                       const Shape& actual)
    : std::invalid_argument("shape mismatch for operand '" + operand +
                            "': expected " + ShapeToString(expected) +
                            ", got " + ShapeToString(actual)),
      operand_(std::move(operand)) {}

namespace {

size_t NumElements(const Shape& shape) {
  size_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw std::invalid_argument("negative dimension in shape");
    n *= static_cast<size_t>(d);
  }
  return n;
}

}  // namespace

TFArray::TFArray(Shape shape, double fill)
    : shape_(std::move(shape)), values_(NumElements(shape_), fill) {}

TFArray::TFArray(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != NumElements(shape_))
    throw std::invalid_argument("TFArray: value count " +
                                std::to_string(values_.size()) +
                                " does not match shape " +
                                ShapeToString(shape_));
}

bool TFArray::AllFinite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

double TFArray::MaxAbs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

void TFArray::CheckSameShape(const TFArray& other, const char* op) const {
  if (shape_ != other.shape_) throw ShapeMismatchError(op, shape_, other.shape_);
}

TFArray& TFArray::operator+=(const TFArray& other) {
  CheckSameShape(other, "rhs of +");
  for (size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

TFArray& TFArray::operator-=(const TFArray& other) {
  CheckSameShape(other, "rhs of -");
  for (size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

TFArray& TFArray::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

double MaxAbsDiff(const TFArray& a, const TFArray& b) {
  if (a.shape() != b.shape()) throw ShapeMismatchError("b", a.shape(), b.shape());
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double ArrayTraits<TFArray>::mean_square(const TFArray& a) {
  if (a.size() == 0) return 0.0;
  double acc = 0.0;
  for (double v : a.values()) acc += v * v;
  return acc / static_cast<double>(a.size());
}

TFArray StandardNormal(const Shape& shape, std::mt19937_64& rng) {
  TFArray out(shape);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out.values()) v = normal(rng);
  return out;
}

TFArray SamplePathPoint(double t, const PathCondition<TFArray>& z,
                        SigmaConfig cfg, std::mt19937_64& rng) {
  z.Validate();
  const auto sched = SimplifiedSchedule<TFArray>(cfg);
  return FlowMap(StandardNormal(z.x0.shape(), rng), t, sched, z);
}

}  // namespace flowmath
}  // namespace flowse
