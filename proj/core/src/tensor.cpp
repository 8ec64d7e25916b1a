// Copyright (c) the ICAE Project Authors
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

#include "icae/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "icae/error.hpp"

namespace icae {

std::string Shape::str() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " +
         std::to_string(h) + ", " + std::to_string(w) + ")";
}

Shape scalar_shape() { return Shape{1, 1, 1, 1}; }

Tensor::Tensor(Shape shape, Real fill) : shape_(shape) {
  require(shape.n >= 0 && shape.c >= 0 && shape.h >= 0 && shape.w >= 0,
          ErrorKind::kInvalidArgument, "negative extent in " + shape.str());
  data_.assign(static_cast<std::size_t>(shape.numel()), fill);
}

Tensor::Tensor(Shape shape, std::vector<Real> data)
    : shape_(shape), data_(std::move(data)) {
  require(static_cast<std::int64_t>(data_.size()) == shape_.numel(),
          ErrorKind::kShapeMismatch,
          "data length " + std::to_string(data_.size()) +
              " does not match shape " + shape_.str());
}

Real Tensor::item() const {
  require(numel() == 1, ErrorKind::kShapeMismatch,
          "item() on tensor of shape " + shape_.str());
  return data_[0];
}

void Tensor::fill(Real value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](Real v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(Shape shape) const {
  require(shape.numel() == numel(), ErrorKind::kShapeMismatch,
          "cannot reshape " + shape_.str() + " to " + shape.str());
  Tensor out = *this;
  out.shape_ = shape;
  return out;
}

double dot(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), ErrorKind::kShapeMismatch,
          "dot of " + a.shape().str() + " and " + b.shape().str());
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

}  // namespace icae
