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

// Lets the flow-matching templates operate on torch tensors (batched, with
// autograd) exactly as they do on TFArray.

#ifndef FLOWSE_NN_ARRAYS_H_
#define FLOWSE_NN_ARRAYS_H_

#include <torch/torch.h>

#include "flowse/flowmath.h"

namespace flowse {
namespace flowmath {

template <>
struct ArrayTraits<torch::Tensor> {
  using Scalar = torch::Tensor;
  static Shape shape(const torch::Tensor& a) { return a.sizes().vec(); }
  static bool all_finite(const torch::Tensor& a) {
    return torch::isfinite(a).all().item<bool>();
  }
  static torch::Tensor mean_square(const torch::Tensor& a) { return a.square().mean(); }
};

static_assert(FieldArray<torch::Tensor>);

}  // namespace flowmath
}  // namespace flowse

#endif  // FLOWSE_NN_ARRAYS_H_
