// Copyright 2026 The kstone Authors.
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

#include "kstone/backend.hpp"

#include <numeric>
#include <thread>

namespace kstone {

std::int64_t Tensor::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1},
                         std::multiplies<>());
}

Tensor Tensor::from(const NormalizedTensor& t) {
  const auto s = t.nchw_shape();
  return Tensor{{s.begin(), s.end()}, t.values};
}

Tensor FunctionBackend::run(const Tensor& input) {
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
  return fn_(input);
}

std::unique_ptr<FunctionBackend> FunctionBackend::constant(
    Tensor output, std::chrono::microseconds delay) {
  return std::make_unique<FunctionBackend>(
      [out = std::move(output)](const Tensor&) { return out; }, delay);
}

}  // namespace kstone
