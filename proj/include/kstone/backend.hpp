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

#ifndef KSTONE_BACKEND_HPP_
#define KSTONE_BACKEND_HPP_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "kstone/image.hpp"

namespace kstone {

// Dense f32 tensor with an explicit shape.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> values;

  std::int64_t element_count() const;

  static Tensor from(const NormalizedTensor& t);
};

// Executes one network. Implementations must be deterministic: identical
// input values give identical outputs. An instance is used by one worker at
// a time.
class InferenceBackend {
 public:
  virtual ~InferenceBackend() = default;

  // Returns the raw output with its declared shape. Throws BackendError.
  virtual Tensor run(const Tensor& input) = 0;
};

// Test double: forwards to a callable, optionally sleeping first to emulate
// a fixed inference latency.
class FunctionBackend final : public InferenceBackend {
 public:
  using Fn = std::function<Tensor(const Tensor&)>;

  explicit FunctionBackend(Fn fn, std::chrono::microseconds delay = {})
      : fn_(std::move(fn)), delay_(delay) {}

  Tensor run(const Tensor& input) override;

  // Backend whose output never depends on the input.
  static std::unique_ptr<FunctionBackend> constant(
      Tensor output, std::chrono::microseconds delay = {});

 private:
  Fn fn_;
  std::chrono::microseconds delay_;
};

// ONNX model file executed with OpenCV's DNN module on the CPU.
class OnnxBackend final : public InferenceBackend {
 public:
  // Throws BackendError if the file cannot be read or parsed.
  explicit OnnxBackend(const std::filesystem::path& model_path);
  ~OnnxBackend() override;
  OnnxBackend(OnnxBackend&&) noexcept;
  OnnxBackend& operator=(OnnxBackend&&) noexcept;

  Tensor run(const Tensor& input) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace kstone

#endif  // KSTONE_BACKEND_HPP_
