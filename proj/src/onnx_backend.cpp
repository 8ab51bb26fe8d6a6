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

#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>

#include "kstone/backend.hpp"
#include "kstone/errors.hpp"

namespace kstone {

struct OnnxBackend::Impl {
  cv::dnn::Net net;
};

OnnxBackend::OnnxBackend(const std::filesystem::path& model_path)
    : impl_(std::make_unique<Impl>()) {
  if (!std::filesystem::is_regular_file(model_path)) {
    throw BackendError("model file not found: " + model_path.string());
  }
  try {
    impl_->net = cv::dnn::readNetFromONNX(model_path.string());
    impl_->net.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
    impl_->net.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
  } catch (const cv::Exception& e) {
    throw BackendError("cannot load " + model_path.string() + ": " + e.what());
  }
  if (impl_->net.empty()) {
    throw BackendError("empty network: " + model_path.string());
  }
}

OnnxBackend::~OnnxBackend() = default;
OnnxBackend::OnnxBackend(OnnxBackend&&) noexcept = default;
OnnxBackend& OnnxBackend::operator=(OnnxBackend&&) noexcept = default;

Tensor OnnxBackend::run(const Tensor& input) {
  if (input.element_count() != static_cast<std::int64_t>(input.values.size())) {
    throw BackendError("input tensor values disagree with its shape");
  }
  std::vector<int> dims(input.shape.begin(), input.shape.end());
  // cv::Mat does not own external data; the blob is only read by setInput.
  cv::Mat blob(static_cast<int>(dims.size()), dims.data(), CV_32F,
               const_cast<float*>(input.values.data()));
  cv::Mat out;
  try {
    impl_->net.setInput(blob);
    out = impl_->net.forward();
  } catch (const cv::Exception& e) {
    throw BackendError(std::string("forward pass failed: ") + e.what());
  }
  if (out.type() != CV_32F) out.convertTo(out, CV_32F);
  if (!out.isContinuous()) out = out.clone();

  Tensor result;
  for (int i = 0; i < out.dims; ++i) result.shape.push_back(out.size[i]);
  const auto* data = out.ptr<float>();
  result.values.assign(data, data + out.total());
  return result;
}

}  // namespace kstone
