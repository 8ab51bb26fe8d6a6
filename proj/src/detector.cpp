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

#include "kstone/detector.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "kstone/errors.hpp"

namespace kstone {

void DetectorConfig::validate() const {
  if (!(conf_threshold > 0.f && conf_threshold < 1.f)) {
    throw ConfigError("detector.conf_threshold must be in (0, 1)");
  }
  if (!(iou_threshold > 0.f && iou_threshold < 1.f)) {
    throw ConfigError("detector.iou_threshold must be in (0, 1)");
  }
  if (input_side < 1) throw ConfigError("detector.input_side must be >= 1");
  if (max_detections < 1) throw ConfigError("detector.max_detections must be >= 1");
}

std::vector<RawDetection> decode_raw(const Tensor& output) {
  const auto& s = output.shape;
  if (s.size() != 3 || s[0] != 1) {
    throw ShapeMismatch("detector output must have shape (1, 5, N) or (1, N, 5)");
  }
  if (output.element_count() != static_cast<std::int64_t>(output.values.size())) {
    throw ShapeMismatch("detector output holds " +
                        std::to_string(output.values.size()) +
                        " values, declared shape needs " +
                        std::to_string(output.element_count()));
  }
  const bool channel_major = s[1] == 5;
  if (!channel_major && s[2] != 5) {
    throw ShapeMismatch("detector output has no 5-wide axis (single-class model expected)");
  }
  const auto n = static_cast<std::size_t>(channel_major ? s[2] : s[1]);
  const auto& v = output.values;
  auto at = [&](std::size_t row, std::size_t field) {
    return channel_major ? v[field * n + row] : v[row * 5 + field];
  };
  std::vector<RawDetection> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i] = {at(i, 0), at(i, 1), at(i, 2), at(i, 3), at(i, 4)};
  }
  return rows;
}

float iou(const BoxXYXY& a, const BoxXYXY& b) {
  const float iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const float ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.f || ih <= 0.f) return 0.f;
  const float inter = iw * ih;
  const float uni = a.area() + b.area() - inter;
  return uni > 0.f ? inter / uni : 0.f;
}

bool detection_before(const BoxXYXY& a, const BoxXYXY& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.x1 != b.x1) return a.x1 < b.x1;
  return a.y1 < b.y1;
}

std::vector<BoxXYXY> nms(std::span<const BoxXYXY> boxes, float iou_threshold) {
  std::vector<BoxXYXY> order(boxes.begin(), boxes.end());
  std::stable_sort(order.begin(), order.end(), detection_before);
  std::vector<bool> dropped(order.size(), false);
  std::vector<BoxXYXY> kept;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (dropped[i]) continue;
    kept.push_back(order[i]);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (!dropped[j] && iou(order[i], order[j]) > iou_threshold) dropped[j] = true;
    }
  }
  return kept;
}

std::vector<BoxXYXY> detect(const ImageBuffer& img, InferenceBackend& backend,
                            const DetectorConfig& cfg) {
  const Letterboxed lb = letterbox(img, cfg.input_side);
  const Tensor out = backend.run(Tensor::from(to_tensor(lb.image, kUnitStats)));

  std::vector<BoxXYXY> candidates;
  for (const RawDetection& r : decode_raw(out)) {
    if (!(r.w > 0.f && r.h > 0.f) || !(r.score >= cfg.conf_threshold)) continue;
    candidates.push_back({r.cx - r.w / 2.f, r.cy - r.h / 2.f, r.cx + r.w / 2.f,
                          r.cy + r.h / 2.f, std::min(r.score, 1.f)});
  }

  std::vector<BoxXYXY> boxes;
  for (const BoxXYXY& b : nms(candidates, cfg.iou_threshold)) {
    try {
      boxes.push_back(unmap_box(b, lb.map));
    } catch (const DegenerateBox&) {
      // lies in the padding band
    }
  }
  std::stable_sort(boxes.begin(), boxes.end(), detection_before);
  if (boxes.size() > static_cast<std::size_t>(cfg.max_detections)) {
    boxes.resize(cfg.max_detections);
  }
  return boxes;
}

ModelDetector::ModelDetector(std::unique_ptr<InferenceBackend> backend,
                             DetectorConfig cfg)
    : backend_(std::move(backend)), cfg_(cfg) {
  cfg_.validate();
}

std::vector<BoxXYXY> ModelDetector::detect(const ImageBuffer& img,
                                           std::string_view) {
  return kstone::detect(img, *backend_, cfg_);
}

DetectionFixture load_detection_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open detection fixture " + path.string());
  DetectionFixture fixture;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    try {
      const auto rec = nlohmann::json::parse(line);
      auto stem = rec.at("image").get<std::string>();
      std::vector<BoxXYXY> boxes;
      for (const auto& b : rec.at("boxes")) {
        if (!b.is_array() || b.size() != 5) {
          throw ConfigError(where + ": box must be [x1, y1, x2, y2, conf]");
        }
        boxes.push_back({b[0].get<float>(), b[1].get<float>(), b[2].get<float>(),
                         b[3].get<float>(), b[4].get<float>()});
      }
      if (!fixture.emplace(std::move(stem), std::move(boxes)).second) {
        throw ConfigError(where + ": duplicate image record");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return fixture;
}

ReplayDetector::ReplayDetector(std::shared_ptr<const DetectionFixture> fixture,
                               DetectorConfig cfg)
    : fixture_(std::move(fixture)), cfg_(cfg) {
  cfg_.validate();
}

std::vector<BoxXYXY> ReplayDetector::detect(const ImageBuffer& img,
                                            std::string_view stem) {
  const auto it = fixture_->find(stem);
  if (it == fixture_->end()) {
    throw BackendError("no replay record for image '" + std::string(stem) + "'");
  }
  const float w = static_cast<float>(img.width());
  const float h = static_cast<float>(img.height());
  std::vector<BoxXYXY> boxes;
  for (BoxXYXY b : it->second) {
    b = b.canonical();
    b = BoxXYXY{std::clamp(b.x1, 0.f, w), std::clamp(b.y1, 0.f, h),
                std::clamp(b.x2, 0.f, w), std::clamp(b.y2, 0.f, h), b.confidence};
    if (b.width() < 1.f || b.height() < 1.f) continue;
    boxes.push_back(b);
  }
  std::stable_sort(boxes.begin(), boxes.end(), detection_before);
  if (boxes.size() > static_cast<std::size_t>(cfg_.max_detections)) {
    boxes.resize(cfg_.max_detections);
  }
  return boxes;
}

}  // namespace kstone
