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

#ifndef KSTONE_DETECTOR_HPP_
#define KSTONE_DETECTOR_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kstone/backend.hpp"
#include "kstone/image.hpp"

namespace kstone {

struct DetectorConfig {
  float conf_threshold = 0.25f;
  float iou_threshold = 0.45f;
  int input_side = 640;
  int max_detections = 8;

  // Throws ConfigError when a field is out of range.
  void validate() const;
};

// One candidate from the network, centre format, letterbox space.
struct RawDetection {
  float cx = 0.f;
  float cy = 0.f;
  float w = 0.f;
  float h = 0.f;
  float score = 0.f;
};

// Reads a single-class detector output of shape (1, 5, N) or (1, N, 5).
// (1, 5, 5) is read channel-major, like the exporter's default.
// Throws ShapeMismatch on any other shape or when the value count
// disagrees with the shape.
std::vector<RawDetection> decode_raw(const Tensor& output);

float iou(const BoxXYXY& a, const BoxXYXY& b);

// Strict weak order used everywhere detections are ranked: higher
// confidence first, then smaller x1, then smaller y1.
bool detection_before(const BoxXYXY& a, const BoxXYXY& b);

// Greedy non-maximum suppression: keep the best remaining box, drop every
// box overlapping it with IoU > iou_threshold, repeat. Output is sorted by
// detection_before.
std::vector<BoxXYXY> nms(std::span<const BoxXYXY> boxes, float iou_threshold);

// Letterbox, forward pass, confidence filter, NMS, map back to source
// coordinates. Boxes that collapse when clamped to the image are dropped.
std::vector<BoxXYXY> detect(const ImageBuffer& img, InferenceBackend& backend,
                            const DetectorConfig& cfg);

// Pipeline-facing detection stage.
class KidneyDetector {
 public:
  virtual ~KidneyDetector() = default;
  virtual std::vector<BoxXYXY> detect(const ImageBuffer& img,
                                      std::string_view stem) = 0;
};

class ModelDetector final : public KidneyDetector {
 public:
  ModelDetector(std::unique_ptr<InferenceBackend> backend, DetectorConfig cfg);
  std::vector<BoxXYXY> detect(const ImageBuffer& img,
                              std::string_view stem) override;

 private:
  std::unique_ptr<InferenceBackend> backend_;
  DetectorConfig cfg_;
};

// Recorded detections keyed by image stem, source-image coordinates.
using DetectionFixture = std::map<std::string, std::vector<BoxXYXY>, std::less<>>;

// JSON Lines: {"image": "<stem>", "boxes": [[x1, y1, x2, y2, conf], ...]}.
// Throws ConfigError on malformed lines or duplicate stems.
DetectionFixture load_detection_fixture(const std::filesystem::path& path);

// Serves recorded detections instead of running a model. Boxes are taken as
// final detector output: canonicalized, clamped to the image, ordered by
// detection_before and truncated to max_detections.
class ReplayDetector final : public KidneyDetector {
 public:
  ReplayDetector(std::shared_ptr<const DetectionFixture> fixture,
                 DetectorConfig cfg);
  // Throws BackendError if the stem has no record.
  std::vector<BoxXYXY> detect(const ImageBuffer& img,
                              std::string_view stem) override;

 private:
  std::shared_ptr<const DetectionFixture> fixture_;
  DetectorConfig cfg_;
};

}  // namespace kstone

#endif  // KSTONE_DETECTOR_HPP_
