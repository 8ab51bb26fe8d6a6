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

#include "kstone/corrector.hpp"

#include <algorithm>
#include <vector>

#include "kstone/detector.hpp"

namespace kstone {

namespace {

// Left-to-right; on equal x1 the lower y1 goes first, then the original
// order is kept.
bool swap_needed(const BoxXYXY& a, const BoxXYXY& b) {
  if (b.x1 != a.x1) return b.x1 < a.x1;
  return b.y1 < a.y1;
}

}  // namespace

CorrectionOutcome correct(std::span<const BoxXYXY> detections, int image_width) {
  if (detections.empty()) return Excluded{};

  std::vector<BoxXYXY> ranked;
  ranked.reserve(detections.size());
  for (const BoxXYXY& b : detections) ranked.push_back(b.canonical());
  std::stable_sort(ranked.begin(), ranked.end(), detection_before);

  RoiPair pair;
  BoxXYXY first = ranked[0];
  BoxXYXY second;
  bool second_synthetic = false;
  if (ranked.size() == 1) {
    second = mirror_box(first, image_width);
    second_synthetic = true;
    pair.provenance = Provenance::kMirrorSynthesized;
    pair.mirror_collision = iou(first, second) > kMirrorCollisionIou;
  } else {
    second = ranked[1];
    pair.provenance = ranked.size() == 2 ? Provenance::kBothDetected
                                         : Provenance::kTruncatedFromThree;
  }

  const bool swapped = swap_needed(first, second);
  pair.left = swapped ? second : first;
  pair.right = swapped ? first : second;
  if (second_synthetic) pair.synthetic_side = swapped ? Side::kLeft : Side::kRight;
  return pair;
}

std::string provenance_name(const CorrectionOutcome& o) {
  const auto* pair = std::get_if<RoiPair>(&o);
  if (!pair) return "none";
  switch (pair->provenance) {
    case Provenance::kBothDetected:
      return "both_detected";
    case Provenance::kTruncatedFromThree:
      return "truncated_from_three";
    case Provenance::kMirrorSynthesized:
      return pair->synthetic_side == Side::kLeft ? "mirror_synthesized_left"
                                                 : "mirror_synthesized_right";
  }
  return "unknown";
}

std::string correction_log_line(std::string_view stem, std::size_t n_detected,
                                const CorrectionOutcome& o) {
  std::string line(stem);
  line += ", " + std::to_string(n_detected);
  line += is_excluded(o) ? ", excluded, " : ", pair, ";
  line += provenance_name(o);
  if (const auto* pair = std::get_if<RoiPair>(&o); pair && pair->mirror_collision) {
    line += " (warning: mirror collision)";
  }
  return line;
}

std::size_t DetectionHistogram::total() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < kBuckets; ++k) n += column(k);
  return n;
}

DetectionHistogram count_histogram(
    std::span<const std::pair<std::size_t, std::optional<Label>>> outcomes) {
  DetectionHistogram h;
  for (const auto& [count, label] : outcomes) {
    std::size_t bucket = count;
    if (bucket >= DetectionHistogram::kBuckets) {
      bucket = DetectionHistogram::kBuckets - 1;
      h.folded_overflow = true;
    }
    if (!label) {
      ++h.unlabeled[bucket];
    } else if (*label == Label::kStone) {
      ++h.stone[bucket];
    } else {
      ++h.normal[bucket];
    }
  }
  return h;
}

}  // namespace kstone
