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

#ifndef KSTONE_CORRECTOR_HPP_
#define KSTONE_CORRECTOR_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "kstone/image.hpp"
#include "kstone/label.hpp"

namespace kstone {

enum class Provenance { kBothDetected, kMirrorSynthesized, kTruncatedFromThree };
enum class Side { kLeft, kRight };

// Exactly two kidney boxes, ordered left to right.
struct RoiPair {
  BoxXYXY left;
  BoxXYXY right;
  Provenance provenance = Provenance::kBothDetected;
  // Which box was synthesized; set only for kMirrorSynthesized.
  std::optional<Side> synthetic_side;
  // Warning: the mirrored box overlaps its source with IoU above
  // kMirrorCollisionIou, i.e. the detection straddles the midline.
  bool mirror_collision = false;

  const BoxXYXY& operator[](std::size_t i) const { return i == 0 ? left : right; }
  friend bool operator==(const RoiPair&, const RoiPair&) = default;
};

// No kidney detected; the image is left out of classification.
struct Excluded {
  friend bool operator==(const Excluded&, const Excluded&) = default;
};

using CorrectionOutcome = std::variant<Excluded, RoiPair>;

inline constexpr float kMirrorCollisionIou = 0.9f;

// Turns a detection list into two ROIs or an exclusion:
//   0 boxes  -> Excluded
//   1 box    -> the box and its mirror across the vertical centreline
//   2 boxes  -> both, as detected
//   3+ boxes -> the two highest-ranked by confidence
// Input is re-ranked with detection_before, so any permutation of the same
// detections yields the same outcome.
CorrectionOutcome correct(std::span<const BoxXYXY> detections, int image_width);

inline bool is_excluded(const CorrectionOutcome& o) {
  return std::holds_alternative<Excluded>(o);
}

// "both_detected", "mirror_synthesized_left", ..., or "none" for exclusions.
std::string provenance_name(const CorrectionOutcome& o);

// `<stem>, n_detected, outcome, provenance`
std::string correction_log_line(std::string_view stem, std::size_t n_detected,
                                const CorrectionOutcome& o);

// Detection counts per image bucketed 0, 1, 2, 3 and split by label.
// Counts above 3 are folded into the "3" bucket and flagged.
struct DetectionHistogram {
  static constexpr std::size_t kBuckets = 4;
  std::array<std::size_t, kBuckets> stone{};
  std::array<std::size_t, kBuckets> normal{};
  std::array<std::size_t, kBuckets> unlabeled{};
  bool folded_overflow = false;

  std::size_t column(std::size_t bucket) const {
    return stone[bucket] + normal[bucket] + unlabeled[bucket];
  }
  std::size_t total() const;

  friend bool operator==(const DetectionHistogram&, const DetectionHistogram&) = default;
};

DetectionHistogram count_histogram(
    std::span<const std::pair<std::size_t, std::optional<Label>>> outcomes);

}  // namespace kstone

#endif  // KSTONE_CORRECTOR_HPP_
