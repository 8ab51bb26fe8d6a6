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

#ifndef KSTONE_EVAL_HPP_
#define KSTONE_EVAL_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kstone/corrector.hpp"
#include "kstone/label.hpp"
#include "kstone/pipeline.hpp"

namespace kstone {

// Binary confusion counts with stone as the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  void add(bool predicted_positive, bool actually_positive);
  std::size_t total() const { return tp + fp + fn + tn; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Ratios whose denominator is zero are absent rather than zero.
struct Metrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> specificity;
  std::optional<double> accuracy;
  // Class-conditional error rates: fp / (fp + tn) and fn / (fn + tp).
  std::optional<double> fp_rate;
  std::optional<double> fn_rate;
  // Micro-averaged over both classes. For single-label binary data these
  // all collapse to accuracy, and the error rate to 1 - accuracy.
  std::optional<double> micro_precision;
  std::optional<double> micro_recall;
  std::optional<double> micro_f1;
  std::optional<double> micro_error_rate;
  // Shares of all errors: fp / (fp + fn) and fn / (fp + fn).
  std::optional<double> fp_share;
  std::optional<double> fn_share;

  // Looks a metric up by its JSON name ("f1", "fn_rate", ...).
  std::optional<double> get(const std::string& name) const;
};

Metrics compute_metrics(const ConfusionMatrix& cm);

using LabelMap = std::map<std::string, Label, std::less<>>;

// CSV with header `crop_id,label`; label is stone or normal. Ids may also
// be image stems, which then label the image itself.
LabelMap read_labels_csv(const std::filesystem::path& path);

struct EvalReport {
  ConfusionMatrix crop_matrix;
  Metrics crop_metrics;
  DetectionHistogram histogram;
  std::size_t images = 0;
  std::size_t excluded_images = 0;
  std::size_t failed_images = 0;
  // Secondary table over images that were classified and whose label is
  // known (directly, or because some crop of it is labeled stone/normal).
  ConfusionMatrix image_matrix;
  Metrics image_metrics;
};

// Per-crop evaluation of pipeline results. Throws MissingLabel naming the
// first crop without a label.
EvalReport score(std::span<const ImageResult> results, const LabelMap& labels);

struct ReferenceCheck {
  std::string metric;
  std::optional<double> observed;
  double reference = 0;
  double tolerance = 0;
  bool pass = false;
};

// |observed - reference| <= tolerance per metric of the per-crop table. A
// metric that is absent in the report fails.
std::vector<ReferenceCheck> compare_to_reference(
    const EvalReport& report, const std::map<std::string, double>& reference,
    double tolerance);

std::map<std::string, double> read_reference_json(const std::filesystem::path& path);

}  // namespace kstone

#endif  // KSTONE_EVAL_HPP_
