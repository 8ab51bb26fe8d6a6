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

#ifndef KSTONE_PIPELINE_HPP_
#define KSTONE_PIPELINE_HPP_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kstone/classifier.hpp"
#include "kstone/corrector.hpp"
#include "kstone/dataprep.hpp"
#include "kstone/detector.hpp"

namespace kstone {

// Where a stage gets its outputs from: an exported model or a recorded
// fixture. Exactly one must be set.
struct StageSource {
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> replay;
};

struct PipelineConfig {
  DetectorConfig detector;
  ClassifierConfig classifier;
  StageSource detector_source;
  StageSource classifier_source;
  int workers = 1;
  std::optional<std::filesystem::path> crop_output_dir;

  // Throws ConfigError.
  void validate() const;
};

// Plain-text `key = value` file; `#` starts a comment. Relative paths are
// resolved against the file's directory. Unknown keys are a ConfigError.
//
//   detector.model / detector.replay
//   detector.conf_threshold, detector.iou_threshold,
//   detector.input_side, detector.max_detections
//   classifier.model / classifier.replay
//   classifier.input_side, classifier.threshold,
//   classifier.output_is_probability, classifier.mean, classifier.std
//   workers, crops
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Applies one key. `base` anchors relative paths.
void apply_config_value(PipelineConfig& cfg, const std::string& key,
                        const std::string& value,
                        const std::filesystem::path& base = {});

// Factories for per-worker stage instances; backends are never shared
// between workers.
struct PipelineStages {
  std::function<std::unique_ptr<KidneyDetector>()> make_detector;
  std::function<std::unique_ptr<RoiClassifier>()> make_classifier;
};

// Loads fixtures once and returns factories over them, or over fresh
// OnnxBackend instances for model files.
PipelineStages make_stages(const PipelineConfig& cfg);

struct StageTimings {
  double decode_ms = 0;
  double detect_ms = 0;
  double correct_ms = 0;
  double crop_ms = 0;
  double classify_ms = 0;  // both ROIs together
  double total_ms = 0;
};

struct StageError {
  std::string stage;  // decode, detect, correct, crop, classify, write_crop
  std::string message;

  friend bool operator==(const StageError&, const StageError&) = default;
};

struct ImageResult {
  std::string stem;
  std::size_t detection_count = 0;
  // Absent when the image failed before or during correction, or when a
  // later stage failed (roi_verdicts is then empty too).
  std::optional<CorrectionOutcome> outcome;
  std::vector<Verdict> roi_verdicts;
  std::optional<ImageVerdict> image_verdict;
  StageTimings timings;
  std::optional<StageError> error;
};

// `<stem>_kidney0` (left) and `<stem>_kidney1` (right).
std::string crop_id(const std::string& stem, std::size_t index);

// Runs every stage for one manifest row. Never throws for per-image
// failures; they are recorded in the result.
ImageResult process_image(const ManifestRow& row, KidneyDetector& detector,
                          RoiClassifier& classifier,
                          const std::optional<std::filesystem::path>& crop_dir);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

// One result per manifest row, in manifest order, independent of the worker
// count. Stage instances are created up front on the calling thread, so
// model-loading failures surface as exceptions before any image is touched.
std::vector<ImageResult> run_pipeline(const Manifest& manifest,
                                      const PipelineConfig& cfg,
                                      const PipelineStages& stages,
                                      const ProgressFn& progress = {});
std::vector<ImageResult> run_pipeline(const Manifest& manifest,
                                      const PipelineConfig& cfg);

struct LatencyStats {
  std::size_t samples = 0;
  double mean_ms = 0;
  double median_ms = 0;
  double p95_ms = 0;  // nearest rank
};

LatencyStats summarize(std::vector<double> samples_ms);

struct LatencyReport {
  std::size_t images = 0;
  std::size_t repetitions = 0;
  bool warmup_excluded = false;
  // Per image, repetitions that entered the statistics.
  std::size_t timed_runs = 0;
  std::size_t failed_runs = 0;
  // decode, detect, correct, crop, classify, end_to_end
  std::map<std::string, LatencyStats> stages;
};

// Times the pipeline sequentially (one stage instance, no crop output).
// With repetitions >= 3 the first repetition is a warm-up and is dropped.
// The classify stage only samples images that reached classification;
// failed runs are counted and left out of every statistic.
LatencyReport bench(const Manifest& manifest, const PipelineStages& stages,
                    std::size_t repetitions);
LatencyReport bench(const Manifest& manifest, const PipelineConfig& cfg,
                    std::size_t repetitions);

}  // namespace kstone

#endif  // KSTONE_PIPELINE_HPP_
