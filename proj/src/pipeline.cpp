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

#include "kstone/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "kstone/codec.hpp"
#include "kstone/errors.hpp"

namespace kstone {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

float parse_float(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const float f = std::stof(v, &used);
    if (used == v.size()) return f;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": not a number: '" + v + "'");
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int i = std::stoi(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": not an integer: '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::array<float, 3> parse_triple(const std::string& key, const std::string& v) {
  std::array<float, 3> out{};
  std::istringstream in(v);
  std::string cell;
  std::size_t n = 0;
  while (std::getline(in, cell, ',')) {
    if (n == 3) throw ConfigError(key + ": expected three comma-separated values");
    out[n++] = parse_float(key, trim(cell));
  }
  if (n != 3) throw ConfigError(key + ": expected three comma-separated values");
  return out;
}

fs::path resolve(const fs::path& base, const std::string& v) {
  fs::path p(v);
  return p.is_relative() && !base.empty() ? base / p : p;
}

void check_source(const StageSource& s, const char* stage) {
  if (s.model.has_value() == s.replay.has_value()) {
    throw ConfigError(std::string(stage) +
                      ": set exactly one of .model and .replay");
  }
}

}  // namespace

void PipelineConfig::validate() const {
  detector.validate();
  classifier.validate();
  check_source(detector_source, "detector");
  check_source(classifier_source, "classifier");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

void apply_config_value(PipelineConfig& cfg, const std::string& key,
                        const std::string& value, const fs::path& base) {
  if (key == "detector.model") {
    cfg.detector_source.model = resolve(base, value);
  } else if (key == "detector.replay") {
    cfg.detector_source.replay = resolve(base, value);
  } else if (key == "detector.conf_threshold") {
    cfg.detector.conf_threshold = parse_float(key, value);
  } else if (key == "detector.iou_threshold") {
    cfg.detector.iou_threshold = parse_float(key, value);
  } else if (key == "detector.input_side") {
    cfg.detector.input_side = parse_int(key, value);
  } else if (key == "detector.max_detections") {
    cfg.detector.max_detections = parse_int(key, value);
  } else if (key == "classifier.model") {
    cfg.classifier_source.model = resolve(base, value);
  } else if (key == "classifier.replay") {
    cfg.classifier_source.replay = resolve(base, value);
  } else if (key == "classifier.input_side") {
    cfg.classifier.input_side = parse_int(key, value);
  } else if (key == "classifier.threshold") {
    cfg.classifier.threshold = parse_float(key, value);
  } else if (key == "classifier.output_is_probability") {
    cfg.classifier.output_is_probability = parse_bool(key, value);
  } else if (key == "classifier.mean") {
    cfg.classifier.stats.mean = parse_triple(key, value);
  } else if (key == "classifier.std") {
    cfg.classifier.stats.std = parse_triple(key, value);
  } else if (key == "workers") {
    cfg.workers = parse_int(key, value);
  } else if (key == "crops") {
    cfg.crop_output_dir = resolve(base, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  PipelineConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    apply_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)),
                       path.parent_path());
  }
  return cfg;
}

PipelineStages make_stages(const PipelineConfig& cfg) {
  cfg.validate();
  PipelineStages stages;
  if (cfg.detector_source.replay) {
    auto fixture = std::make_shared<const DetectionFixture>(
        load_detection_fixture(*cfg.detector_source.replay));
    stages.make_detector = [fixture, dc = cfg.detector] {
      return std::make_unique<ReplayDetector>(fixture, dc);
    };
  } else {
    stages.make_detector = [path = *cfg.detector_source.model, dc = cfg.detector] {
      return std::make_unique<ModelDetector>(std::make_unique<OnnxBackend>(path), dc);
    };
  }
  if (cfg.classifier_source.replay) {
    auto fixture = std::make_shared<const ClassifierFixture>(
        load_classifier_fixture(*cfg.classifier_source.replay));
    stages.make_classifier = [fixture, cc = cfg.classifier] {
      return std::make_unique<ReplayClassifier>(fixture, cc);
    };
  } else {
    stages.make_classifier = [path = *cfg.classifier_source.model, cc = cfg.classifier] {
      return std::make_unique<ModelClassifier>(std::make_unique<OnnxBackend>(path), cc);
    };
  }
  return stages;
}

std::string crop_id(const std::string& stem, std::size_t index) {
  return stem + "_kidney" + std::to_string(index);
}

ImageResult process_image(const ManifestRow& row, KidneyDetector& detector,
                          RoiClassifier& classifier,
                          const std::optional<fs::path>& crop_dir) {
  ImageResult result;
  result.stem = row.stem;
  const auto t_start = Clock::now();
  std::string stage = "decode";
  try {
    auto t = Clock::now();
    const ImageBuffer img = load_image(row.path);
    result.timings.decode_ms = ms_since(t);

    stage = "detect";
    t = Clock::now();
    const std::vector<BoxXYXY> boxes = detector.detect(img, row.stem);
    result.timings.detect_ms = ms_since(t);
    result.detection_count = boxes.size();

    stage = "correct";
    t = Clock::now();
    CorrectionOutcome outcome = correct(boxes, img.width());
    result.timings.correct_ms = ms_since(t);

    const auto* pair = std::get_if<RoiPair>(&outcome);
    if (pair) {
      stage = "crop";
      t = Clock::now();
      const ImageBuffer rois[2] = {crop(img, pair->left), crop(img, pair->right)};
      result.timings.crop_ms = ms_since(t);

      if (crop_dir) {
        stage = "write_crop";
        for (std::size_t i = 0; i < 2; ++i) {
          save_png(*crop_dir / (crop_id(row.stem, i) + ".png"), rois[i]);
        }
      }

      stage = "classify";
      t = Clock::now();
      std::vector<Verdict> verdicts;
      for (std::size_t i = 0; i < 2; ++i) {
        verdicts.push_back(classifier.classify(rois[i], crop_id(row.stem, i)));
      }
      result.timings.classify_ms = ms_since(t);
      result.image_verdict = aggregate(verdicts[0], verdicts[1]);
      result.roi_verdicts = std::move(verdicts);
    }
    result.outcome = std::move(outcome);
  } catch (const std::exception& e) {
    result.outcome.reset();
    result.roi_verdicts.clear();
    result.image_verdict.reset();
    result.error = StageError{stage, e.what()};
  }
  result.timings.total_ms = ms_since(t_start);
  return result;
}

std::vector<ImageResult> run_pipeline(const Manifest& manifest,
                                      const PipelineConfig& cfg,
                                      const PipelineStages& stages,
                                      const ProgressFn& progress) {
  // Stage sources are the factories' concern; only scheduling is checked.
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  std::vector<ImageResult> results(manifest.size());
  if (manifest.empty()) return results;
  if (cfg.crop_output_dir) fs::create_directories(*cfg.crop_output_dir);

  struct Worker {
    std::unique_ptr<KidneyDetector> detector;
    std::unique_ptr<RoiClassifier> classifier;
  };
  const auto n_workers = std::min<std::size_t>(cfg.workers, manifest.size());
  std::vector<Worker> workers;
  for (std::size_t i = 0; i < n_workers; ++i) {
    workers.push_back({stages.make_detector(), stages.make_classifier()});
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mu;
  auto work = [&](Worker& w) {
    for (std::size_t i = next++; i < manifest.size(); i = next++) {
      results[i] = process_image(manifest.rows[i], *w.detector, *w.classifier,
                                 cfg.crop_output_dir);
      const std::size_t finished = ++done;
      if (progress) {
        std::lock_guard lock(progress_mu);
        progress(finished, manifest.size());
      }
    }
  };
  if (n_workers == 1) {
    work(workers[0]);
  } else {
    std::vector<std::jthread> threads;
    for (auto& w : workers) threads.emplace_back(work, std::ref(w));
  }
  return results;
}

std::vector<ImageResult> run_pipeline(const Manifest& manifest,
                                      const PipelineConfig& cfg) {
  return run_pipeline(manifest, cfg, make_stages(cfg));
}

LatencyStats summarize(std::vector<double> samples) {
  LatencyStats s;
  s.samples = samples.size();
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  s.mean_ms = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  s.median_ms = n % 2 ? samples[n / 2] : (samples[n / 2 - 1] + samples[n / 2]) / 2.0;
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * n));
  s.p95_ms = samples[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

LatencyReport bench(const Manifest& manifest, const PipelineStages& stages,
                    std::size_t repetitions) {
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  LatencyReport report;
  report.images = manifest.size();
  report.repetitions = repetitions;
  report.warmup_excluded = repetitions >= 3;
  report.timed_runs = repetitions - (report.warmup_excluded ? 1 : 0);

  std::map<std::string, std::vector<double>> samples;
  if (!manifest.empty()) {
    auto detector = stages.make_detector();
    auto classifier = stages.make_classifier();
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
      const bool timed = !(report.warmup_excluded && rep == 0);
      for (const auto& row : manifest.rows) {
        const ImageResult r = process_image(row, *detector, *classifier, std::nullopt);
        if (!timed) continue;
        if (r.error) {
          ++report.failed_runs;
          continue;
        }
        samples["decode"].push_back(r.timings.decode_ms);
        samples["detect"].push_back(r.timings.detect_ms);
        samples["correct"].push_back(r.timings.correct_ms);
        if (!r.roi_verdicts.empty()) {
          samples["crop"].push_back(r.timings.crop_ms);
          samples["classify"].push_back(r.timings.classify_ms);
        }
        samples["end_to_end"].push_back(r.timings.total_ms);
      }
    }
  }
  for (const char* name : {"decode", "detect", "correct", "crop", "classify", "end_to_end"}) {
    report.stages[name] = summarize(std::move(samples[name]));
  }
  return report;
}

LatencyReport bench(const Manifest& manifest, const PipelineConfig& cfg,
                    std::size_t repetitions) {
  return bench(manifest, make_stages(cfg), repetitions);
}

}  // namespace kstone
