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

#include <chrono>
#include <random>

#include <gtest/gtest.h>

#include "kstone/errors.hpp"
#include "kstone/pipeline.hpp"
#include "kstone/results_io.hpp"
#include "test_support.hpp"

namespace kstone {
namespace {

using namespace std::chrono_literals;
using testing::TempDir;

// Small dataset: n gradient images with replayed detection counts cycling
// through 0, 1, 2, 3.
struct SmallDataset {
  Manifest manifest;
  std::shared_ptr<const DetectionFixture> fixture;
};

SmallDataset make_small_dataset(const TempDir& dir, int n) {
  SmallDataset d;
  auto fixture = std::make_shared<DetectionFixture>();
  const std::vector<BoxXYXY> kidneys{{20, 30, 50, 90, 0.9f},
                                     {75, 28, 108, 92, 0.8f},
                                     {58, 40, 70, 60, 0.3f}};
  for (int i = 0; i < n; ++i) {
    ManifestRow row;
    row.stem = "img" + std::to_string(100 + i);
    row.path = dir / (row.stem + ".png");
    row.label = i % 2 ? Label::kStone : Label::kNormal;
    save_png(row.path, testing::gradient_image(128, 128, i));
    d.manifest.rows.push_back(row);
    (*fixture)[row.stem] = std::vector<BoxXYXY>(kidneys.begin(), kidneys.begin() + i % 4);
  }
  d.fixture = fixture;
  return d;
}

std::string results_text(const std::vector<ImageResult>& results) {
  std::string out;
  for (const auto& r : results) out += to_json(r).dump() + "\n";
  return out;
}

TEST(PipelineTest, EmptyManifestGivesNoResults) {
  EXPECT_TRUE(run_pipeline({}, {}, testing::stub_stages(testing::test_split_fixture(), 1.f)).empty());
}

TEST(PipelineTest, AccountsEveryOutcome) {
  TempDir dir;
  const auto d = make_small_dataset(dir, 8);
  PipelineConfig cfg;
  cfg.crop_output_dir = dir / "crops";
  const auto results = run_pipeline(d.manifest, cfg, testing::stub_stages(d.fixture, 2.f));
  ASSERT_EQ(results.size(), 8u);
  std::size_t pairs = 0, verdicts = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    EXPECT_EQ(r.stem, d.manifest.rows[i].stem);
    EXPECT_FALSE(r.error);
    EXPECT_EQ(r.detection_count, i % 4);
    ASSERT_TRUE(r.outcome);
    if (is_excluded(*r.outcome)) {
      EXPECT_TRUE(r.roi_verdicts.empty());
      EXPECT_FALSE(r.image_verdict);
    } else {
      ++pairs;
      ASSERT_EQ(r.roi_verdicts.size(), 2u);
      EXPECT_EQ(r.roi_verdicts[0].roi_id, r.stem + "_kidney0");
      EXPECT_TRUE(r.image_verdict->positive);
    }
    verdicts += r.roi_verdicts.size();
  }
  EXPECT_EQ(pairs, 6u);
  EXPECT_EQ(verdicts, 2 * pairs);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "crops")) {
    EXPECT_EQ(e.path().extension(), ".png");
    ++files;
  }
  EXPECT_EQ(files, verdicts);
  // Crop of the replayed (20,30)-(50,90) box.
  const ImageBuffer crop0 = load_image(dir / "crops" / "img101_kidney0.png");
  EXPECT_EQ(crop0.width(), 30);
  EXPECT_EQ(crop0.height(), 60);
}

TEST(PipelineTest, TestSplitReplayCounts) {
  TempDir dir;
  const Manifest m = testing::prepare_test_split_dataset(dir);
  ASSERT_EQ(m.size(), 346u);
  const auto results = run_pipeline(m, {}, testing::stub_stages(testing::test_split_fixture(), 0.f));
  std::size_t excluded_count = 0, verdicts = 0;
  for (const auto& r : results) {
    ASSERT_FALSE(r.error) << r.stem << ": " << r.error->message;
    excluded_count += is_excluded(*r.outcome);
    verdicts += r.roi_verdicts.size();
  }
  EXPECT_EQ(excluded_count, 23u);
  EXPECT_EQ(verdicts, 646u);
}

TEST(PipelineTest, CorruptImageIsIsolated) {
  TempDir dir;
  auto d = make_small_dataset(dir, 4);
  testing::write_text(d.manifest.rows[2].path, "garbage");
  const auto results = run_pipeline(d.manifest, {}, testing::stub_stages(d.fixture, 0.f));
  ASSERT_EQ(results.size(), 4u);
  ASSERT_TRUE(results[2].error);
  EXPECT_EQ(results[2].error->stage, "decode");
  EXPECT_FALSE(results[2].outcome);
  EXPECT_TRUE(results[2].roi_verdicts.empty());
  EXPECT_FALSE(results[3].error);
}

TEST(PipelineTest, BackendFailureIsRecordedAtItsStage) {
  TempDir dir;
  const auto d = make_small_dataset(dir, 3);
  PipelineStages stages = testing::stub_stages(d.fixture, 0.f);
  stages.make_classifier = [] {
    return std::make_unique<ModelClassifier>(
        FunctionBackend::constant(Tensor{{1, 3}, {0, 0, 0}}), ClassifierConfig{});
  };
  const auto results = run_pipeline(d.manifest, {}, stages);
  EXPECT_FALSE(results[0].error);  // excluded, never classified
  ASSERT_TRUE(results[1].error);
  EXPECT_EQ(results[1].error->stage, "classify");
  EXPECT_FALSE(results[1].outcome);
}

TEST(PipelineTest, WorkerCountDoesNotChangeResults) {
  TempDir dir;
  const auto d = make_small_dataset(dir, 23);
  PipelineConfig one;
  PipelineConfig four;
  four.workers = 4;
  const auto stages = testing::stub_stages(d.fixture, -0.5f);
  const auto a = results_text(run_pipeline(d.manifest, one, stages));
  const auto b = results_text(run_pipeline(d.manifest, four, stages));
  EXPECT_EQ(a, b);
}

TEST(PipelineTest, ModelBackedStagesFromConfig) {
  TempDir dir;
  const auto d = make_small_dataset(dir, 3);
  testing::write_text(dir / "pipeline.cfg",
                      "# tiny models\n"
                      "detector.model = " + (testing::data_dir() / "models" / "detector_tiny.onnx").string() + "\n"
                      "classifier.model = " + (testing::data_dir() / "models" / "classifier_tiny.onnx").string() + "\n"
                      "workers = 2\n");
  const auto cfg = load_pipeline_config(dir / "pipeline.cfg");
  const auto results = run_pipeline(d.manifest, cfg);
  for (const auto& r : results) {
    ASSERT_FALSE(r.error) << r.error->message;
    // One detection at (270,270)-(370,370) in 640 space -> mirrored pair.
    EXPECT_EQ(r.detection_count, 1u);
    EXPECT_EQ(r.roi_verdicts.size(), 2u);
  }
}

TEST(ConfigTest, ParsesKeysAndResolvesRelativePaths) {
  TempDir dir;
  testing::write_text(dir / "c.cfg",
                      "detector.replay = fx.jsonl   # recorded\n"
                      "detector.conf_threshold = 0.3\n"
                      "detector.iou_threshold=0.5\n"
                      "detector.input_side = 320\n"
                      "detector.max_detections = 4\n"
                      "classifier.model = /abs/model.onnx\n"
                      "classifier.threshold = 0.4\n"
                      "classifier.input_side = 128\n"
                      "classifier.output_is_probability = true\n"
                      "classifier.mean = 0.5, 0.5, 0.5\n"
                      "classifier.std = 0.25,0.25,0.25\n"
                      "workers = 3\n"
                      "crops = out/crops\n");
  const auto cfg = load_pipeline_config(dir / "c.cfg");
  EXPECT_EQ(*cfg.detector_source.replay, dir / "fx.jsonl");
  EXPECT_EQ(*cfg.classifier_source.model, "/abs/model.onnx");
  EXPECT_FLOAT_EQ(cfg.detector.conf_threshold, 0.3f);
  EXPECT_FLOAT_EQ(cfg.detector.iou_threshold, 0.5f);
  EXPECT_EQ(cfg.detector.input_side, 320);
  EXPECT_EQ(cfg.detector.max_detections, 4);
  EXPECT_FLOAT_EQ(cfg.classifier.threshold, 0.4f);
  EXPECT_EQ(cfg.classifier.input_side, 128);
  EXPECT_TRUE(cfg.classifier.output_is_probability);
  EXPECT_FLOAT_EQ(cfg.classifier.stats.std[2], 0.25f);
  EXPECT_EQ(cfg.workers, 3);
  EXPECT_EQ(*cfg.crop_output_dir, dir / "out/crops");
  EXPECT_NO_THROW(cfg.validate());
}

TEST(ConfigTest, RejectsBadInput) {
  TempDir dir;
  testing::write_text(dir / "unknown.cfg", "detector.colour = red\n");
  EXPECT_THROW(load_pipeline_config(dir / "unknown.cfg"), ConfigError);
  testing::write_text(dir / "nonum.cfg", "workers = many\n");
  EXPECT_THROW(load_pipeline_config(dir / "nonum.cfg"), ConfigError);
  testing::write_text(dir / "noeq.cfg", "workers 3\n");
  EXPECT_THROW(load_pipeline_config(dir / "noeq.cfg"), ConfigError);
  EXPECT_THROW(load_pipeline_config(dir / "missing.cfg"), ConfigError);

  testing::write_text(dir / "both.cfg",
                      "detector.model = a.onnx\ndetector.replay = b.jsonl\n"
                      "classifier.replay = c.jsonl\n");
  EXPECT_THROW(load_pipeline_config(dir / "both.cfg").validate(), ConfigError);
  testing::write_text(dir / "none.cfg", "detector.model = a.onnx\n");
  EXPECT_THROW(load_pipeline_config(dir / "none.cfg").validate(), ConfigError);
}

TEST(ResultsIoTest, JsonLinesRoundTrip) {
  TempDir dir;
  const auto d = make_small_dataset(dir, 8);
  auto results = run_pipeline(d.manifest, {}, testing::stub_stages(d.fixture, 0.7f));
  results.push_back(ImageResult{"broken", 0, std::nullopt, {}, std::nullopt, {},
                                StageError{"decode", "bad bytes"}});
  write_results_jsonl(dir / "r.jsonl", results);
  const auto back = read_results_jsonl(dir / "r.jsonl");
  ASSERT_EQ(back.size(), results.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].stem, results[i].stem);
    EXPECT_EQ(back[i].detection_count, results[i].detection_count);
    EXPECT_EQ(back[i].outcome, results[i].outcome);
    EXPECT_EQ(back[i].roi_verdicts, results[i].roi_verdicts);
    EXPECT_EQ(back[i].image_verdict, results[i].image_verdict);
    EXPECT_EQ(back[i].error, results[i].error);
  }
  write_timings_jsonl(dir / "t.jsonl", results);
  EXPECT_NE(testing::read_text(dir / "t.jsonl").find("\"detect_ms\""), std::string::npos);
}

TEST(SummarizeTest, MeanMedianNearestRankP95) {
  std::vector<double> v;
  for (int i = 1; i <= 20; ++i) v.push_back(i);
  const auto s = summarize(v);
  EXPECT_EQ(s.samples, 20u);
  EXPECT_DOUBLE_EQ(s.mean_ms, 10.5);
  EXPECT_DOUBLE_EQ(s.median_ms, 10.5);
  EXPECT_DOUBLE_EQ(s.p95_ms, 19);
  EXPECT_DOUBLE_EQ(summarize({3, 1, 2}).median_ms, 2);
  EXPECT_EQ(summarize({}).samples, 0u);
}

TEST(BenchTest, InjectedDelayIsMeasured) {
  TempDir dir;
  const auto d = make_small_dataset(dir, 3);
  PipelineStages stages = testing::stub_stages(d.fixture, 0.f);
  stages.make_detector = [fixture = d.fixture] {
    DetectorConfig cfg;
    cfg.input_side = 32;
    auto backend = FunctionBackend::constant(Tensor{{1, 5, 0}, {}}, 10ms);
    return std::make_unique<ModelDetector>(std::move(backend), cfg);
  };
  const auto report = bench(d.manifest, stages, 4);
  const auto& detect = report.stages.at("detect");
  EXPECT_EQ(detect.samples, 9u);
  EXPECT_GE(detect.mean_ms, 10.0);
  EXPECT_LE(detect.mean_ms, 15.0);
  EXPECT_GE(report.stages.at("end_to_end").mean_ms, detect.mean_ms);
}

TEST(BenchTest, WarmupAccounting) {
  TempDir dir;
  const auto d = make_small_dataset(dir, 3);
  Manifest two;
  two.rows = {d.manifest.rows[1], d.manifest.rows[2]};  // both reach classification
  const auto stages = testing::stub_stages(d.fixture, 0.f);

  const auto single = bench(two, stages, 1);
  EXPECT_FALSE(single.warmup_excluded);
  EXPECT_EQ(single.timed_runs, 1u);
  EXPECT_EQ(single.stages.at("end_to_end").samples, 2u);

  const auto three = bench(two, stages, 3);
  EXPECT_TRUE(three.warmup_excluded);
  EXPECT_EQ(three.timed_runs, 2u);
  EXPECT_EQ(three.stages.at("end_to_end").samples, 4u);
  EXPECT_EQ(three.stages.at("classify").samples, 4u);

  EXPECT_THROW(bench(two, stages, 0), ConfigError);
}

TEST(BenchTest, FailedRunsAreCountedNotTimed) {
  TempDir dir;
  auto d = make_small_dataset(dir, 2);
  testing::write_text(d.manifest.rows[0].path, "junk");
  const auto report = bench(d.manifest, testing::stub_stages(d.fixture, 0.f), 2);
  EXPECT_EQ(report.failed_runs, 2u);
  EXPECT_EQ(report.stages.at("end_to_end").samples, 2u);
}

}  // namespace
}  // namespace kstone
