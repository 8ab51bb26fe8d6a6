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

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "kstone/errors.hpp"
#include "kstone/eval.hpp"
#include "test_support.hpp"

namespace kstone {
namespace {

using testing::TempDir;

ImageResult paired(const std::string& stem, float s0, float s1) {
  ImageResult r;
  r.stem = stem;
  r.detection_count = 2;
  r.outcome = RoiPair{{10, 10, 40, 40, .9f}, {60, 10, 90, 40, .8f}, Provenance::kBothDetected};
  r.roi_verdicts = {make_verdict(s0, ClassifierConfig{}, crop_id(stem, 0)),
                    make_verdict(s1, ClassifierConfig{}, crop_id(stem, 1))};
  r.image_verdict = aggregate(r.roi_verdicts[0], r.roi_verdicts[1]);
  return r;
}

ImageResult excluded(const std::string& stem, std::size_t n) {
  ImageResult r;
  r.stem = stem;
  r.detection_count = n;
  r.outcome = Excluded{};
  return r;
}

TEST(MetricsTest, WorkedCase) {
  const Metrics m = compute_metrics({9, 1, 1, 9});
  EXPECT_DOUBLE_EQ(*m.precision, 0.9);
  EXPECT_DOUBLE_EQ(*m.recall, 0.9);
  EXPECT_DOUBLE_EQ(*m.f1, 0.9);
  EXPECT_DOUBLE_EQ(*m.specificity, 0.9);
  EXPECT_DOUBLE_EQ(*m.accuracy, 0.9);
  EXPECT_DOUBLE_EQ(*m.fp_rate, 0.1);
  EXPECT_DOUBLE_EQ(*m.fn_rate, 0.1);
  EXPECT_DOUBLE_EQ(*m.micro_f1, 0.9);
  EXPECT_DOUBLE_EQ(*m.micro_error_rate, 0.1);
  EXPECT_DOUBLE_EQ(*m.fp_share, 0.5);
}

TEST(MetricsTest, PerfectAndDegenerate) {
  const Metrics perfect = compute_metrics({5, 0, 0, 7});
  EXPECT_DOUBLE_EQ(*perfect.f1, 1.0);
  EXPECT_DOUBLE_EQ(*perfect.fp_rate, 0.0);
  EXPECT_FALSE(perfect.fp_share);  // no errors to share

  const Metrics no_positive_predictions = compute_metrics({0, 0, 3, 4});
  EXPECT_FALSE(no_positive_predictions.precision);
  EXPECT_FALSE(no_positive_predictions.f1);
  EXPECT_DOUBLE_EQ(*no_positive_predictions.recall, 0.0);

  const Metrics empty = compute_metrics({});
  EXPECT_FALSE(empty.accuracy);
  EXPECT_FALSE(empty.micro_f1);
}

TEST(MetricsTest, LookupByName) {
  const Metrics m = compute_metrics({9, 1, 1, 9});
  EXPECT_DOUBLE_EQ(*m.get("fn_rate"), 0.1);
  EXPECT_FALSE(m.get("auc"));
}

// Pooled counts over both classes make micro P, R and F1 coincide and the
// pooled error rate equal 1 - F1, which matches how the reported table
// lists identical P/R/F1 and identical FP/FN rates.
TEST(MetricsTest, MicroAveragesCoincide) {
  std::mt19937 rng(5);
  for (int t = 0; t < 200; ++t) {
    std::uniform_int_distribution<std::size_t> d(0, 40);
    const ConfusionMatrix cm{d(rng) + 1, d(rng), d(rng), d(rng)};
    const Metrics m = compute_metrics(cm);
    EXPECT_DOUBLE_EQ(*m.micro_precision, *m.micro_recall);
    EXPECT_DOUBLE_EQ(*m.micro_f1, *m.accuracy);
    EXPECT_NEAR(*m.micro_f1 + *m.micro_error_rate, 1.0, 1e-12);
    EXPECT_NEAR(*m.fp_rate + *m.specificity, 1.0, 1e-12);
    if (m.fn_rate) EXPECT_NEAR(*m.fn_rate + *m.recall, 1.0, 1e-12);
  }
}

TEST(ScoreTest, MatchesCountingOracle) {
  std::mt19937 rng(17);
  for (int t = 0; t < 1000; ++t) {
    const int n = std::uniform_int_distribution<int>(0, 30)(rng);
    std::vector<ImageResult> results;
    LabelMap labels;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (int i = 0; i < n; ++i) {
      const std::string stem = "s" + std::to_string(i);
      std::uniform_real_distribution<float> u(0.f, 1.f);
      results.push_back(paired(stem, u(rng), u(rng)));
      for (const Verdict& v : results.back().roi_verdicts) {
        const bool stone = rng() % 2;
        labels[v.roi_id] = stone ? Label::kStone : Label::kNormal;
        const bool pred = v.score >= 0.5f;
        tp += pred && stone;
        fp += pred && !stone;
        fn += !pred && stone;
        tn += !pred && !stone;
      }
    }
    const EvalReport report = score(results, labels);
    ASSERT_EQ(report.crop_matrix, (ConfusionMatrix{tp, fp, fn, tn}));
    if (tp + fp > 0) {
      ASSERT_EQ(*report.crop_metrics.precision, static_cast<double>(tp) / (tp + fp));
    }
    if (tp + fn > 0) {
      ASSERT_EQ(*report.crop_metrics.recall, static_cast<double>(tp) / (tp + fn));
    }

    std::shuffle(results.begin(), results.end(), rng);
    ASSERT_EQ(score(results, labels).crop_matrix, report.crop_matrix);
  }
}

TEST(ScoreTest, ExcludedAndFailedImagesAreCountedSeparately) {
  std::vector<ImageResult> results{paired("a", 0.9f, 0.1f), excluded("b", 0), excluded("c", 3)};
  ImageResult broken;
  broken.stem = "d";
  broken.error = StageError{"decode", "bad"};
  results.push_back(broken);
  const LabelMap labels{{"a_kidney0", Label::kStone}, {"a_kidney1", Label::kNormal},
                        {"b", Label::kNormal}};
  const EvalReport report = score(results, labels);
  EXPECT_EQ(report.images, 4u);
  EXPECT_EQ(report.excluded_images, 2u);
  EXPECT_EQ(report.failed_images, 1u);
  EXPECT_EQ(report.crop_matrix, (ConfusionMatrix{1, 0, 0, 1}));
  EXPECT_EQ(report.image_matrix, (ConfusionMatrix{1, 0, 0, 0}));
  EXPECT_EQ(report.histogram.stone[2], 1u);
  EXPECT_EQ(report.histogram.normal[0], 1u);
  EXPECT_EQ(report.histogram.unlabeled[3], 1u);
}

TEST(ScoreTest, MissingLabelIsAnError) {
  const std::vector<ImageResult> results{paired("a", 0.9f, 0.1f)};
  EXPECT_THROW(score(results, {{"a_kidney0", Label::kStone}}), MissingLabel);
}

TEST(ReferenceTest, Tolerance) {
  EvalReport report;
  report.crop_metrics.f1 = 0.9594;
  report.crop_metrics.fn_rate = 0.0406;
  auto checks = compare_to_reference(report, {{"f1", 0.9594}, {"fn_rate", 0.0406}}, 0.03);
  ASSERT_EQ(checks.size(), 2u);
  EXPECT_TRUE(checks[0].pass && checks[1].pass);

  report.crop_metrics.f1 = 0.92;
  EXPECT_FALSE(compare_to_reference(report, {{"f1", 0.9594}}, 0.03)[0].pass);
  report.crop_metrics.f1 = 0.9594;
  EXPECT_TRUE(compare_to_reference(report, {{"f1", 0.9594}}, 0.0)[0].pass);
  EXPECT_FALSE(compare_to_reference(report, {{"precision", 0.9}}, 0.03)[0].pass);
  EXPECT_THROW(compare_to_reference(report, {}, -1), ConfigError);
}

TEST(ReferenceTest, ReadsJson) {
  TempDir dir;
  testing::write_text(dir / "ref.json", R"({"f1": 0.9594, "fn_rate": 0.0406})");
  const auto ref = read_reference_json(dir / "ref.json");
  EXPECT_DOUBLE_EQ(ref.at("f1"), 0.9594);
  testing::write_text(dir / "bad.json", R"({"auc": 0.9})");
  EXPECT_THROW(read_reference_json(dir / "bad.json"), ConfigError);
  testing::write_text(dir / "broken.json", "{");
  EXPECT_THROW(read_reference_json(dir / "broken.json"), ConfigError);
}

TEST(LabelsCsvTest, ParsesAndRejects) {
  TempDir dir;
  testing::write_text(dir / "l.csv", "crop_id,label\r\nx_kidney0,stone\r\nx_kidney1,normal\r\n\r\n");
  const auto labels = read_labels_csv(dir / "l.csv");
  EXPECT_EQ(labels.size(), 2u);
  EXPECT_EQ(labels.at("x_kidney1"), Label::kNormal);
  testing::write_text(dir / "h.csv", "id,label\n");
  EXPECT_THROW(read_labels_csv(dir / "h.csv"), ConfigError);
  testing::write_text(dir / "v.csv", "crop_id,label\na,maybe\n");
  EXPECT_THROW(read_labels_csv(dir / "v.csv"), ConfigError);
  testing::write_text(dir / "d.csv", "crop_id,label\na,stone\na,normal\n");
  EXPECT_THROW(read_labels_csv(dir / "d.csv"), ConfigError);
}

}  // namespace
}  // namespace kstone
