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

#ifndef KSTONE_CLASSIFIER_HPP_
#define KSTONE_CLASSIFIER_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "kstone/backend.hpp"
#include "kstone/image.hpp"

namespace kstone {

struct ClassifierConfig {
  int input_side = 224;
  // Scores at or above the threshold are positive.
  float threshold = 0.5f;
  ChannelStats stats = kImageNetStats;
  // The model already ends in a sigmoid; use its output as the score.
  bool output_is_probability = false;

  void validate() const;
};

struct Verdict {
  float score = 0.f;
  bool positive = false;
  std::string roi_id;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct ImageVerdict {
  float score = 0.f;
  bool positive = false;

  friend bool operator==(const ImageVerdict&, const ImageVerdict&) = default;
};

// Numerically stable logistic function.
float sigmoid(float logit);

Verdict make_verdict(float score, const ClassifierConfig& cfg, std::string roi_id);

// Normalizes the ROI, runs the backend and maps its single output to a
// score. Throws ShapeMismatch unless the output holds exactly one value
// (any shape whose dimensions are all 1).
Verdict classify(const ImageBuffer& roi, InferenceBackend& backend,
                 const ClassifierConfig& cfg, std::string roi_id = {});

// Image is positive iff either ROI is; its score is the larger ROI score.
ImageVerdict aggregate(const Verdict& a, const Verdict& b);

// Pipeline-facing classification stage.
class RoiClassifier {
 public:
  virtual ~RoiClassifier() = default;
  virtual Verdict classify(const ImageBuffer& roi, const std::string& roi_id) = 0;
};

class ModelClassifier final : public RoiClassifier {
 public:
  ModelClassifier(std::unique_ptr<InferenceBackend> backend, ClassifierConfig cfg);
  Verdict classify(const ImageBuffer& roi, const std::string& roi_id) override;

 private:
  std::unique_ptr<InferenceBackend> backend_;
  ClassifierConfig cfg_;
};

// Recorded classifier outputs keyed by crop id. Each value is a logit unless
// the record used the "score" key.
struct RecordedOutput {
  float value = 0.f;
  bool is_probability = false;
};
using ClassifierFixture = std::map<std::string, RecordedOutput, std::less<>>;

// JSON Lines: {"crop": "<stem>_kidney0", "logit": 1.3} or
// {"crop": ..., "score": 0.8}.
ClassifierFixture load_classifier_fixture(const std::filesystem::path& path);

class ReplayClassifier final : public RoiClassifier {
 public:
  ReplayClassifier(std::shared_ptr<const ClassifierFixture> fixture,
                   ClassifierConfig cfg);
  // Throws BackendError for unknown crop ids.
  Verdict classify(const ImageBuffer& roi, const std::string& roi_id) override;

 private:
  std::shared_ptr<const ClassifierFixture> fixture_;
  ClassifierConfig cfg_;
};

}  // namespace kstone

#endif  // KSTONE_CLASSIFIER_HPP_
