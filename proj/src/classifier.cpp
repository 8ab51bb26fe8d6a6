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

#include "kstone/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "kstone/errors.hpp"

namespace kstone {

void ClassifierConfig::validate() const {
  if (input_side < 1) throw ConfigError("classifier.input_side must be >= 1");
  if (!(threshold > 0.f && threshold < 1.f)) {
    throw ConfigError("classifier.threshold must be in (0, 1)");
  }
  for (float s : stats.std) {
    if (!(s > 0.f)) throw ConfigError("classifier.std entries must be > 0");
  }
}

float sigmoid(float logit) {
  const double x = logit;
  if (x >= 0) return static_cast<float>(1.0 / (1.0 + std::exp(-x)));
  const double e = std::exp(x);
  return static_cast<float>(e / (1.0 + e));
}

Verdict make_verdict(float score, const ClassifierConfig& cfg, std::string roi_id) {
  return Verdict{score, score >= cfg.threshold, std::move(roi_id)};
}

Verdict classify(const ImageBuffer& roi, InferenceBackend& backend,
                 const ClassifierConfig& cfg, std::string roi_id) {
  const Tensor out =
      backend.run(Tensor::from(normalize(roi, cfg.input_side, cfg.stats)));
  const bool scalar_shape = std::all_of(out.shape.begin(), out.shape.end(),
                                        [](std::int64_t d) { return d == 1; });
  if (!scalar_shape || out.values.size() != 1) {
    throw ShapeMismatch("classifier output must be a single value, got " +
                        std::to_string(out.values.size()) + " values");
  }
  const float raw = out.values[0];
  const float score = cfg.output_is_probability ? std::clamp(raw, 0.f, 1.f) : sigmoid(raw);
  return make_verdict(score, cfg, std::move(roi_id));
}

ImageVerdict aggregate(const Verdict& a, const Verdict& b) {
  return {std::max(a.score, b.score), a.positive || b.positive};
}

ModelClassifier::ModelClassifier(std::unique_ptr<InferenceBackend> backend,
                                 ClassifierConfig cfg)
    : backend_(std::move(backend)), cfg_(cfg) {
  cfg_.validate();
}

Verdict ModelClassifier::classify(const ImageBuffer& roi, const std::string& roi_id) {
  return kstone::classify(roi, *backend_, cfg_, roi_id);
}

ClassifierFixture load_classifier_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open classifier fixture " + path.string());
  ClassifierFixture fixture;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    try {
      const auto rec = nlohmann::json::parse(line);
      RecordedOutput out;
      if (rec.contains("logit")) {
        out.value = rec["logit"].get<float>();
      } else if (rec.contains("score")) {
        out.value = rec["score"].get<float>();
        out.is_probability = true;
      } else {
        throw ConfigError(where + ": record needs a \"logit\" or \"score\" field");
      }
      if (!fixture.emplace(rec.at("crop").get<std::string>(), out).second) {
        throw ConfigError(where + ": duplicate crop record");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return fixture;
}

ReplayClassifier::ReplayClassifier(std::shared_ptr<const ClassifierFixture> fixture,
                                   ClassifierConfig cfg)
    : fixture_(std::move(fixture)), cfg_(cfg) {
  cfg_.validate();
}

Verdict ReplayClassifier::classify(const ImageBuffer&, const std::string& roi_id) {
  const auto it = fixture_->find(roi_id);
  if (it == fixture_->end()) {
    throw BackendError("no replay record for crop '" + roi_id + "'");
  }
  const RecordedOutput& r = it->second;
  const float score = r.is_probability ? std::clamp(r.value, 0.f, 1.f) : sigmoid(r.value);
  return make_verdict(score, cfg_, roi_id);
}

}  // namespace kstone
