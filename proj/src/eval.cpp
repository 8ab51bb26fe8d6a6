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

#include "kstone/eval.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "kstone/errors.hpp"

namespace kstone {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<Label> image_label(const ImageResult& r, const LabelMap& labels) {
  if (const auto it = labels.find(r.stem); it != labels.end()) return it->second;
  std::optional<Label> derived;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto it = labels.find(crop_id(r.stem, i));
    if (it == labels.end()) continue;
    if (it->second == Label::kStone) return Label::kStone;
    derived = Label::kNormal;
  }
  return derived;
}

}  // namespace

void ConfusionMatrix::add(bool predicted_positive, bool actually_positive) {
  if (predicted_positive) {
    ++(actually_positive ? tp : fp);
  } else {
    ++(actually_positive ? fn : tn);
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

std::optional<double> Metrics::get(const std::string& name) const {
  static const std::map<std::string, std::optional<double> Metrics::*> kFields = {
      {"precision", &Metrics::precision},
      {"recall", &Metrics::recall},
      {"f1", &Metrics::f1},
      {"specificity", &Metrics::specificity},
      {"accuracy", &Metrics::accuracy},
      {"fp_rate", &Metrics::fp_rate},
      {"fn_rate", &Metrics::fn_rate},
      {"micro_precision", &Metrics::micro_precision},
      {"micro_recall", &Metrics::micro_recall},
      {"micro_f1", &Metrics::micro_f1},
      {"micro_error_rate", &Metrics::micro_error_rate},
      {"fp_share", &Metrics::fp_share},
      {"fn_share", &Metrics::fn_share},
  };
  const auto it = kFields.find(name);
  if (it == kFields.end()) return std::nullopt;
  return this->*(it->second);
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
  Metrics m;
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0) {
    m.f1 = 2 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  m.specificity = ratio(cm.tn, cm.tn + cm.fp);
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.fp_rate = ratio(cm.fp, cm.fp + cm.tn);
  m.fn_rate = ratio(cm.fn, cm.fn + cm.tp);

  // Micro averaging pools per-class tp/fp/fn over both classes; each error
  // is a false positive for one class and a false negative for the other.
  const std::size_t pooled_tp = cm.tp + cm.tn;
  const std::size_t pooled_err = cm.fp + cm.fn;
  m.micro_precision = ratio(pooled_tp, pooled_tp + pooled_err);
  m.micro_recall = m.micro_precision;
  m.micro_f1 = m.micro_precision;
  m.micro_error_rate = ratio(pooled_err, cm.total());

  m.fp_share = ratio(cm.fp, pooled_err);
  m.fn_share = ratio(cm.fn, pooled_err);
  return m;
}

LabelMap read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open labels " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "crop_id,label") {
    throw ConfigError(path.string() + ": expected header 'crop_id,label'");
  }
  LabelMap labels;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ConfigError(where + ": expected crop_id,label");
    }
    const auto label = parse_label(line.substr(comma + 1));
    if (!label) throw ConfigError(where + ": label must be stone or normal");
    if (!labels.emplace(line.substr(0, comma), *label).second) {
      throw ConfigError(where + ": duplicate id");
    }
  }
  return labels;
}

EvalReport score(std::span<const ImageResult> results, const LabelMap& labels) {
  EvalReport report;
  report.images = results.size();
  std::vector<std::pair<std::size_t, std::optional<Label>>> counts;
  for (const ImageResult& r : results) {
    if (r.error) {
      ++report.failed_images;
      continue;
    }
    const auto label = image_label(r, labels);
    counts.emplace_back(r.detection_count, label);
    if (r.outcome && is_excluded(*r.outcome)) {
      ++report.excluded_images;
      continue;
    }
    for (const Verdict& v : r.roi_verdicts) {
      const auto it = labels.find(v.roi_id);
      if (it == labels.end()) throw MissingLabel("no label for crop '" + v.roi_id + "'");
      report.crop_matrix.add(v.positive, it->second == Label::kStone);
    }
    if (r.image_verdict && label) {
      report.image_matrix.add(r.image_verdict->positive, *label == Label::kStone);
    }
  }
  report.histogram = count_histogram(counts);
  report.crop_metrics = compute_metrics(report.crop_matrix);
  report.image_metrics = compute_metrics(report.image_matrix);
  return report;
}

std::vector<ReferenceCheck> compare_to_reference(
    const EvalReport& report, const std::map<std::string, double>& reference,
    double tolerance) {
  if (tolerance < 0) throw ConfigError("tolerance must be >= 0");
  std::vector<ReferenceCheck> checks;
  for (const auto& [metric, target] : reference) {
    ReferenceCheck c{metric, report.crop_metrics.get(metric), target, tolerance, false};
    c.pass = c.observed && std::abs(*c.observed - target) <= tolerance;
    checks.push_back(std::move(c));
  }
  return checks;
}

std::map<std::string, double> read_reference_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open reference " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    std::map<std::string, double> ref;
    for (const auto& [k, v] : j.items()) {
      // Every metric is defined on a matrix with all four cells non-zero.
      if (!compute_metrics({1, 1, 1, 1}).get(k)) {
        throw ConfigError(path.string() + ": unknown metric '" + k + "'");
      }
      ref[k] = v.get<double>();
    }
    return ref;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace kstone
