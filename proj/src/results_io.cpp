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

#include "kstone/results_io.hpp"

#include <fstream>

#include "kstone/errors.hpp"

namespace kstone {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json metrics_json(const Metrics& m) {
  json j = json::object();
  for (const char* name :
       {"precision", "recall", "f1", "specificity", "accuracy", "fp_rate", "fn_rate",
        "micro_precision", "micro_recall", "micro_f1", "micro_error_rate", "fp_share",
        "fn_share"}) {
    j[name] = optional_number(m.get(name));
  }
  return j;
}

json matrix_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}};
}

json box_json(const BoxXYXY& b) { return json::array({b.x1, b.y1, b.x2, b.y2, b.confidence}); }

BoxXYXY box_from_json(const json& j) {
  return {j.at(0).get<float>(), j.at(1).get<float>(), j.at(2).get<float>(),
          j.at(3).get<float>(), j.at(4).get<float>()};
}

}  // namespace

json to_json(const ImageResult& r) {
  json j;
  j["stem"] = r.stem;
  j["detection_count"] = r.detection_count;
  j["outcome"] = nullptr;
  j["provenance"] = nullptr;
  j["mirror_collision"] = false;
  j["rois"] = json::array();
  if (r.outcome) {
    j["outcome"] = is_excluded(*r.outcome) ? "excluded" : "pair";
    j["provenance"] = provenance_name(*r.outcome);
    if (const auto* pair = std::get_if<RoiPair>(&*r.outcome)) {
      j["mirror_collision"] = pair->mirror_collision;
      for (std::size_t i = 0; i < 2; ++i) {
        json roi{{"crop_id", crop_id(r.stem, i)}, {"box", box_json((*pair)[i])}};
        if (i < r.roi_verdicts.size()) {
          roi["score"] = r.roi_verdicts[i].score;
          roi["positive"] = r.roi_verdicts[i].positive;
        }
        j["rois"].push_back(std::move(roi));
      }
    }
  }
  j["image_verdict"] = r.image_verdict
                           ? json{{"score", r.image_verdict->score},
                                  {"positive", r.image_verdict->positive}}
                           : json(nullptr);
  j["error"] = r.error ? json{{"stage", r.error->stage}, {"message", r.error->message}}
                       : json(nullptr);
  return j;
}

ImageResult image_result_from_json(const json& j) {
  ImageResult r;
  r.stem = j.at("stem").get<std::string>();
  r.detection_count = j.at("detection_count").get<std::size_t>();
  const auto& outcome = j.at("outcome");
  if (outcome == "excluded") {
    r.outcome = Excluded{};
  } else if (outcome == "pair") {
    const auto& rois = j.at("rois");
    if (rois.size() != 2) throw ConfigError(r.stem + ": a pair needs two rois");
    RoiPair pair;
    pair.left = box_from_json(rois[0].at("box"));
    pair.right = box_from_json(rois[1].at("box"));
    pair.mirror_collision = j.value("mirror_collision", false);
    const std::string prov = j.at("provenance").get<std::string>();
    if (prov == "both_detected") {
      pair.provenance = Provenance::kBothDetected;
    } else if (prov == "truncated_from_three") {
      pair.provenance = Provenance::kTruncatedFromThree;
    } else if (prov == "mirror_synthesized_left" || prov == "mirror_synthesized_right") {
      pair.provenance = Provenance::kMirrorSynthesized;
      pair.synthetic_side = prov.ends_with("left") ? Side::kLeft : Side::kRight;
    } else {
      throw ConfigError(r.stem + ": unknown provenance '" + prov + "'");
    }
    for (const auto& roi : rois) {
      if (!roi.contains("score")) continue;
      r.roi_verdicts.push_back({roi.at("score").get<float>(), roi.at("positive").get<bool>(),
                                roi.at("crop_id").get<std::string>()});
    }
    r.outcome = pair;
  } else if (!outcome.is_null()) {
    throw ConfigError(r.stem + ": unknown outcome");
  }
  if (const auto& iv = j.at("image_verdict"); !iv.is_null()) {
    r.image_verdict = ImageVerdict{iv.at("score").get<float>(), iv.at("positive").get<bool>()};
  }
  if (const auto& err = j.at("error"); !err.is_null()) {
    r.error = StageError{err.at("stage").get<std::string>(),
                         err.at("message").get<std::string>()};
  }
  return r;
}

void write_results_jsonl(const std::filesystem::path& path,
                         std::span<const ImageResult> results) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : results) out << to_json(r).dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<ImageResult> read_results_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open results " + path.string());
  std::vector<ImageResult> results;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      results.push_back(image_result_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return results;
}

void write_timings_jsonl(const std::filesystem::path& path,
                         std::span<const ImageResult> results) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : results) {
    const auto& t = r.timings;
    out << json{{"stem", r.stem},          {"decode_ms", t.decode_ms},
                {"detect_ms", t.detect_ms}, {"correct_ms", t.correct_ms},
                {"crop_ms", t.crop_ms},     {"classify_ms", t.classify_ms},
                {"total_ms", t.total_ms}}
               .dump()
        << '\n';
  }
}

json to_json(const LatencyReport& r) {
  json stages = json::object();
  for (const auto& [name, s] : r.stages) {
    stages[name] = {{"samples", s.samples},
                    {"mean_ms", s.mean_ms},
                    {"median_ms", s.median_ms},
                    {"p95_ms", s.p95_ms}};
  }
  return {{"images", r.images},
          {"repetitions", r.repetitions},
          {"warmup_excluded", r.warmup_excluded},
          {"timed_runs_per_image", r.timed_runs},
          {"failed_runs", r.failed_runs},
          {"stages", stages}};
}

json to_json(const EvalReport& r) {
  const auto& h = r.histogram;
  json hist = json::object();
  for (std::size_t k = 0; k < DetectionHistogram::kBuckets; ++k) {
    hist[std::to_string(k)] = {{"stone", h.stone[k]},
                               {"normal", h.normal[k]},
                               {"unlabeled", h.unlabeled[k]},
                               {"total", h.column(k)}};
  }
  return {{"images", r.images},
          {"excluded_images", r.excluded_images},
          {"failed_images", r.failed_images},
          {"per_crop", {{"confusion", matrix_json(r.crop_matrix)},
                        {"metrics", metrics_json(r.crop_metrics)}}},
          {"per_image", {{"confusion", matrix_json(r.image_matrix)},
                         {"metrics", metrics_json(r.image_metrics)}}},
          {"detection_histogram", {{"buckets", hist},
                                   {"folded_overflow", h.folded_overflow}}}};
}

json to_json(std::span<const ReferenceCheck> checks) {
  json arr = json::array();
  for (const auto& c : checks) {
    arr.push_back({{"metric", c.metric},
                   {"observed", optional_number(c.observed)},
                   {"reference", c.reference},
                   {"tolerance", c.tolerance},
                   {"pass", c.pass}});
  }
  return arr;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace kstone
