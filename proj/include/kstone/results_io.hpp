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

#ifndef KSTONE_RESULTS_IO_HPP_
#define KSTONE_RESULTS_IO_HPP_

#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "kstone/eval.hpp"
#include "kstone/pipeline.hpp"

namespace kstone {

// One results line. Timings are deliberately not part of it, so a results
// file is a pure function of inputs and configuration:
//
//   {"stem": "img001", "detection_count": 1,
//    "outcome": "pair",                    // "pair" | "excluded" | null
//    "provenance": "mirror_synthesized_right",
//    "mirror_collision": false,
//    "rois": [{"crop_id": "img001_kidney0", "box": [x1, y1, x2, y2, conf],
//              "score": 0.93, "positive": true}, ...],   // 0 or 2 entries
//    "image_verdict": {"score": 0.93, "positive": true}, // or null
//    "error": null}                        // or {"stage": ..., "message": ...}
nlohmann::json to_json(const ImageResult& r);
ImageResult image_result_from_json(const nlohmann::json& j);

void write_results_jsonl(const std::filesystem::path& path,
                         std::span<const ImageResult> results);
std::vector<ImageResult> read_results_jsonl(const std::filesystem::path& path);

// {"stem": ..., "decode_ms": ..., ..., "total_ms": ...} per line.
void write_timings_jsonl(const std::filesystem::path& path,
                         std::span<const ImageResult> results);

nlohmann::json to_json(const LatencyReport& r);
nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(std::span<const ReferenceCheck> checks);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace kstone

#endif  // KSTONE_RESULTS_IO_HPP_
