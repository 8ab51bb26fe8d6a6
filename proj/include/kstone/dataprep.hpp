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

#ifndef KSTONE_DATAPREP_HPP_
#define KSTONE_DATAPREP_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "kstone/label.hpp"

namespace kstone {

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view s);

struct ManifestRow {
  std::string stem;
  std::filesystem::path path;
  // Empty for unlabeled inference inputs.
  std::optional<Label> label;
  std::optional<std::string> subject_id;
  Split split = Split::kTest;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct Manifest {
  std::vector<ManifestRow> rows;

  std::map<Split, std::size_t> split_sizes() const;
  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }

  // Throws DuplicateStem, or SubjectLeak naming the subject and both splits.
  void validate() const;
};

// CSV with header `stem,path,label,subject_id,split`. Relative paths are
// resolved against the manifest's directory. Throws ConfigError on
// malformed rows and the validate() errors.
Manifest read_manifest(const std::filesystem::path& csv);
void write_manifest(const Manifest& m, const std::filesystem::path& csv);

// Rows whose column `key` equals `value` (keys: split, label, subject_id).
Manifest filter_manifest(const Manifest& m, std::string_view key,
                         std::string_view value);

struct ManifestLayout {
  // When set, the subject id is the file name up to the first occurrence of
  // this delimiter (e.g. "p017_slice3.png" -> "p017" with '_').
  std::optional<char> subject_delimiter;
};

// Scans `<root>/<split>/<label>/*.{png,jpg,jpeg}` where split is one of
// train/val/test and label one of stone/normal. Rows come out sorted by stem.
Manifest build_manifest(const std::filesystem::path& root,
                        const ManifestLayout& layout = {});

struct AugmentConfig {
  std::uint64_t seed = 0;
  // Share of target-class images whose synthesized copy is also rotated.
  float rotate_fraction = 0.5f;
  // Angles are drawn uniformly from [-range, +range] degrees.
  float rotate_range_deg = 25.f;
  bool flip = true;
  Label target_class = Label::kStone;

  void validate() const;
};

struct AugmentResult {
  Manifest manifest;
  // One message per file that could not be read, decoded or written.
  std::vector<std::string> errors;
};

// Offline augmentation of a crop set into `out_dir`:
//   * every input file is copied byte for byte;
//   * with `flip`, each target-class image also gets a mirrored copy
//     `<stem>_flip.png`;
//   * round(rotate_fraction * n_target) target images, picked by a seeded
//     shuffle, have their synthesized copy (the flip copy, or the original
//     copy when flip is off) rotated in place by a seeded angle, corners
//     filled black, and renamed with a `_rot` suffix.
// Rotation never adds files, so the output count is
// n_input + (flip ? n_target : 0). Output is a pure function of
// (inputs, cfg).
AugmentResult augment(const Manifest& crops, const AugmentConfig& cfg,
                      const std::filesystem::path& out_dir);

// Portable seeded stream: the raw mt19937_64 sequence is specified by the
// standard, the derived draws below are defined here rather than by the
// library's distributions.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, n), rejection-sampled. n must be > 0.
  std::uint64_t below(std::uint64_t n);
  // Uniform in [0, 1) with 53 random bits.
  double unit();

 private:
  std::mt19937_64 engine_;
};

}  // namespace kstone

#endif  // KSTONE_DATAPREP_HPP_
