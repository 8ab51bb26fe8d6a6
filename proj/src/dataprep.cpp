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

#include "kstone/dataprep.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "kstone/codec.hpp"
#include "kstone/errors.hpp"
#include "kstone/image.hpp"

namespace kstone {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kHeader = "stem,path,label,subject_id,split";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

bool by_stem(const ManifestRow& a, const ManifestRow& b) { return a.stem < b.stem; }

}  // namespace

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "test";
}

std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  return std::nullopt;
}

std::map<Split, std::size_t> Manifest::split_sizes() const {
  std::map<Split, std::size_t> sizes{{Split::kTrain, 0}, {Split::kVal, 0}, {Split::kTest, 0}};
  for (const auto& r : rows) ++sizes[r.split];
  return sizes;
}

void Manifest::validate() const {
  std::set<std::string_view> stems;
  std::map<std::string_view, Split> subject_split;
  for (const auto& r : rows) {
    if (!stems.insert(r.stem).second) {
      throw DuplicateStem("duplicate stem '" + r.stem + "'");
    }
    if (!r.subject_id) continue;
    const auto [it, inserted] = subject_split.emplace(*r.subject_id, r.split);
    if (!inserted && it->second != r.split) {
      throw SubjectLeak("subject '" + *r.subject_id + "' appears in both " +
                        std::string(to_string(it->second)) + " and " +
                        std::string(to_string(r.split)));
    }
  }
}

Manifest read_manifest(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw ConfigError("cannot open manifest " + csv.string());
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kHeader) {
    throw ConfigError(csv.string() + ": expected header '" + std::string(kHeader) + "'");
  }
  const fs::path base = csv.parent_path();
  Manifest m;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::string where = csv.string() + ":" + std::to_string(lineno);
    const auto cells = split_csv(line);
    if (cells.size() != 5) throw ConfigError(where + ": expected 5 columns");
    ManifestRow row;
    row.stem = cells[0];
    if (row.stem.empty()) throw ConfigError(where + ": empty stem");
    row.path = cells[1];
    if (row.path.is_relative()) row.path = base / row.path;
    if (!cells[2].empty()) {
      row.label = parse_label(cells[2]);
      if (!row.label) throw ConfigError(where + ": label must be stone or normal");
    }
    if (!cells[3].empty()) row.subject_id = cells[3];
    const auto split = parse_split(cells[4]);
    if (!split) throw ConfigError(where + ": split must be train, val or test");
    row.split = *split;
    m.rows.push_back(std::move(row));
  }
  m.validate();
  return m;
}

void write_manifest(const Manifest& m, const fs::path& csv) {
  std::ofstream out(csv, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + csv.string());
  out << kHeader << '\n';
  for (const auto& r : m.rows) {
    out << r.stem << ',' << r.path.string() << ','
        << (r.label ? to_string(*r.label) : "") << ','
        << r.subject_id.value_or("") << ',' << to_string(r.split) << '\n';
  }
  if (!out) throw IoError("write failed: " + csv.string());
}

Manifest filter_manifest(const Manifest& m, std::string_view key,
                         std::string_view value) {
  Manifest out;
  for (const auto& r : m.rows) {
    bool keep = false;
    if (key == "split") {
      keep = to_string(r.split) == value;
    } else if (key == "label") {
      keep = r.label && to_string(*r.label) == value;
    } else if (key == "subject_id") {
      keep = r.subject_id && *r.subject_id == value;
    } else {
      throw ConfigError("unknown manifest filter key '" + std::string(key) + "'");
    }
    if (keep) out.rows.push_back(r);
  }
  return out;
}

Manifest build_manifest(const fs::path& root, const ManifestLayout& layout) {
  if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
  Manifest m;
  for (const Split split : {Split::kTrain, Split::kVal, Split::kTest}) {
    for (const Label label : {Label::kStone, Label::kNormal}) {
      const fs::path dir = root / to_string(split) / to_string(label);
      if (!fs::is_directory(dir)) continue;
      for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
        ManifestRow row;
        row.stem = entry.path().stem().string();
        row.path = fs::absolute(entry.path()).lexically_normal();
        row.label = label;
        row.split = split;
        if (layout.subject_delimiter) {
          const std::string name = entry.path().filename().string();
          const auto pos = name.find(*layout.subject_delimiter);
          if (pos != std::string::npos && pos > 0) row.subject_id = name.substr(0, pos);
        }
        m.rows.push_back(std::move(row));
      }
    }
  }
  std::sort(m.rows.begin(), m.rows.end(), by_stem);
  m.validate();
  return m;
}

void AugmentConfig::validate() const {
  if (!(rotate_fraction >= 0.f && rotate_fraction <= 1.f)) {
    throw ConfigError("rotate_fraction must be in [0, 1]");
  }
  if (!(rotate_range_deg >= 0.f && rotate_range_deg <= 180.f)) {
    throw ConfigError("rotate_range_deg must be in [0, 180]");
  }
}

std::uint64_t SeededRng::below(std::uint64_t n) {
  // Largest multiple of n representable, so the modulo is unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double SeededRng::unit() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

AugmentResult augment(const Manifest& crops, const AugmentConfig& cfg,
                      const fs::path& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);

  std::vector<ManifestRow> rows = crops.rows;
  std::sort(rows.begin(), rows.end(), by_stem);

  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].label == cfg.target_class) targets.push_back(i);
  }

  // Partial Fisher-Yates: the first k slots of `order` are the rotated ones.
  SeededRng rng(cfg.seed);
  const auto k = static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.rotate_fraction) * targets.size()));
  std::vector<std::size_t> order(targets.size());
  std::iota(order.begin(), order.end(), 0);
  std::map<std::size_t, double> angle_for;  // row index -> degrees
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(order.size() - i);
    std::swap(order[i], order[j]);
    const double angle = (2.0 * rng.unit() - 1.0) * cfg.rotate_range_deg;
    angle_for[targets[order[i]]] = angle;
  }

  AugmentResult result;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ManifestRow& src = rows[i];
    const auto rotation = angle_for.find(i);
    const bool rotate_original = rotation != angle_for.end() && !cfg.flip;
    try {
      const auto bytes = read_file(src.path);
      if (!rotate_original) {
        ManifestRow copy = src;
        copy.path = out_dir / src.path.filename();
        write_file(copy.path, bytes);
        result.manifest.rows.push_back(std::move(copy));
      }
      if (src.label != cfg.target_class) continue;
      if (!cfg.flip && !rotate_original) continue;

      const ImageBuffer original = decode_image(bytes);
      ManifestRow synth = src;
      ImageBuffer img = cfg.flip ? flip_horizontal(original) : original;
      synth.stem = cfg.flip ? src.stem + "_flip" : src.stem;
      if (rotation != angle_for.end()) {
        img = rotate(img, rotation->second, 0);
        synth.stem += "_rot";
      }
      synth.path = out_dir / (synth.stem + ".png");
      save_png(synth.path, img);
      result.manifest.rows.push_back(std::move(synth));
    } catch (const Error& e) {
      result.errors.push_back(src.path.string() + ": " + e.what());
    }
  }
  std::sort(result.manifest.rows.begin(), result.manifest.rows.end(), by_stem);
  return result;
}

}  // namespace kstone
