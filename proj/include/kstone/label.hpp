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

#ifndef KSTONE_LABEL_HPP_
#define KSTONE_LABEL_HPP_

#include <optional>
#include <string_view>

namespace kstone {

// Ground-truth class. Stone is the positive class everywhere.
enum class Label { kStone, kNormal };

constexpr std::string_view to_string(Label l) {
  return l == Label::kStone ? "stone" : "normal";
}

constexpr std::optional<Label> parse_label(std::string_view s) {
  if (s == "stone") return Label::kStone;
  if (s == "normal") return Label::kNormal;
  return std::nullopt;
}

}  // namespace kstone

#endif  // KSTONE_LABEL_HPP_
