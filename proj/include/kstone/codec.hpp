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

#ifndef KSTONE_CODEC_HPP_
#define KSTONE_CODEC_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "kstone/image.hpp"

namespace kstone {

// Decodes a PNG or JPEG file held in memory into 8-bit RGB. Grayscale input
// is replicated across channels, 16-bit input reduced to 8 bits and alpha
// composited onto black.
//
// Throws UnsupportedFormat when the bytes carry neither signature and
// DecodeError when a recognised stream is malformed or truncated.
ImageBuffer decode_image(std::span<const std::uint8_t> bytes);

// Lossless PNG encoding; output bytes are a pure function of the image.
std::vector<std::uint8_t> encode_png(const ImageBuffer& img);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);

inline ImageBuffer load_image(const std::filesystem::path& path) {
  return decode_image(read_file(path));
}
inline void save_png(const std::filesystem::path& path, const ImageBuffer& img) {
  write_file(path, encode_png(img));
}

}  // namespace kstone

#endif  // KSTONE_CODEC_HPP_
