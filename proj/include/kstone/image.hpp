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

#ifndef KSTONE_IMAGE_HPP_
#define KSTONE_IMAGE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace kstone {

// Decoded 8-bit RGB raster, row-major, interleaved (R, G, B per pixel).
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;

  // Filled with `fill` in every channel. Throws std::invalid_argument on a
  // zero dimension.
  ImageBuffer(int width, int height, std::uint8_t fill = 0);
  // Takes ownership of `data`; its size must be width * height * 3.
  ImageBuffer(int width, int height, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }

  std::uint8_t at(int x, int y, int c) const {
    return data_[index(x, y, c)];
  }
  std::uint8_t& at(int x, int y, int c) { return data_[index(x, y, c)]; }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

// Axis-aligned box in pixel coordinates plus detector confidence.
struct BoxXYXY {
  float x1 = 0.f;
  float y1 = 0.f;
  float x2 = 0.f;
  float y2 = 0.f;
  float confidence = 0.f;

  // Sub-pixel grid that canonical coordinates live on. Any coordinate k/256
  // with |k| < 2^24 is an exact float, and so is W - x for integer W, which
  // makes mirroring an exact involution.
  static constexpr float kGrid = 256.f;

  // Orders the corners (x1 <= x2, y1 <= y2), snaps coordinates to the
  // 1/256 px grid and clamps confidence to [0, 1].
  BoxXYXY canonical() const;

  float width() const { return x2 - x1; }
  float height() const { return y2 - y1; }
  float area() const;

  friend bool operator==(const BoxXYXY&, const BoxXYXY&) = default;
};

// Forward/inverse affine between a source image and its letterboxed copy.
struct LetterboxMap {
  float scale = 1.f;
  float pad_x = 0.f;
  float pad_y = 0.f;
  int src_w = 0;
  int src_h = 0;
  int dst_w = 0;
  int dst_h = 0;

  // Pure geometry; `letterbox` builds the same map alongside the image.
  static LetterboxMap fit(int src_w, int src_h, int dst_w, int dst_h);
};

// Channel-major (3, H, W) float tensor.
struct NormalizedTensor {
  int height = 0;
  int width = 0;
  std::vector<float> values;

  float at(int c, int y, int x) const {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  std::array<std::int64_t, 4> nchw_shape() const { return {1, 3, height, width}; }
};

struct ChannelStats {
  std::array<float, 3> mean;
  std::array<float, 3> std;
};

// ImageNet statistics used by the classifier's pretrained backbone.
inline constexpr ChannelStats kImageNetStats{{0.485f, 0.456f, 0.406f},
                                             {0.229f, 0.224f, 0.225f}};
// Plain [0, 1] scaling, as expected by the detector.
inline constexpr ChannelStats kUnitStats{{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}};

inline constexpr std::uint8_t kLetterboxFill = 114;

// Bilinear resize with half-pixel centres and no antialiasing. Same-size
// resizes return an exact copy.
ImageBuffer resize_bilinear(const ImageBuffer& img, int width, int height);

struct Letterboxed {
  ImageBuffer image;
  LetterboxMap map;
};

// Aspect-preserving resize into a dst x dst square, centred, padded with
// `fill`. Throws std::invalid_argument if dst < 1.
Letterboxed letterbox(const ImageBuffer& img, int dst,
                      std::uint8_t fill = kLetterboxFill);

// Source space -> letterbox space.
BoxXYXY map_box(const BoxXYXY& box, const LetterboxMap& map);

// Letterbox space -> source space, clamped to the source image and
// canonicalized. Throws DegenerateBox if the clamped box is thinner than
// one pixel in either direction.
BoxXYXY unmap_box(const BoxXYXY& box, const LetterboxMap& map);

// Reflects a box across the vertical centreline of an image of the given
// width. The y-extent and confidence are unchanged.
BoxXYXY mirror_box(const BoxXYXY& box, int image_width);

// Copies the outward-rounded integer rectangle
// [floor(x1), ceil(x2)) x [floor(y1), ceil(y2)) intersected with the image.
// Throws EmptyCrop when the intersection is empty.
ImageBuffer crop(const ImageBuffer& img, const BoxXYXY& box);

// Bilinear resize to size x size then per-channel (p/255 - mean) / std.
NormalizedTensor normalize(const ImageBuffer& img, int size,
                           const ChannelStats& stats = kImageNetStats);

// Per-pixel normalization without resizing.
NormalizedTensor to_tensor(const ImageBuffer& img, const ChannelStats& stats);

ImageBuffer flip_horizontal(const ImageBuffer& img);

// Rotation about the image centre by `degrees` (counter-clockwise), same
// output size, bilinear sampling, `fill` outside the source.
ImageBuffer rotate(const ImageBuffer& img, double degrees,
                   std::uint8_t fill = 0);

}  // namespace kstone

#endif  // KSTONE_IMAGE_HPP_
