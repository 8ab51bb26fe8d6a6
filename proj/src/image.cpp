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

#include "kstone/image.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "kstone/errors.hpp"

namespace kstone {

namespace {

float snap(float v) { return std::round(v * BoxXYXY::kGrid) / BoxXYXY::kGrid; }

std::uint8_t to_u8(double v) {
  v = std::clamp(v, 0.0, 255.0);
  return static_cast<std::uint8_t>(v + 0.5);
}

// Source coordinate and blend weight for one output index under half-pixel
// centre alignment.
struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> make_taps(int src, int dst) {
  std::vector<Tap> taps(dst);
  const double ratio = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double s = (i + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const int lo = static_cast<int>(std::floor(s));
    taps[i] = {lo, std::min(lo + 1, src - 1), s - lo};
  }
  return taps;
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("image dimensions must be >= 1, got " +
                                std::to_string(width) + "x" +
                                std::to_string(height));
  }
  data_.assign(static_cast<std::size_t>(width) * height * kChannels, fill);
}

ImageBuffer::ImageBuffer(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("image dimensions must be >= 1");
  }
  if (data_.size() != static_cast<std::size_t>(width) * height * kChannels) {
    throw std::invalid_argument("image data length does not match " +
                                std::to_string(width) + "x" +
                                std::to_string(height) + "x3");
  }
}

BoxXYXY BoxXYXY::canonical() const {
  BoxXYXY b;
  b.x1 = snap(std::min(x1, x2));
  b.x2 = snap(std::max(x1, x2));
  b.y1 = snap(std::min(y1, y2));
  b.y2 = snap(std::max(y1, y2));
  b.confidence = std::clamp(confidence, 0.f, 1.f);
  return b;
}

float BoxXYXY::area() const {
  return std::max(0.f, width()) * std::max(0.f, height());
}

LetterboxMap LetterboxMap::fit(int src_w, int src_h, int dst_w, int dst_h) {
  LetterboxMap m;
  m.src_w = src_w;
  m.src_h = src_h;
  m.dst_w = dst_w;
  m.dst_h = dst_h;
  m.scale = std::min(static_cast<float>(dst_w) / src_w,
                     static_cast<float>(dst_h) / src_h);
  m.pad_x = (dst_w - m.scale * src_w) / 2.f;
  m.pad_y = (dst_h - m.scale * src_h) / 2.f;
  return m;
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int width, int height) {
  if (width == img.width() && height == img.height()) return img;
  ImageBuffer out(width, height);
  const auto xs = make_taps(img.width(), width);
  const auto ys = make_taps(img.height(), height);
  for (int y = 0; y < height; ++y) {
    const Tap& ty = ys[y];
    for (int x = 0; x < width; ++x) {
      const Tap& tx = xs[x];
      for (int c = 0; c < ImageBuffer::kChannels; ++c) {
        const double top = img.at(tx.lo, ty.lo, c) * (1.0 - tx.frac) +
                           img.at(tx.hi, ty.lo, c) * tx.frac;
        const double bottom = img.at(tx.lo, ty.hi, c) * (1.0 - tx.frac) +
                              img.at(tx.hi, ty.hi, c) * tx.frac;
        out.at(x, y, c) = to_u8(top * (1.0 - ty.frac) + bottom * ty.frac);
      }
    }
  }
  return out;
}

Letterboxed letterbox(const ImageBuffer& img, int dst, std::uint8_t fill) {
  if (dst < 1) throw std::invalid_argument("letterbox side must be >= 1");
  const LetterboxMap map = LetterboxMap::fit(img.width(), img.height(), dst, dst);
  const int new_w = std::clamp(
      static_cast<int>(std::lround(img.width() * map.scale)), 1, dst);
  const int new_h = std::clamp(
      static_cast<int>(std::lround(img.height() * map.scale)), 1, dst);
  if (new_w == dst && new_h == dst) {
    return {resize_bilinear(img, dst, dst), map};
  }
  const ImageBuffer resized = resize_bilinear(img, new_w, new_h);
  ImageBuffer out(dst, dst, fill);
  const int left = (dst - new_w) / 2;
  const int top = (dst - new_h) / 2;
  for (int y = 0; y < new_h; ++y) {
    const auto src_row = resized.data().subspan(
        static_cast<std::size_t>(y) * new_w * 3, static_cast<std::size_t>(new_w) * 3);
    std::copy(src_row.begin(), src_row.end(),
              out.data().begin() +
                  ((static_cast<std::ptrdiff_t>(top + y) * dst + left) * 3));
  }
  return {std::move(out), map};
}

BoxXYXY map_box(const BoxXYXY& box, const LetterboxMap& map) {
  return {box.x1 * map.scale + map.pad_x, box.y1 * map.scale + map.pad_y,
          box.x2 * map.scale + map.pad_x, box.y2 * map.scale + map.pad_y,
          box.confidence};
}

BoxXYXY unmap_box(const BoxXYXY& box, const LetterboxMap& map) {
  const float w = static_cast<float>(map.src_w);
  const float h = static_cast<float>(map.src_h);
  BoxXYXY out{std::clamp((box.x1 - map.pad_x) / map.scale, 0.f, w),
              std::clamp((box.y1 - map.pad_y) / map.scale, 0.f, h),
              std::clamp((box.x2 - map.pad_x) / map.scale, 0.f, w),
              std::clamp((box.y2 - map.pad_y) / map.scale, 0.f, h),
              box.confidence};
  out = out.canonical();
  if (!(out.width() >= 1.f) || !(out.height() >= 1.f)) {
    throw DegenerateBox("box collapses to less than one pixel after clamping");
  }
  return out;
}

BoxXYXY mirror_box(const BoxXYXY& box, int image_width) {
  const BoxXYXY c = box.canonical();
  const float w = static_cast<float>(image_width);
  return BoxXYXY{w - c.x2, c.y1, w - c.x1, c.y2, c.confidence}.canonical();
}

ImageBuffer crop(const ImageBuffer& img, const BoxXYXY& box) {
  const double x0 = std::max(0.0, std::floor(static_cast<double>(box.x1)));
  const double y0 = std::max(0.0, std::floor(static_cast<double>(box.y1)));
  const double x1 = std::min<double>(img.width(), std::ceil(box.x2));
  const double y1 = std::min<double>(img.height(), std::ceil(box.y2));
  if (!(x0 < x1) || !(y0 < y1)) {
    throw EmptyCrop("crop rectangle does not intersect the image");
  }
  const int left = static_cast<int>(x0);
  const int top = static_cast<int>(y0);
  const int w = static_cast<int>(x1) - left;
  const int h = static_cast<int>(y1) - top;
  ImageBuffer out(w, h);
  for (int y = 0; y < h; ++y) {
    const auto row = img.data().subspan(
        (static_cast<std::size_t>(top + y) * img.width() + left) * 3,
        static_cast<std::size_t>(w) * 3);
    std::copy(row.begin(), row.end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(y) * w * 3);
  }
  return out;
}

NormalizedTensor to_tensor(const ImageBuffer& img, const ChannelStats& stats) {
  NormalizedTensor t;
  t.height = img.height();
  t.width = img.width();
  const std::size_t plane = static_cast<std::size_t>(t.height) * t.width;
  t.values.resize(plane * 3);
  const auto px = img.data();
  for (int c = 0; c < 3; ++c) {
    const double mean = stats.mean[c];
    const double sd = stats.std[c];
    float* dst = t.values.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      dst[i] = static_cast<float>((px[i * 3 + c] / 255.0 - mean) / sd);
    }
  }
  return t;
}

NormalizedTensor normalize(const ImageBuffer& img, int size,
                           const ChannelStats& stats) {
  if (size < 1) throw std::invalid_argument("normalize size must be >= 1");
  return to_tensor(resize_bilinear(img, size, size), stats);
}

ImageBuffer flip_horizontal(const ImageBuffer& img) {
  ImageBuffer out(img.width(), img.height());
  const int w = img.width();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) out.at(w - 1 - x, y, c) = img.at(x, y, c);
    }
  }
  return out;
}

ImageBuffer rotate(const ImageBuffer& img, double degrees, std::uint8_t fill) {
  const int w = img.width();
  const int h = img.height();
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad);
  const double sn = std::sin(rad);
  const double cx = (w - 1) / 2.0;
  const double cy = (h - 1) / 2.0;
  ImageBuffer out(w, h, fill);

  auto sample = [&](int x, int y, int c) -> double {
    if (x < 0 || y < 0 || x >= w || y >= h) return fill;
    return img.at(x, y, c);
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Inverse map: y grows downward, so a visually counter-clockwise
      // rotation samples the source at R(-angle).
      const double dx = x - cx;
      const double dy = y - cy;
      const double sx = cs * dx - sn * dy + cx;
      const double sy = sn * dx + cs * dy + cy;
      if (sx <= -1.0 || sy <= -1.0 || sx >= w || sy >= h) continue;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0;
      const double fy = sy - y0;
      for (int c = 0; c < 3; ++c) {
        const double top = sample(x0, y0, c) * (1 - fx) + sample(x0 + 1, y0, c) * fx;
        const double bot =
            sample(x0, y0 + 1, c) * (1 - fx) + sample(x0 + 1, y0 + 1, c) * fx;
        out.at(x, y, c) = to_u8(top * (1 - fy) + bot * fy);
      }
    }
  }
  return out;
}

}  // namespace kstone
