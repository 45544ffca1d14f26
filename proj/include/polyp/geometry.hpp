#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "polyp/image.hpp"

// Physical-scale geometry. Every conversion from micrometers to pixels goes
// through scale_to_pixels so the rounding convention (round half up) is fixed
// in exactly one place.

namespace polyp {

struct ScaleSpec {
  double scale_um = 0.0;  // physical patch side
  double mpp = 0.0;       // micrometers per pixel
};

inline int scale_to_pixels(double scale_um, double mpp) {
  if (!(scale_um > 0.0)) throw std::invalid_argument("scale_um must be positive");
  if (!(mpp > 0.0)) throw std::invalid_argument("mpp must be positive");
  double side = std::floor(scale_um / mpp + 0.5);
  if (side < 1.0) throw std::invalid_argument("scale_um is smaller than half a pixel");
  return static_cast<int>(side);
}

inline int scale_to_pixels(const ScaleSpec& spec) {
  return scale_to_pixels(spec.scale_um, spec.mpp);
}

struct TileOrigin {
  long x = 0;
  long y = 0;
};

// (0,0)-anchored grid with stride == tile_side; right/bottom remainders are
// discarded. Origins are stored row-major (y outer, x inner).
struct TileGrid {
  int tile_side = 0;
  long cols = 0;
  long rows = 0;
  std::vector<TileOrigin> origins;

  std::size_t count() const { return origins.size(); }
};

inline TileGrid tile_grid(long width, long height, int tile_side) {
  if (tile_side <= 0) throw std::invalid_argument("tile_side must be positive");
  if (width < 0 || height < 0) throw std::invalid_argument("image dimensions must be non-negative");
  TileGrid grid;
  grid.tile_side = tile_side;
  grid.cols = width / tile_side;
  grid.rows = height / tile_side;
  grid.origins.reserve(static_cast<std::size_t>(grid.cols) * grid.rows);
  for (long r = 0; r < grid.rows; ++r)
    for (long c = 0; c < grid.cols; ++c)
      grid.origins.push_back({c * tile_side, r * tile_side});
  return grid;
}

inline Image crop(const Image& parent, long x, long y, int side) {
  if (side <= 0) throw std::invalid_argument("crop side must be positive");
  if (x < 0 || y < 0 || x + side > parent.width || y + side > parent.height)
    throw std::invalid_argument("crop window extends outside the parent image");
  Image out(side, side);
  for (int r = 0; r < side; ++r) {
    const std::uint8_t* src = parent.row(static_cast<int>(y) + r) + x * 3;
    std::uint8_t* dst = out.row(r);
    std::copy(src, src + static_cast<std::size_t>(side) * 3, dst);
  }
  return out;
}

namespace detail {

struct Tap {
  int index;
  double weight;
};

// Per-output-pixel coverage of input pixels for exact area averaging.
inline std::vector<std::vector<Tap>> area_taps(int in, int out) {
  std::vector<std::vector<Tap>> taps(out);
  double scale = static_cast<double>(in) / out;
  for (int j = 0; j < out; ++j) {
    double lo = j * scale;
    double hi = (j + 1) * scale;
    if (hi > in) hi = in;
    int first = static_cast<int>(std::floor(lo));
    for (int i = first; i < in && i < hi; ++i) {
      double w = std::min<double>(hi, i + 1) - std::max<double>(lo, i);
      if (w > 0.0) taps[j].push_back({i, w});
    }
  }
  return taps;
}

}  // namespace detail

// Area-averaging resample. Weights are normalized per output pixel, so
// constant images stay exactly constant and equal sizes are a bit-exact copy.
inline Image resample_area(const Image& img, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0) throw std::invalid_argument("resample target must be positive");
  if (img.width == 0 || img.height == 0) throw std::invalid_argument("cannot resample an empty image");
  if (img.width == out_w && img.height == out_h) return img;

  auto htaps = detail::area_taps(img.width, out_w);
  auto vtaps = detail::area_taps(img.height, out_h);

  // horizontal pass
  std::vector<double> tmp(static_cast<std::size_t>(img.height) * out_w * 3);
  for (int y = 0; y < img.height; ++y) {
    const std::uint8_t* src = img.row(y);
    double* dst = tmp.data() + static_cast<std::size_t>(y) * out_w * 3;
    for (int j = 0; j < out_w; ++j) {
      double acc[3] = {0.0, 0.0, 0.0};
      double wsum = 0.0;
      for (const auto& t : htaps[j]) {
        const std::uint8_t* p = src + static_cast<std::size_t>(t.index) * 3;
        acc[0] += t.weight * p[0];
        acc[1] += t.weight * p[1];
        acc[2] += t.weight * p[2];
        wsum += t.weight;
      }
      dst[j * 3 + 0] = acc[0] / wsum;
      dst[j * 3 + 1] = acc[1] / wsum;
      dst[j * 3 + 2] = acc[2] / wsum;
    }
  }

  // vertical pass
  Image out(out_w, out_h);
  for (int j = 0; j < out_h; ++j) {
    std::uint8_t* dst = out.row(j);
    for (int x = 0; x < out_w; ++x) {
      double acc[3] = {0.0, 0.0, 0.0};
      double wsum = 0.0;
      for (const auto& t : vtaps[j]) {
        const double* p = tmp.data() + (static_cast<std::size_t>(t.index) * out_w + x) * 3;
        acc[0] += t.weight * p[0];
        acc[1] += t.weight * p[1];
        acc[2] += t.weight * p[2];
        wsum += t.weight;
      }
      for (int c = 0; c < 3; ++c) {
        double v = std::floor(acc[c] / wsum + 0.5);
        if (v < 0.0) v = 0.0;
        if (v > 255.0) v = 255.0;
        dst[x * 3 + c] = static_cast<std::uint8_t>(v);
      }
    }
  }
  return out;
}

inline Image downsample(const Image& img, int target_side = 224) {
  if (img.width != img.height)
    throw std::invalid_argument("downsample expects a square input");
  return resample_area(img, target_side, target_side);
}

}  // namespace polyp
