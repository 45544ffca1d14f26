#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "polyp/image.hpp"

namespace polyp {

// Plane of doubles with the green channel of an image. Most texture
// statistics below work on this.
inline std::vector<double> green_plane(const Image& img) {
  std::vector<double> g(static_cast<std::size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      g[static_cast<std::size_t>(y) * img.width + x] = img.at(x, y, 1);
  return g;
}

// Box mean with clamped windows, O(1) per pixel via a summed-area table.
// Window is (2r+1) square, clipped at the borders and renormalized.
inline std::vector<double> box_mean(const std::vector<double>& v, int w, int h, int r) {
  if (r < 1) throw std::invalid_argument("box radius must be positive");
  std::vector<double> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      row += v[static_cast<std::size_t>(y) * w + x];
      sat[static_cast<std::size_t>(y + 1) * (w + 1) + (x + 1)] =
          sat[static_cast<std::size_t>(y) * (w + 1) + (x + 1)] + row;
    }
  }
  auto rect = [&](int x0, int y0, int x1, int y1) {
    // inclusive-exclusive rectangle sum
    return sat[static_cast<std::size_t>(y1) * (w + 1) + x1] -
           sat[static_cast<std::size_t>(y0) * (w + 1) + x1] -
           sat[static_cast<std::size_t>(y1) * (w + 1) + x0] +
           sat[static_cast<std::size_t>(y0) * (w + 1) + x0];
  };
  std::vector<double> out(v.size());
  for (int y = 0; y < h; ++y) {
    int y0 = std::max(0, y - r), y1 = std::min(h, y + r + 1);
    for (int x = 0; x < w; ++x) {
      int x0 = std::max(0, x - r), x1 = std::min(w, x + r + 1);
      out[static_cast<std::size_t>(y) * w + x] =
          rect(x0, y0, x1, y1) / (static_cast<double>(x1 - x0) * (y1 - y0));
    }
  }
  return out;
}

// Mean squared high-pass residual (value minus wide box mean) over a window.
// Long-wavelength structure cancels, short-wavelength structure survives.
inline double high_pass_energy(const std::vector<double>& v, int w, int h, int x0, int y0,
                               int win, int box_radius = 8) {
  if (x0 < 0 || y0 < 0 || win < 1 || x0 + win > w || y0 + win > h)
    throw std::invalid_argument("high-pass window out of bounds");
  auto low = box_mean(v, w, h, box_radius);
  double acc = 0.0;
  for (int y = y0; y < y0 + win; ++y) {
    for (int x = x0; x < x0 + win; ++x) {
      double d = v[static_cast<std::size_t>(y) * w + x] -
                 low[static_cast<std::size_t>(y) * w + x];
      acc += d * d;
    }
  }
  return acc / (static_cast<double>(win) * win);
}

// Ratio of short-wavelength energy away from the image center to the energy
// at the center. Physically large fields carry their texture in an annulus
// around a quiet middle, so the ratio is large for them and near one for
// small fields, whose content is statistically uniform across the frame.
inline double ring_ratio(const Image& img) {
  if (img.width != img.height || img.width < 64)
    throw std::invalid_argument("ring ratio expects a square image, side >= 64");
  int side = img.width;
  auto g = green_plane(img);
  auto scaled = [&](int v224) {
    return static_cast<int>(std::floor(static_cast<double>(v224) * side / 224.0 + 0.5));
  };
  int half = scaled(12), off = scaled(72), c = side / 2;
  int win = 2 * half;
  double center = high_pass_energy(g, side, side, c - half, c - half, win);
  double ann = 0.0;
  ann += high_pass_energy(g, side, side, c - off - half, c - half, win);
  ann += high_pass_energy(g, side, side, c + off - half, c - half, win);
  ann += high_pass_energy(g, side, side, c - half, c - off - half, win);
  ann += high_pass_energy(g, side, side, c - half, c + off - half, win);
  ann /= 4.0;
  return (ann + 1.0) / (center + 1.0);
}

// Mean absolute horizontal step of the green channel. A pixel-period comb
// along x drives this up; smooth texture leaves it near the noise floor.
inline double horizontal_step_mean(const Image& img) {
  if (img.width < 2) throw std::invalid_argument("image too narrow");
  double acc = 0.0;
  long n = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x + 1 < img.width; ++x) {
      acc += std::abs(static_cast<double>(img.at(x + 1, y, 1)) - img.at(x, y, 1));
      ++n;
    }
  }
  return acc / static_cast<double>(n);
}

// Energy-weighted mean of cos^2 between the local gradient and the radial
// direction from the image center, on a 2x box-reduced copy. Concentric
// texture scores near 1, radial texture near 0, straight texture near 0.5.
// Returns -1 when there is no usable gradient energy.
inline double gradient_alignment(const Image& img) {
  if (img.width != img.height || img.width < 32)
    throw std::invalid_argument("gradient alignment expects a square image, side >= 32");
  int side = img.width / 2;
  auto g = green_plane(img);
  std::vector<double> half(static_cast<std::size_t>(side) * side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      half[static_cast<std::size_t>(y) * side + x] =
          (g[static_cast<std::size_t>(2 * y) * img.width + 2 * x] +
           g[static_cast<std::size_t>(2 * y) * img.width + 2 * x + 1] +
           g[static_cast<std::size_t>(2 * y + 1) * img.width + 2 * x] +
           g[static_cast<std::size_t>(2 * y + 1) * img.width + 2 * x + 1]) /
          4.0;
  double cx = (side - 1) / 2.0, cy = (side - 1) / 2.0;
  double num = 0.0, den = 0.0;
  for (int y = 1; y + 1 < side; ++y) {
    for (int x = 1; x + 1 < side; ++x) {
      double gx = (half[static_cast<std::size_t>(y) * side + x + 1] -
                   half[static_cast<std::size_t>(y) * side + x - 1]) /
                  2.0;
      double gy = (half[static_cast<std::size_t>(y + 1) * side + x] -
                   half[static_cast<std::size_t>(y - 1) * side + x]) /
                  2.0;
      double e = gx * gx + gy * gy;
      if (e == 0.0) continue;
      double rx = x - cx, ry = y - cy;
      double rr = rx * rx + ry * ry;
      if (rr == 0.0) continue;
      double dot = gx * rx + gy * ry;
      num += dot * dot / rr;
      den += e;
    }
  }
  if (den < 1e-9) return -1.0;
  return num / den;
}

struct DarkStats {
  long dark = 0;      // pixels strictly below the threshold
  long interior = 0;  // dark pixels whose 4-neighbors are all dark
};

// Counts of dark pixels in the green channel. Interior pixels distinguish
// compact dark blobs (which have them) from scattered dark singles.
inline DarkStats dark_stats(const Image& img, int threshold = 65) {
  DarkStats s;
  auto dark = [&](int x, int y) { return img.at(x, y, 1) < threshold; };
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!dark(x, y)) continue;
      s.dark++;
      if (x > 0 && x + 1 < img.width && y > 0 && y + 1 < img.height && dark(x - 1, y) &&
          dark(x + 1, y) && dark(x, y - 1) && dark(x, y + 1))
        s.interior++;
    }
  }
  return s;
}

}  // namespace polyp
