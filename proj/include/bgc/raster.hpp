#pragma once

// Procedural drawing primitives shared by the feature templates and the
// synthetic world generator. Coordinates are normalized: (0,0) is the top-left
// corner of the image, (1,1) the bottom-right; pixel (x, y) samples its centre.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bgc/rng.hpp"

namespace bgc {

/// Single-channel image with values nominally in [0, 1].
struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;  // row-major

  GrayImage() = default;
  GrayImage(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), pixels(h * w, fill) {}

  double& operator()(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  double operator()(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
};

enum class Shape : std::uint8_t { Disk, Square, Cross, Ring, Triangle, Diamond, HBar, VBar };

inline constexpr int kShapeCount = 8;

inline const char* shape_name(Shape s) {
  switch (s) {
    case Shape::Disk: return "disk";
    case Shape::Square: return "square";
    case Shape::Cross: return "cross";
    case Shape::Ring: return "ring";
    case Shape::Triangle: return "triangle";
    case Shape::Diamond: return "diamond";
    case Shape::HBar: return "hbar";
    case Shape::VBar: return "vbar";
  }
  return "?";
}

/// Membership test for a shape of radius r centred at (cx, cy).
inline bool inside_shape(Shape s, double u, double v, double cx, double cy, double r) {
  const double dx = u - cx;
  const double dy = v - cy;
  const double ax = std::abs(dx);
  const double ay = std::abs(dy);
  switch (s) {
    case Shape::Disk: return dx * dx + dy * dy <= r * r;
    case Shape::Square: return ax <= 0.8 * r && ay <= 0.8 * r;
    case Shape::Cross:
      return (ax <= 0.3 * r && ay <= r) || (ay <= 0.3 * r && ax <= r);
    case Shape::Ring: {
      const double d2 = dx * dx + dy * dy;
      return d2 <= r * r && d2 >= 0.36 * r * r;
    }
    case Shape::Triangle:
      // Upward isosceles triangle inscribed in the r-box.
      return dy <= r && dy >= -r && ax <= 0.5 * (dy + r);
    case Shape::Diamond: return ax + ay <= r;
    case Shape::HBar: return ax <= r && ay <= 0.3 * r;
    case Shape::VBar: return ay <= r && ax <= 0.3 * r;
  }
  return false;
}

/// Paint `value` wherever the shape covers a pixel centre.
inline void draw_shape(GrayImage& img, Shape s, double cx, double cy, double r,
                       double value) {
  for (std::size_t y = 0; y < img.height; ++y) {
    const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(img.height);
    for (std::size_t x = 0; x < img.width; ++x) {
      const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(img.width);
      if (inside_shape(s, u, v, cx, cy, r)) img(y, x) = value;
    }
  }
}

/// Paint a texture (values taken from `tex`) inside the shape.
inline void draw_textured_shape(GrayImage& img, Shape s, double cx, double cy, double r,
                                const GrayImage& tex) {
  for (std::size_t y = 0; y < img.height; ++y) {
    const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(img.height);
    for (std::size_t x = 0; x < img.width; ++x) {
      const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(img.width);
      if (inside_shape(s, u, v, cx, cy, r)) img(y, x) = tex(y, x);
    }
  }
}

/// Smooth value noise summed over octaves, normalized to [0, 1].
/// `cells` is the lattice resolution of the coarsest octave.
inline GrayImage value_noise(std::size_t h, std::size_t w, std::uint64_t seed, int cells,
                             int octaves, double persistence = 0.5) {
  GrayImage out(h, w, 0.0);
  double amp = 1.0;
  SplitMix64 rng(seed);
  for (int o = 0; o < octaves; ++o) {
    const int n = cells << o;
    std::vector<double> lattice(static_cast<std::size_t>((n + 1) * (n + 1)));
    for (auto& l : lattice) l = rng.uniform();
    for (std::size_t y = 0; y < h; ++y) {
      const double fy = (static_cast<double>(y) + 0.5) / static_cast<double>(h) * n;
      const int iy = std::min(static_cast<int>(fy), n - 1);
      const double ty = fy - iy;
      const double sy = ty * ty * (3 - 2 * ty);
      for (std::size_t x = 0; x < w; ++x) {
        const double fx = (static_cast<double>(x) + 0.5) / static_cast<double>(w) * n;
        const int ix = std::min(static_cast<int>(fx), n - 1);
        const double tx = fx - ix;
        const double sx = tx * tx * (3 - 2 * tx);
        auto L = [&](int a, int b) {
          return lattice[static_cast<std::size_t>(b * (n + 1) + a)];
        };
        const double top = L(ix, iy) * (1 - sx) + L(ix + 1, iy) * sx;
        const double bot = L(ix, iy + 1) * (1 - sx) + L(ix + 1, iy + 1) * sx;
        out(y, x) += amp * (top * (1 - sy) + bot * sy);
      }
    }
    amp *= persistence;
  }
  double lo = out.pixels[0];
  double hi = out.pixels[0];
  for (double p : out.pixels) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  const double span = hi - lo;
  for (double& p : out.pixels) p = span > 0 ? (p - lo) / span : 0.0;
  return out;
}

}  // namespace bgc
