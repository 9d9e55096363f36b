#pragma once

// Spatial pooling of feature maps and a deterministic handcrafted attribute
// bank that maps an image to a 64-channel activation vector.
//
// Channel layout:
//   [ 0, 16)  intensity histogram, 16 equal-width bins over [0, 1]
//   [16, 24)  edge-orientation histogram, 8 bins, magnitude weighted,
//             bin 0 centred on horizontal gradients (vertical edges)
//   [24, 40)  2x2 patch-code histogram after binarization at 0.5
//   [40, 64)  normalized cross-correlation with 24 procedural templates,
//             negative correlations clamped to 0

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "bgc/error.hpp"
#include "bgc/raster.hpp"
#include "bgc/tensor.hpp"

namespace bgc {

inline constexpr std::size_t kFeatureCount = 64;
inline constexpr std::size_t kIntensityOffset = 0;
inline constexpr std::size_t kIntensityBins = 16;
inline constexpr std::size_t kEdgeOffset = 16;
inline constexpr std::size_t kEdgeBins = 8;
inline constexpr std::size_t kPatchOffset = 24;
inline constexpr std::size_t kPatchBins = 16;
inline constexpr std::size_t kTemplateOffset = 40;
inline constexpr std::size_t kTemplateCount = 24;

/// Mean over the H x W plane for each channel of an H x W x d map.
inline std::vector<double> pool_spatial(const Tensor& map) {
  if (map.rank() != 3)
    throw ShapeError("pool_spatial expects a rank-3 H x W x d tensor, got rank " +
                     std::to_string(map.rank()));
  const std::size_t h = map.dim(0), w = map.dim(1), d = map.dim(2);
  std::vector<double> out(d, 0.0);
  for (std::size_t p = 0; p < h * w; ++p)
    for (std::size_t k = 0; k < d; ++k) out[k] += map.at(p * d + k);
  const double n = static_cast<double>(h * w);
  for (double& v : out) v /= n;
  return out;
}

/// Grayscale view of an H x W or H x W x {1,3} tensor. Colour images are
/// averaged as (r + g + b) / 3.
inline GrayImage to_gray(const Tensor& image) {
  std::size_t channels = 1;
  if (image.rank() == 3) {
    channels = image.dim(2);
    if (channels != 1 && channels != 3)
      throw ShapeError("image channel count must be 1 or 3, got " +
                       std::to_string(channels));
  } else if (image.rank() != 2) {
    throw ShapeError("image must be rank 2 (H x W) or rank 3 (H x W x C)");
  }
  GrayImage g(image.dim(0), image.dim(1));
  for (std::size_t p = 0; p < g.pixels.size(); ++p) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = image.at(p * channels + c);
      if (!(v >= 0.0 && v <= 1.0))
        throw InputError("pixel value " + std::to_string(v) + " outside [0,1] at index " +
                         std::to_string(p * channels + c));
      acc += v;
    }
    g.pixels[p] = channels == 3 ? acc / 3.0 : acc;
  }
  return g;
}

/// Procedural template with the rectangular window its correlation uses.
struct FeatureTemplate {
  std::string name;
  GrayImage image;
  std::size_t y0 = 0, x0 = 0, y1 = 0, x1 = 0;  // half-open window
};

/// Quadrant centres used by the small-object templates and the world layout.
inline constexpr std::array<std::array<double, 2>, 4> kQuadrantCentres{
    {{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}}};
inline constexpr double kLargeRadius = 0.32;
inline constexpr double kSmallRadius = 0.17;
inline constexpr std::array<Shape, 6> kLargeShapes{Shape::Disk, Shape::Square,
                                                   Shape::HBar, Shape::VBar,
                                                   Shape::Ring, Shape::Triangle};
inline constexpr std::array<Shape, 3> kSmallShapes{Shape::Disk, Shape::Square,
                                                   Shape::Triangle};
inline constexpr std::uint64_t kIconSeedBase = 0x1C0A5EEDULL;
inline constexpr std::size_t kIconCount = 3;

/// Signature pattern of icon k: dense multi-octave value noise.
inline GrayImage icon_pattern(std::size_t k, std::size_t h, std::size_t w) {
  return value_noise(h, w, kIconSeedBase + 7919 * k, 4, 3, 0.7);
}

/// Periodic texture k in [0, 3): vertical stripes, checker, diagonal stripes.
inline GrayImage texture_pattern(std::size_t k, std::size_t h, std::size_t w, double lo,
                                 double hi) {
  GrayImage out(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      bool on = false;
      switch (k % 3) {
        case 0: on = (x / 2) % 2 == 0; break;
        case 1: on = ((x / 2) + (y / 2)) % 2 == 0; break;
        case 2: on = ((x + y) / 2) % 2 == 0; break;
      }
      out(y, x) = on ? hi : lo;
    }
  return out;
}

inline std::vector<FeatureTemplate> make_templates(std::size_t h, std::size_t w) {
  std::vector<FeatureTemplate> out;
  out.reserve(kTemplateCount);
  for (Shape s : kLargeShapes) {
    FeatureTemplate t{std::string("large_") + shape_name(s), GrayImage(h, w), 0, 0, h, w};
    draw_shape(t.image, s, 0.5, 0.5, kLargeRadius, 1.0);
    out.push_back(std::move(t));
  }
  for (Shape s : kSmallShapes) {
    for (std::size_t q = 0; q < 4; ++q) {
      FeatureTemplate t{std::string("small_") + shape_name(s) + "_q" + std::to_string(q),
                        GrayImage(h, w), (q / 2) * h / 2, (q % 2) * w / 2,
                        (q / 2 + 1) * h / 2, (q % 2 + 1) * w / 2};
      draw_shape(t.image, s, kQuadrantCentres[q][0], kQuadrantCentres[q][1], kSmallRadius,
                 1.0);
      out.push_back(std::move(t));
    }
  }
  for (std::size_t k = 0; k < kIconCount; ++k)
    out.push_back({"icon_" + std::to_string(k), icon_pattern(k, h, w), 0, 0, h, w});
  for (std::size_t k = 0; k < 3; ++k)
    out.push_back({"texture_" + std::to_string(k), texture_pattern(k, h, w, 0.0, 1.0), 0,
                   0, h, w});
  return out;
}

/// Pearson correlation of image and template over the template window,
/// 0 when either side is constant there.
inline double windowed_ncc(const GrayImage& img, const FeatureTemplate& t) {
  const double n = static_cast<double>((t.y1 - t.y0) * (t.x1 - t.x0));
  if (n == 0) return 0.0;
  double si = 0, st = 0;
  for (std::size_t y = t.y0; y < t.y1; ++y)
    for (std::size_t x = t.x0; x < t.x1; ++x) {
      si += img(y, x);
      st += t.image(y, x);
    }
  const double mi = si / n, mt = st / n;
  double cov = 0, vi = 0, vt = 0;
  for (std::size_t y = t.y0; y < t.y1; ++y)
    for (std::size_t x = t.x0; x < t.x1; ++x) {
      const double a = img(y, x) - mi;
      const double b = t.image(y, x) - mt;
      cov += a * b;
      vi += a * a;
      vt += b * b;
    }
  if (vi <= 0 || vt <= 0) return 0.0;
  return cov / std::sqrt(vi * vt);
}

/// The 64-channel handcrafted bank for one image size. Templates are built
/// once at construction; extraction is const and thread-safe.
class FeatureBank {
public:
  FeatureBank(std::size_t height, std::size_t width)
      : height_(height), width_(width), templates_(make_templates(height, width)) {}

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  const std::vector<FeatureTemplate>& templates() const { return templates_; }

  std::vector<double> extract(const GrayImage& img) const {
    if (img.height != height_ || img.width != width_)
      throw ShapeError("image is " + std::to_string(img.height) + "x" +
                       std::to_string(img.width) + " but bank expects " +
                       std::to_string(height_) + "x" + std::to_string(width_));
    for (double v : img.pixels)
      if (!(v >= 0.0 && v <= 1.0))
        throw InputError("pixel value " + std::to_string(v) + " outside [0,1]");

    std::vector<double> f(kFeatureCount, 0.0);
    const std::size_t h = img.height, w = img.width;

    for (double v : img.pixels) {
      const auto bin = std::min<std::size_t>(kIntensityBins - 1,
                                             static_cast<std::size_t>(v * kIntensityBins));
      f[kIntensityOffset + bin] += 1.0;
    }
    for (std::size_t b = 0; b < kIntensityBins; ++b)
      f[kIntensityOffset + b] /= static_cast<double>(h * w);

    double total_mag = 0.0;
    if (h >= 3 && w >= 3) {
      const double bin_width = std::numbers::pi / kEdgeBins;
      for (std::size_t y = 1; y + 1 < h; ++y)
        for (std::size_t x = 1; x + 1 < w; ++x) {
          const double gx = 0.5 * (img(y, x + 1) - img(y, x - 1));
          const double gy = 0.5 * (img(y + 1, x) - img(y - 1, x));
          const double mag = std::hypot(gx, gy);
          if (mag <= 0) continue;
          double theta = std::atan2(gy, gx);
          if (theta < 0) theta += std::numbers::pi;
          auto bin = static_cast<std::size_t>((theta + 0.5 * bin_width) / bin_width) % kEdgeBins;
          f[kEdgeOffset + bin] += mag;
          total_mag += mag;
        }
    }
    if (total_mag > 0)
      for (std::size_t b = 0; b < kEdgeBins; ++b) f[kEdgeOffset + b] /= total_mag;

    std::size_t patches = 0;
    for (std::size_t y = 0; y + 1 < h; y += 2)
      for (std::size_t x = 0; x + 1 < w; x += 2) {
        const unsigned code = (img(y, x) >= 0.5 ? 8u : 0u) | (img(y, x + 1) >= 0.5 ? 4u : 0u) |
                              (img(y + 1, x) >= 0.5 ? 2u : 0u) |
                              (img(y + 1, x + 1) >= 0.5 ? 1u : 0u);
        f[kPatchOffset + code] += 1.0;
        ++patches;
      }
    if (patches > 0)
      for (std::size_t b = 0; b < kPatchBins; ++b)
        f[kPatchOffset + b] /= static_cast<double>(patches);

    for (std::size_t k = 0; k < kTemplateCount; ++k)
      f[kTemplateOffset + k] = std::max(0.0, windowed_ncc(img, templates_[k]));
    return f;
  }

  std::vector<double> extract(const Tensor& image) const { return extract(to_gray(image)); }

private:
  std::size_t height_;
  std::size_t width_;
  std::vector<FeatureTemplate> templates_;
};

/// One-shot extraction; builds the template bank for the image size.
inline std::vector<double> extract_features(const Tensor& image) {
  const GrayImage g = to_gray(image);
  return FeatureBank(g.height, g.width).extract(g);
}

inline Tensor to_tensor(const GrayImage& g) {
  return Tensor({g.height, g.width}, g.pixels);
}

}  // namespace bgc
