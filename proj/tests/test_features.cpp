#include <catch_amalgamated.hpp>

#include <numeric>

#include "bgc/features.hpp"

using namespace bgc;
using Catch::Approx;

TEST_CASE("spatial pooling averages every channel over the plane") {
  // 2 x 3 x 2 map, channel 0 = p, channel 1 = 10 p.
  std::vector<double> v;
  for (int p = 0; p < 6; ++p) {
    v.push_back(p);
    v.push_back(10.0 * p);
  }
  const auto pooled = pool_spatial(Tensor({2, 3, 2}, v));
  REQUIRE(pooled.size() == 2);
  CHECK(pooled[0] == Approx(2.5));
  CHECK(pooled[1] == Approx(25.0));
  CHECK_THROWS_AS(pool_spatial(Tensor({6, 2}, v)), ShapeError);
}

TEST_CASE("colour images are averaged to gray and range-checked") {
  const auto g = to_gray(Tensor({1, 2, 3}, std::vector<double>{0.3, 0.6, 0.9, 0, 0, 0.3}));
  CHECK(g.pixels[0] == Approx(0.6));
  CHECK(g.pixels[1] == Approx(0.1));
  CHECK_THROWS_AS(to_gray(Tensor({1, 1, 2}, std::vector<double>{0.1, 0.2})), ShapeError);
  CHECK_THROWS_AS(to_gray(Tensor({1, 1}, std::vector<double>{1.5})), InputError);
}

TEST_CASE("black image: first intensity bin, all-zero patch code, no edges or templates") {
  const FeatureBank bank(16, 16);
  const auto f = bank.extract(GrayImage(16, 16, 0.0));
  REQUIRE(f.size() == kFeatureCount);
  CHECK(f[kIntensityOffset] == 1.0);
  CHECK(f[kPatchOffset] == 1.0);
  for (std::size_t k = kEdgeOffset; k < kEdgeOffset + kEdgeBins; ++k) CHECK(f[k] == 0.0);
  for (std::size_t k = kTemplateOffset; k < kFeatureCount; ++k) CHECK(f[k] == 0.0);
}

TEST_CASE("histogram groups are normalized") {
  const FeatureBank bank(16, 16);
  GrayImage img(16, 16);
  for (std::size_t p = 0; p < img.pixels.size(); ++p) img.pixels[p] = (p * 37 % 101) / 100.0;
  const auto f = bank.extract(img);
  auto group = [&](std::size_t off, std::size_t n) {
    return std::accumulate(f.begin() + static_cast<long>(off), f.begin() + static_cast<long>(off + n), 0.0);
  };
  CHECK(group(kIntensityOffset, kIntensityBins) == Approx(1.0));
  CHECK(group(kEdgeOffset, kEdgeBins) == Approx(1.0));
  CHECK(group(kPatchOffset, kPatchBins) == Approx(1.0));
  for (double v : f) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 + 1e-12);
  }
}

TEST_CASE("a vertical step edge lands in orientation bin 0") {
  const FeatureBank bank(16, 16);
  GrayImage img(16, 16);
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 8; x < 16; ++x) img(y, x) = 1.0;
  const auto f = bank.extract(img);
  CHECK(f[kEdgeOffset] == Approx(1.0));
  // Half the pixels are on; in 2x2 patches those are all-on codes.
  CHECK(f[kPatchOffset + 15] == Approx(0.5));
  CHECK(f[kIntensityOffset + kIntensityBins - 1] == Approx(0.5));
}

TEST_CASE("an image equal to a template correlates perfectly with it") {
  const FeatureBank bank(32, 32);
  const auto& templates = bank.templates();
  REQUIRE(templates.size() == kTemplateCount);
  for (std::size_t k : {std::size_t{0}, std::size_t{4}, std::size_t{18}, std::size_t{21}}) {
    const auto f = bank.extract(templates[k].image);
    CHECK(f[kTemplateOffset + k] == Approx(1.0));
  }
  // An inverted template has correlation -1, clamped to 0.
  GrayImage inv = templates[0].image;
  for (double& p : inv.pixels) p = 1.0 - p;
  CHECK(bank.extract(inv)[kTemplateOffset] == 0.0);
}

TEST_CASE("windowed correlation is computed over the template window only") {
  FeatureTemplate t{"half", GrayImage(4, 4), 0, 0, 2, 4};
  t.image(1, 0) = 1.0;
  GrayImage img(4, 4);
  img(1, 0) = 1.0;
  img(3, 3) = 0.7;  // outside the window
  CHECK(windowed_ncc(img, t) == Approx(1.0));
  CHECK(windowed_ncc(GrayImage(4, 4, 0.5), t) == 0.0);
}

TEST_CASE("extraction is deterministic and checks its input") {
  const FeatureBank bank(16, 16);
  GrayImage img(16, 16);
  for (std::size_t p = 0; p < img.pixels.size(); ++p) img.pixels[p] = (p % 13) / 12.0;
  CHECK(bank.extract(img) == bank.extract(img));
  CHECK(extract_features(to_tensor(img)) == bank.extract(img));
  CHECK_THROWS_AS(bank.extract(GrayImage(8, 8)), ShapeError);
  img.pixels[3] = -0.1;
  CHECK_THROWS_AS(bank.extract(img), InputError);
}
