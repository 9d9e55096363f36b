#pragma once

// Procedural world of grayscale concepts arranged in five complexity tiers,
// with the generative parameters kept as ground truth and generalization
// benchmarks derived from them.
//
//   tier 1  one white shape on black                       one defining attribute
//   tier 2  two overlaid solid shapes on dark gray         two
//   tier 3  tier-2 shapes on a dimmed icon background      three
//   tier 4  bright icon-filled shape on a dim icon field   two
//   tier 5  full-contrast icon pattern, heavier noise      one
//
// Shapes are drawn from {disk, hbar, vbar}; concept j of a tier uses shape
// j, shape j + 1 and icon j, so attributes are shared across tiers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "bgc/dataset.hpp"
#include "bgc/error.hpp"
#include "bgc/features.hpp"
#include "bgc/generalize.hpp"
#include "bgc/raster.hpp"
#include "bgc/rng.hpp"

namespace bgc {

inline constexpr int kMinTier = 1;
inline constexpr int kMaxTier = 5;
inline constexpr std::size_t kMaxConceptsPerTier = 3;

struct TierSpec {
  int level = 1;
  std::size_t concepts = 3;
  std::size_t images = 200;
  std::size_t height = 32;
  std::size_t width = 32;
};

struct WorldSpec {
  std::vector<TierSpec> tiers;
  std::uint64_t seed = 42;
  double noise_level = 0.1;

  void validate() const {
    if (tiers.empty()) throw SpecError("world needs at least one tier");
    if (!(noise_level >= 0.0 && noise_level <= 0.5))
      throw SpecError("noise_level must lie in [0, 0.5]");
    for (std::size_t t = 0; t < tiers.size(); ++t) {
      const auto& ts = tiers[t];
      const std::string where = "tier " + std::to_string(ts.level);
      if (ts.level < kMinTier || ts.level > kMaxTier)
        throw SpecError(where + ": level must lie in [1,5]");
      if (t > 0 && ts.level <= tiers[t - 1].level)
        throw SpecError("tier levels must be strictly increasing");
      if (ts.concepts < 2) throw SpecError(where + ": needs at least two concepts");
      if (ts.concepts > kMaxConceptsPerTier)
        throw SpecError(where + ": at most " + std::to_string(kMaxConceptsPerTier) +
                        " concepts per tier are defined");
      if (ts.images < 1) throw SpecError(where + ": needs at least one image per concept");
      if (ts.height < 8 || ts.width < 8) throw SpecError(where + ": image size below 8x8");
      if (ts.height % 2 || ts.width % 2)
        throw SpecError(where + ": image size must be even for 2x2 patch statistics");
      if (ts.height != tiers[0].height || ts.width != tiers[0].width)
        throw SpecError(where + ": all tiers must share one image size");
    }
  }

  std::size_t concept_count() const {
    std::size_t n = 0;
    for (const auto& t : tiers) n += t.concepts;
    return n;
  }
};

inline WorldSpec default_world_spec() {
  WorldSpec s;
  for (int level = 1; level <= 5; ++level) s.tiers.push_back({level, 3, 200, 32, 32});
  return s;
}

inline nlohmann::json world_spec_to_json(const WorldSpec& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["noise_level"] = s.noise_level;
  j["tiers"] = nlohmann::json::array();
  for (const auto& t : s.tiers)
    j["tiers"].push_back({{"level", t.level},
                          {"concepts", t.concepts},
                          {"images", t.images},
                          {"height", t.height},
                          {"width", t.width}});
  return j;
}

inline WorldSpec world_spec_from_json(const nlohmann::json& j) {
  WorldSpec s;
  try {
    s.seed = j.value("seed", s.seed);
    s.noise_level = j.value("noise_level", s.noise_level);
    for (const auto& t : j.at("tiers")) {
      TierSpec ts;
      ts.level = t.at("level").get<int>();
      ts.concepts = t.value("concepts", ts.concepts);
      ts.images = t.value("images", ts.images);
      ts.height = t.value("height", ts.height);
      ts.width = t.value("width", ts.width);
      s.tiers.push_back(ts);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed world spec: ") + e.what());
  }
  s.validate();
  return s;
}

inline WorldSpec read_world_spec(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open world spec '" + path.string() + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError(path.string() + ": " + e.what());
  }
  return world_spec_from_json(j);
}

// ---- generative parameters ---------------------------------------------------

// Every concept is a set of primitives: three large shapes (held alone by
// tier 1) and three icon patterns (held alone by tier 5). Richer tiers
// combine them.
inline constexpr int kShapePrimitives = 3;
inline constexpr int kIconPrimitiveBase = 10;

inline constexpr bool is_icon_primitive(int p) { return p >= kIconPrimitiveBase; }

/// Generative parameters of one concept. `composition` is the sorted list of
/// primitives; shape, texture and color summarize it for reports.
struct ConceptParams {
  int shape = -1;    // first shape primitive, -1 if none
  int texture = -1;  // icon primitive used as texture, -1 if none
  int color = 0;     // gray level index of solid shapes
  std::vector<int> composition;

  bool operator==(const ConceptParams&) const = default;
};

inline ConceptParams make_params(std::vector<int> composition, int color) {
  std::sort(composition.begin(), composition.end());
  ConceptParams p;
  p.composition = std::move(composition);
  p.color = color;
  for (int c : p.composition) {
    if (!is_icon_primitive(c) && p.shape < 0) p.shape = c;
    if (is_icon_primitive(c) && p.texture < 0) p.texture = c - kIconPrimitiveBase;
  }
  return p;
}

/// Number of primitives present in exactly one of the two concepts.
inline int parameter_distance(const ConceptParams& a, const ConceptParams& b) {
  std::vector<int> diff;
  std::set_symmetric_difference(a.composition.begin(), a.composition.end(),
                                b.composition.begin(), b.composition.end(),
                                std::back_inserter(diff));
  return static_cast<int>(diff.size());
}

/// Parameters implied by "a is to b as c is to ?": primitives dropped from a
/// to b are dropped from c, primitives added are added. Returns false when c
/// lacks a primitive to drop or already has one to add.
inline bool implied_parameters(const ConceptParams& a, const ConceptParams& b,
                               const ConceptParams& c, ConceptParams& out) {
  std::vector<int> removed, added;
  std::set_difference(a.composition.begin(), a.composition.end(), b.composition.begin(),
                      b.composition.end(), std::back_inserter(removed));
  std::set_difference(b.composition.begin(), b.composition.end(), a.composition.begin(),
                      a.composition.end(), std::back_inserter(added));
  std::set<int> parts(c.composition.begin(), c.composition.end());
  for (int p : removed)
    if (!parts.erase(p)) return false;
  for (int p : added)
    if (!parts.insert(p).second) return false;
  out = make_params({parts.begin(), parts.end()}, c.color);
  return true;
}

struct ConceptTruth {
  std::string name;
  int tier = 1;
  ConceptParams params;
  int defining_attributes = 1;
};

struct GroundTruth {
  std::vector<ConceptTruth> concepts;

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& c : concepts) out.push_back(c.name);
    return out;
  }
};

inline nlohmann::json ground_truth_to_json(const GroundTruth& gt) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : gt.concepts)
    j.push_back({{"name", c.name},
                 {"tier", c.tier},
                 {"shape", c.params.shape},
                 {"texture", c.params.texture},
                 {"color", c.params.color},
                 {"composition", c.params.composition},
                 {"defining_attributes", c.defining_attributes}});
  return {{"concepts", j}};
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  GroundTruth gt;
  try {
    for (const auto& c : j.at("concepts")) {
      ConceptTruth t;
      t.name = c.at("name").get<std::string>();
      t.tier = c.at("tier").get<int>();
      t.params = make_params(c.at("composition").get<std::vector<int>>(),
                             c.at("color").get<int>());
      t.defining_attributes = c.at("defining_attributes").get<int>();
      gt.concepts.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed ground truth: ") + e.what());
  }
  return gt;
}

// ---- rendering recipes --------------------------------------------------------

struct Fill {
  enum class Kind { Solid, Icon, Noise };
  Kind kind = Kind::Solid;
  double lo = 0.0;
  double hi = 0.0;  // Solid uses hi
  int pattern = 0;
};

struct ObjectRecipe {
  Shape shape = Shape::Disk;
  double cx = 0.5, cy = 0.5, r = kLargeRadius;
  Fill fill;
};

struct ConceptRecipe {
  Fill background;
  std::vector<ObjectRecipe> objects;
  double jitter = 0.0;       // max centre offset, normalized units
  double noise_scale = 1.0;  // multiplies the world noise level
};

namespace world_detail {

inline constexpr double kBright = 0.8125;
inline constexpr std::array<Shape, kShapePrimitives> kPrimitiveShapes{Shape::Disk, Shape::HBar,
                                                                      Shape::VBar};

inline Fill solid(double v) { return {Fill::Kind::Solid, 0.0, v, 0}; }
inline Fill icon(int k, double lo, double hi) { return {Fill::Kind::Icon, lo, hi, k}; }

struct Design {
  std::string name;
  ConceptParams params;
  int defining = 1;
  ConceptRecipe recipe;
};

inline std::string shape_label(int s) {
  return shape_name(kPrimitiveShapes[static_cast<std::size_t>(s)]);
}

inline Design design(int level, std::size_t j) {
  Design d;
  const int a = static_cast<int>(j % kShapePrimitives);
  const int b = static_cast<int>((j + 1) % kShapePrimitives);
  const int k = static_cast<int>(j);
  const Shape sa = kPrimitiveShapes[static_cast<std::size_t>(a)];
  const Shape sb = kPrimitiveShapes[static_cast<std::size_t>(b)];
  d.recipe.jitter = 0.02;
  switch (level) {
    case 1:
      d.name = "t1_" + shape_label(a);
      d.params = make_params({a}, 1);
      d.defining = 1;
      d.recipe.background = solid(0.0);
      d.recipe.objects = {{sa, 0.5, 0.5, kLargeRadius, solid(1.0)}};
      break;
    case 2:
      d.name = "t2_" + shape_label(a) + "_" + shape_label(b);
      d.params = make_params({a, b}, 1);
      d.defining = 2;
      d.recipe.background = solid(0.125);
      d.recipe.objects = {{sa, 0.5, 0.5, kLargeRadius, solid(kBright)},
                          {sb, 0.5, 0.5, kLargeRadius, solid(kBright)}};
      break;
    case 3:
      d.name = "t3_" + shape_label(a) + "_" + shape_label(b) + "_icon" + std::to_string(k);
      d.params = make_params({a, b, kIconPrimitiveBase + k}, 1);
      d.defining = 3;
      d.recipe.background = icon(k, 0.0, 0.35);
      d.recipe.objects = {{sa, 0.5, 0.5, kLargeRadius, solid(kBright)},
                          {sb, 0.5, 0.5, kLargeRadius, solid(kBright)}};
      break;
    case 4:
      d.name = "t4_" + shape_label(a) + "_icon" + std::to_string(k);
      d.params = make_params({a, kIconPrimitiveBase + k}, 1);
      d.defining = 2;
      d.recipe.background = icon(k, 0.0, 0.5);
      d.recipe.objects = {{sa, 0.5, 0.5, kLargeRadius, icon(k, 0.5, 1.0)}};
      d.recipe.noise_scale = 1.25;
      break;
    case 5:
      d.name = "t5_icon" + std::to_string(k);
      d.params = make_params({kIconPrimitiveBase + k}, 1);
      d.defining = 1;
      d.recipe.background = icon(k, 0.0, 1.0);
      d.recipe.noise_scale = 1.5;
      d.recipe.jitter = 0.0;
      break;
    default: throw SpecError("unknown tier level " + std::to_string(level));
  }
  return d;
}

inline GrayImage fill_image(const Fill& f, std::size_t h, std::size_t w, SplitMix64& rng) {
  switch (f.kind) {
    case Fill::Kind::Solid: return GrayImage(h, w, f.hi);
    case Fill::Kind::Icon: {
      GrayImage g = icon_pattern(static_cast<std::size_t>(f.pattern), h, w);
      for (double& p : g.pixels) p = f.lo + (f.hi - f.lo) * p;
      return g;
    }
    case Fill::Kind::Noise: {
      GrayImage g = value_noise(h, w, rng.next(), 4, 3, 0.7);
      for (double& p : g.pixels) p = f.lo + (f.hi - f.lo) * p;
      return g;
    }
  }
  return GrayImage(h, w);
}

}  // namespace world_detail

/// Renders one image of a concept from its recipe and a per-image stream.
inline GrayImage render(const ConceptRecipe& r, std::size_t h, std::size_t w, double noise,
                        SplitMix64& rng) {
  GrayImage img = world_detail::fill_image(r.background, h, w, rng);
  for (const auto& o : r.objects) {
    const double dx = r.jitter > 0 ? rng.uniform(-r.jitter, r.jitter) : 0.0;
    const double dy = r.jitter > 0 ? rng.uniform(-r.jitter, r.jitter) : 0.0;
    if (o.fill.kind == Fill::Kind::Solid) {
      draw_shape(img, o.shape, o.cx + dx, o.cy + dy, o.r, o.fill.hi);
    } else {
      const GrayImage tex = world_detail::fill_image(o.fill, h, w, rng);
      draw_textured_shape(img, o.shape, o.cx + dx, o.cy + dy, o.r, tex);
    }
  }
  const double amp = noise * r.noise_scale;
  for (double& p : img.pixels) {
    if (amp > 0) p += rng.uniform(-amp, amp);
    // Round through f32 so saved stacks reload bit-identically.
    p = static_cast<double>(static_cast<float>(std::clamp(p, 0.0, 1.0)));
  }
  return img;
}

struct World {
  WorldSpec spec;
  std::vector<ConceptImages> concepts;
  GroundTruth truth;
};

inline World generate(const WorldSpec& spec) {
  spec.validate();
  World world;
  world.spec = spec;
  std::size_t index = 0;
  for (const auto& tier : spec.tiers) {
    for (std::size_t j = 0; j < tier.concepts; ++j, ++index) {
      const auto d = world_detail::design(tier.level, j);
      ConceptImages ci{d.name, {}};
      ci.images.reserve(tier.images);
      const std::uint64_t concept_seed = mix_seed(spec.seed, index);
      for (std::size_t i = 0; i < tier.images; ++i) {
        SplitMix64 rng(mix_seed(concept_seed, i));
        ci.images.push_back(render(d.recipe, tier.height, tier.width, spec.noise_level, rng));
      }
      world.concepts.push_back(std::move(ci));
      world.truth.concepts.push_back({d.name, tier.level, d.params, d.defining});
    }
  }
  return world;
}

/// Writes images (one f32 N x H x W stack per concept), manifest.json,
/// ground_truth.json and world_spec.json under `dir`.
inline DatasetManifest write_world(const World& world, const std::filesystem::path& dir) {
  auto m = save_images(world.concepts, dir, "synthworld-" + std::to_string(world.spec.seed));
  write_json(ground_truth_to_json(world.truth), dir / "ground_truth.json");
  write_json(world_spec_to_json(world.spec), dir / "world_spec.json");
  return m;
}

// ---- benchmarks ---------------------------------------------------------------

struct BenchmarkConfig {
  std::size_t candidates = 4;
  std::size_t similarity_per_concept = 10;
  std::size_t rules_per_concept = 10;
};

namespace world_detail {

template <typename T>
void seeded_shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

/// Candidate ids sorted by parameter distance to `ref`, ties by id.
inline std::vector<int> truth_order(const GroundTruth& gt, std::vector<int> cands,
                                    const ConceptParams& ref) {
  std::stable_sort(cands.begin(), cands.end(), [&](int a, int b) {
    const int da = parameter_distance(gt.concepts[static_cast<std::size_t>(a)].params, ref);
    const int db = parameter_distance(gt.concepts[static_cast<std::size_t>(b)].params, ref);
    if (da != db) return da < db;
    return a < b;
  });
  return cands;
}

}  // namespace world_detail

/// Similarity items: every concept is the query of `similarity_per_concept`
/// items whose candidates span as many distinct parameter distances as
/// possible. Rule items: every concept is the implied target of up to
/// `rules_per_concept` analogies found by exhaustive search; the target is
/// always among the candidates. Concepts no analogy implies get no rule items.
inline GeneralizationBenchmark make_benchmark(const GroundTruth& gt, std::uint64_t seed,
                                              const BenchmarkConfig& cfg = {}) {
  const std::size_t n = gt.concepts.size();
  if (n < 4) throw BenchmarkError("benchmarks need at least four concepts");
  if (cfg.candidates < 2) throw BenchmarkError("items need at least two candidates");
  if (cfg.candidates + 1 > n) throw BenchmarkError("more candidates than concepts");
  GeneralizationBenchmark b;
  SplitMix64 rng(mix_seed(seed, 0xBE7C4));
  const auto& C = gt.concepts;

  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t item = 0; item < cfg.similarity_per_concept; ++item) {
      // Bucket other concepts by distance, then draw round-robin over buckets.
      std::vector<std::vector<int>> buckets;
      std::vector<int> bucket_distance;
      for (std::size_t c = 0; c < n; ++c) {
        if (c == q) continue;
        const int dist = parameter_distance(C[q].params, C[c].params);
        auto it = std::find(bucket_distance.begin(), bucket_distance.end(), dist);
        if (it == bucket_distance.end()) {
          bucket_distance.push_back(dist);
          buckets.push_back({static_cast<int>(c)});
        } else {
          buckets[static_cast<std::size_t>(it - bucket_distance.begin())].push_back(
              static_cast<int>(c));
        }
      }
      for (auto& bk : buckets) world_detail::seeded_shuffle(bk, rng);
      world_detail::seeded_shuffle(buckets, rng);
      std::vector<int> cands;
      for (std::size_t round = 0; cands.size() < cfg.candidates; ++round) {
        bool any = false;
        for (auto& bk : buckets)
          if (round < bk.size() && cands.size() < cfg.candidates) {
            cands.push_back(bk[round]);
            any = true;
          }
        if (!any) break;
      }
      std::sort(cands.begin(), cands.end());
      SimilarityItem it{static_cast<int>(q), cands,
                        world_detail::truth_order(gt, cands, C[q].params), ""};
      b.similarity.push_back(std::move(it));
    }
  }

  for (std::size_t t = 0; t < n; ++t) {
    std::vector<std::array<int, 3>> triples;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t bb = 0; bb < n; ++bb)
        for (std::size_t c = 0; c < n; ++c) {
          if (a == bb || a == c || bb == c || a == t || bb == t || c == t) continue;
          if (C[a].params == C[bb].params) continue;
          ConceptParams implied;
          if (!implied_parameters(C[a].params, C[bb].params, C[c].params, implied)) continue;
          if (implied == C[t].params)
            triples.push_back({static_cast<int>(a), static_cast<int>(bb), static_cast<int>(c)});
        }
    if (triples.empty()) continue;
    world_detail::seeded_shuffle(triples, rng);
    const std::size_t take = std::min(cfg.rules_per_concept, triples.size());
    for (std::size_t k = 0; k < take; ++k) {
      const auto [a, bb, c] = triples[k];
      std::vector<int> pool;
      for (std::size_t o = 0; o < n; ++o)
        if (o != t && static_cast<int>(o) != a && static_cast<int>(o) != bb &&
            static_cast<int>(o) != c)
          pool.push_back(static_cast<int>(o));
      world_detail::seeded_shuffle(pool, rng);
      std::vector<int> cands{static_cast<int>(t)};
      for (std::size_t o = 0; o < pool.size() && cands.size() < cfg.candidates; ++o)
        cands.push_back(pool[o]);
      std::sort(cands.begin(), cands.end());
      RuleItem it{a, bb, c, cands, world_detail::truth_order(gt, cands, C[t].params), ""};
      b.rules.push_back(std::move(it));
    }
  }
  if (b.rules.empty()) throw BenchmarkError("no analogy implies any concept of the world");
  b.validate(n);
  return b;
}

}  // namespace bgc
