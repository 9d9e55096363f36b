#pragma once

// Activation datasets and their JSON manifests.
//
// Manifest schema (UTF-8 JSON):
//   { "name": str, "format_version": 1, "attribute_count": d,
//     "concepts": [ { "name": str, "file": relative path, "samples": n }, ... ] }
//
// Activation manifests reference one rank-2 (samples x d) tensor per concept.
// Image manifests use the same schema with "kind": "images" and reference
// rank-3 (N x H x W) or rank-4 (N x H x W x 3) stacks; attribute_count then
// holds the per-image pixel count.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bgc/error.hpp"
#include "bgc/matrix.hpp"
#include "bgc/raster.hpp"
#include "bgc/tensor.hpp"

namespace bgc {

inline constexpr int kManifestVersion = 1;

struct ActivationSet {
  Matrix activations;                     // N x d
  std::vector<int> labels;                // length N, in [0, C)
  std::vector<std::string> concept_names; // length C

  std::size_t sample_count() const { return activations.rows(); }
  std::size_t attribute_count() const { return activations.cols(); }
  std::size_t concept_count() const { return concept_names.size(); }

  std::vector<std::size_t> samples_of(int concept_id) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == concept_id) idx.push_back(i);
    return idx;
  }

  /// Throws InputError unless the set satisfies its invariants.
  void validate() const {
    const std::size_t c = concept_names.size();
    if (labels.size() != activations.rows())
      throw InputError("label count " + std::to_string(labels.size()) +
                       " != sample count " + std::to_string(activations.rows()));
    std::vector<std::size_t> counts(c, 0);
    for (int l : labels) {
      if (l < 0 || static_cast<std::size_t>(l) >= c)
        throw InputError("label " + std::to_string(l) + " outside [0," +
                         std::to_string(c) + ")");
      ++counts[static_cast<std::size_t>(l)];
    }
    for (std::size_t k = 0; k < c; ++k)
      if (counts[k] == 0)
        throw InputError("concept '" + concept_names[k] + "' has no samples");
    for (double v : activations.data())
      if (!std::isfinite(v)) throw InputError("activation set contains a non-finite entry");
  }
};

struct ManifestEntry {
  std::string name;
  std::string file;
  std::uint64_t samples = 0;
};

struct DatasetManifest {
  std::string name;
  int format_version = kManifestVersion;
  std::uint64_t attribute_count = 0;
  std::vector<ManifestEntry> concepts;
  std::string kind = "activations";
};

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["name"] = m.name;
  j["format_version"] = m.format_version;
  j["attribute_count"] = m.attribute_count;
  if (m.kind != "activations") j["kind"] = m.kind;
  j["concepts"] = nlohmann::json::array();
  for (const auto& e : m.concepts)
    j["concepts"].push_back({{"name", e.name}, {"file", e.file}, {"samples", e.samples}});
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    m.format_version = j.at("format_version").get<int>();
    m.attribute_count = j.at("attribute_count").get<std::uint64_t>();
    m.kind = j.value("kind", std::string("activations"));
    for (const auto& e : j.at("concepts"))
      m.concepts.push_back({e.at("name").get<std::string>(), e.at("file").get<std::string>(),
                            e.at("samples").get<std::uint64_t>()});
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(std::string("malformed manifest: ") + e.what());
  }
  if (m.format_version != kManifestVersion)
    throw ManifestError("unsupported format_version " + std::to_string(m.format_version));
  if (m.concepts.empty()) throw ManifestError("manifest lists no concepts");
  return m;
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot open '" + path.string() + "' for writing");
  os << j.dump(2) << '\n';
}

inline ActivationSet load_dataset(const std::filesystem::path& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);
  if (m.kind != "activations")
    throw ManifestError("'" + manifest_path.string() + "' is a " + m.kind +
                        " manifest, expected activations");
  const auto dir = manifest_path.parent_path();
  const std::size_t d = m.attribute_count;
  ActivationSet set;
  std::vector<double> data;
  for (std::size_t c = 0; c < m.concepts.size(); ++c) {
    const auto& e = m.concepts[c];
    Tensor t;
    try {
      t = read_tensor(dir / e.file);
    } catch (const Error& err) {
      throw ManifestError("concept '" + e.name + "': " + err.what());
    }
    if (t.rank() != 2)
      throw ManifestError("concept '" + e.name + "': tensor has rank " +
                          std::to_string(t.rank()) +
                          ", expected rank 2 (spatial maps must be pooled first)");
    if (t.dim(1) != d)
      throw ManifestError("concept '" + e.name + "': attribute_count mismatch, file has " +
                          std::to_string(t.dim(1)) + " attributes, manifest declares " +
                          std::to_string(d));
    if (t.dim(0) != e.samples)
      throw ManifestError("concept '" + e.name + "': manifest declares " +
                          std::to_string(e.samples) + " samples, file has " +
                          std::to_string(t.dim(0)));
    const auto values = t.to_doubles();
    for (double v : values)
      if (!std::isfinite(v))
        throw ManifestError("concept '" + e.name + "': non-finite activation");
    data.insert(data.end(), values.begin(), values.end());
    set.labels.insert(set.labels.end(), t.dim(0), static_cast<int>(c));
    set.concept_names.push_back(e.name);
  }
  set.activations = Matrix(set.labels.size(), d, std::move(data));
  set.validate();
  return set;
}

/// Writes one f64 tensor per concept plus manifest.json into `dir`.
inline DatasetManifest save_dataset(const ActivationSet& set, const std::filesystem::path& dir,
                                    const std::string& name = "dataset") {
  set.validate();
  std::filesystem::create_directories(dir);
  DatasetManifest m;
  m.name = name;
  m.attribute_count = set.attribute_count();
  const std::size_t d = set.attribute_count();
  for (std::size_t c = 0; c < set.concept_count(); ++c) {
    const auto idx = set.samples_of(static_cast<int>(c));
    std::vector<double> values;
    values.reserve(idx.size() * d);
    for (auto i : idx) {
      const auto r = set.activations.row(i);
      values.insert(values.end(), r.begin(), r.end());
    }
    char fname[32];
    std::snprintf(fname, sizeof fname, "concept_%03zu.bgc", c);
    write_tensor(Tensor({idx.size(), d}, std::move(values)), dir / fname);
    m.concepts.push_back({set.concept_names[c], fname, idx.size()});
  }
  write_json(manifest_to_json(m), dir / "manifest.json");
  return m;
}

struct ConceptImages {
  std::string name;
  std::vector<GrayImage> images;
};

inline std::vector<ConceptImages> load_images(const std::filesystem::path& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);
  if (m.kind != "images")
    throw ManifestError("'" + manifest_path.string() + "' is not an images manifest");
  const auto dir = manifest_path.parent_path();
  std::vector<ConceptImages> out;
  for (const auto& e : m.concepts) {
    Tensor t;
    try {
      t = read_tensor(dir / e.file);
    } catch (const Error& err) {
      throw ManifestError("concept '" + e.name + "': " + err.what());
    }
    const bool colour = t.rank() == 4;
    if (t.rank() != 3 && !(colour && t.dim(3) == 3))
      throw ManifestError("concept '" + e.name +
                          "': image stack must be N x H x W or N x H x W x 3");
    if (t.dim(0) != e.samples)
      throw ManifestError("concept '" + e.name + "': sample count mismatch");
    const std::size_t n = t.dim(0), h = t.dim(1), w = t.dim(2);
    const std::size_t ch = colour ? 3 : 1;
    if (h * w * ch != m.attribute_count)
      throw ManifestError("concept '" + e.name + "': attribute_count mismatch");
    ConceptImages ci{e.name, {}};
    for (std::size_t i = 0; i < n; ++i) {
      GrayImage g(h, w);
      for (std::size_t p = 0; p < h * w; ++p) {
        double acc = 0.0;
        for (std::size_t k = 0; k < ch; ++k) {
          const double v = t.at((i * h * w + p) * ch + k);
          if (!(v >= 0.0 && v <= 1.0))
            throw InputError("concept '" + e.name + "': pixel outside [0,1] in image " +
                             std::to_string(i));
          acc += v;
        }
        g.pixels[p] = acc / static_cast<double>(ch);
      }
      ci.images.push_back(std::move(g));
    }
    out.push_back(std::move(ci));
  }
  return out;
}

/// Writes grayscale image stacks as f32 tensors. Pixels are expected to be
/// exactly representable in f32 (the world generator rounds them).
inline DatasetManifest save_images(const std::vector<ConceptImages>& concepts,
                                   const std::filesystem::path& dir,
                                   const std::string& name) {
  std::filesystem::create_directories(dir);
  DatasetManifest m;
  m.name = name;
  m.kind = "images";
  for (std::size_t c = 0; c < concepts.size(); ++c) {
    const auto& ci = concepts[c];
    if (ci.images.empty()) throw InputError("concept '" + ci.name + "' has no images");
    const std::size_t h = ci.images[0].height, w = ci.images[0].width;
    if (c == 0) m.attribute_count = h * w;
    if (h * w != m.attribute_count) throw ShapeError("image sizes differ across concepts");
    std::vector<float> values;
    values.reserve(ci.images.size() * h * w);
    for (const auto& g : ci.images) {
      if (g.height != h || g.width != w) throw ShapeError("image sizes differ within concept");
      for (double p : g.pixels) values.push_back(static_cast<float>(p));
    }
    char fname[32];
    std::snprintf(fname, sizeof fname, "images_%03zu.bgc", c);
    write_tensor(Tensor({ci.images.size(), h, w}, std::move(values)), dir / fname);
    m.concepts.push_back({ci.name, fname, ci.images.size()});
  }
  write_json(manifest_to_json(m), dir / "manifest.json");
  return m;
}

}  // namespace bgc
