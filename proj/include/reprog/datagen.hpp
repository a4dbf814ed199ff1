#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "reprog/tensor.hpp"

namespace reprog {

// Procedural dataset families. source16: 16 colored motif classes (oriented
// bars, corners, checkers, ring, plus) on a 3-channel canvas. target4-related:
// 4 classes whose motifs are the scaled central crops of 4 designated source
// motifs, so a semantically correct target->source mapping exists by
// construction. target4-unrelated: 4 motifs matching no source class.
// blobs2: 2 linearly separable Gaussian blobs rendered as flat images.
enum class Family { source16, target4_related, target4_unrelated, blobs2 };
enum class Split { train, test };

Family family_from_string(const std::string& s);
std::string family_to_string(Family f);

struct GenSpec {
  Family family = Family::source16;
  int canvas = 32;  // square H == W
  int train_per_class = 100;
  int test_per_class = 25;
  float noise = 0.25f;  // per-pixel Gaussian sigma; pixels clamp to [0,1]
  std::uint64_t seed = 0;

  void validate() const;
  int num_classes() const;
  nlohmann::json to_json() const;
  static GenSpec from_json(const nlohmann::json& j);
};

struct Dataset {
  Tensor images;  // [n, C, H, W], values in [0,1]
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::string split;  // "train", "test" or "external"
  nlohmann::json provenance;

  int size() const { return images.shape.empty() ? 0 : images.shape[0]; }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  std::array<int, 3> sample_shape() const { return {images.shape[1], images.shape[2], images.shape[3]}; }
  Tensor sample(int i) const;  // row i as [C,H,W]
  int count_in_class(int label) const;
  void validate() const;  // labels in range, every class non-empty
};

Dataset generate_split(const GenSpec& spec, Split split);

struct GeneratedPair {
  Dataset train;
  Dataset test;
};
// Train/test splits are drawn from disjoint RNG substreams of the same seed.
GeneratedPair generate(const GenSpec& spec);

// Ground-truth source class per target4-related class, in class order.
std::vector<int> designated_sources();

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

std::uint64_t dataset_digest(const Dataset& ds);

// 8-bit binary PGM (P5) / PPM (P6).
void write_pgm(const std::string& path, const Tensor& img);  // [1,H,W] or [H,W]
void write_ppm(const std::string& path, const Tensor& img);  // [3,H,W]
Tensor read_pnm(const std::string& path);                    // [1,H,W] or [3,H,W], scaled to [0,1]

// Ingest a directory of `label_<k>_*.pgm` / `label_<k>_*.ppm` files.
Dataset ingest_pnm_dir(const std::string& dir, const std::string& split = "external");

}  // namespace reprog
