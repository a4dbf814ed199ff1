#include "reprog/datagen.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "reprog/container.hpp"
#include "reprog/errors.hpp"
#include "reprog/rng.hpp"

namespace reprog {
namespace {

// ----------------------------- motif geometry -----------------------------

struct Rgb {
  float r, g, b;
};

Rgb hsv_to_rgb(float h, float s, float v) {
  h = h - std::floor(h);
  const float c = v * s;
  const float hp = h * 6.0f;
  const float x = c * (1.0f - std::fabs(std::fmod(hp, 2.0f) - 1.0f));
  float r = 0, g = 0, b = 0;
  if (hp < 1) {
    r = c; g = x;
  } else if (hp < 2) {
    r = x; g = c;
  } else if (hp < 3) {
    g = c; b = x;
  } else if (hp < 4) {
    g = x; b = c;
  } else if (hp < 5) {
    r = x; b = c;
  } else {
    r = c; b = x;
  }
  const float m = v - c;
  return {r + m, g + m, b + m};
}

Rgb source_color(int k) { return hsv_to_rgb(static_cast<float>(k) / 16.0f, 0.85f, 1.0f); }
Rgb unrelated_color(int k) { return hsv_to_rgb((static_cast<float>(k) + 0.5f) / 4.0f, 0.65f, 0.95f); }

// Rotate (u,v) about the canvas center by quarter turns.
void rotate_quarter(float& u, float& v, int quarters) {
  for (int q = 0; q < quarters; ++q) {
    const float nu = v;
    const float nv = 1.0f - u;
    u = nu;
    v = nv;
  }
}

// Normalized-coordinate membership test for source motif k at (u,v) in [0,1]^2.
bool source_motif(int k, float u, float v) {
  if (k < 6) {  // oriented bars, 30 degree steps
    const float theta = static_cast<float>(k) * 3.14159265358979323846f / 6.0f;
    const float d = (u - 0.5f) * std::sin(theta) - (v - 0.5f) * std::cos(theta);
    return std::fabs(d) < 0.11f;
  }
  if (k < 10) {  // L-corners at 4 orientations
    rotate_quarter(u, v, k - 6);
    const bool arm_h = v >= 0.42f && v <= 0.58f && u >= 0.5f && u <= 0.92f;
    const bool arm_v = u >= 0.42f && u <= 0.58f && v >= 0.5f && v <= 0.92f;
    return arm_h || arm_v;
  }
  if (k < 14) {  // checkerboards, two cell sizes x two phases
    const float cell = k < 12 ? 0.25f : 0.125f;
    const int parity = (static_cast<int>(std::floor(u / cell)) + static_cast<int>(std::floor(v / cell))) & 1;
    return parity == (k & 1);
  }
  if (k == 14) {  // ring
    const float r = std::hypot(u - 0.5f, v - 0.5f);
    return r >= 0.20f && r <= 0.33f;
  }
  // plus sign
  return std::fabs(u - 0.5f) < 0.10f || std::fabs(v - 0.5f) < 0.10f;
}

bool unrelated_motif(int k, float u, float v) {
  switch (k) {
    case 0: {  // diagonal stripes
      const float t = (u + v) / 0.34f;
      return (t - std::floor(t)) < 0.5f;
    }
    case 1:  // X cross
      return std::fabs(u - v) < 0.08f || std::fabs(u + v - 1.0f) < 0.08f;
    case 2: {  // three dots in a row
      for (int d = 0; d < 3; ++d) {
        const float cx = 0.25f + 0.25f * static_cast<float>(d);
        if (std::hypot(u - cx, v - 0.5f) < 0.09f) return true;
      }
      return false;
    }
    default:  // chevron
      return std::fabs(v - (0.30f + std::fabs(u - 0.5f))) < 0.08f;
  }
}

constexpr float kBackground = 0.10f;
constexpr std::array<int, 4> kDesignated = {4, 7, 11, 14};

float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

void render_motif_sample(const GenSpec& spec, int klass, Rng& rng, float* out) {
  const int hw = spec.canvas;
  for (int i = 0; i < hw; ++i) {
    for (int j = 0; j < hw; ++j) {
      float u = (static_cast<float>(j) + 0.5f) / static_cast<float>(hw);
      float v = (static_cast<float>(i) + 0.5f) / static_cast<float>(hw);
      bool inside = false;
      Rgb color{};
      switch (spec.family) {
        case Family::source16:
          inside = source_motif(klass, u, v);
          color = source_color(klass);
          break;
        case Family::target4_related: {
          // Central half of motif space: the scaled crop of the designated
          // source motif, carrying that motif's color.
          const int src = kDesignated[static_cast<std::size_t>(klass)];
          u = 0.25f + 0.5f * u;
          v = 0.25f + 0.5f * v;
          inside = source_motif(src, u, v);
          color = source_color(src);
          break;
        }
        case Family::target4_unrelated:
          inside = unrelated_motif(klass, u, v);
          color = unrelated_color(klass);
          break;
        case Family::blobs2:
          break;  // handled separately
      }
      const float ch[3] = {color.r, color.g, color.b};
      for (int c = 0; c < 3; ++c) {
        const float base = inside ? ch[c] : kBackground;
        const float noisy =
            spec.noise > 0.0f ? base + spec.noise * static_cast<float>(rng.normal()) : base;
        out[(c * hw + i) * hw + j] = clamp01(noisy);
      }
    }
  }
}

void render_blob_sample(const GenSpec& spec, int klass, Rng& rng, float* out) {
  const int hw = spec.canvas;
  const float mean0 = klass == 0 ? -1.0f : 1.0f;
  const float z0 = mean0 + 0.25f * static_cast<float>(rng.normal());
  const float z1 = 0.25f * static_cast<float>(rng.normal());
  for (int i = 0; i < hw; ++i) {
    for (int j = 0; j < hw; ++j) {
      const float b0 = (static_cast<float>(j) + 0.5f) / static_cast<float>(hw) - 0.5f;
      const float b1 = (static_cast<float>(i) + 0.5f) / static_cast<float>(hw) - 0.5f;
      const float value = 0.5f + 0.18f * (z0 * b0 + z1 * b1);
      for (int c = 0; c < 3; ++c) out[(c * hw + i) * hw + j] = clamp01(value);
    }
  }
}

std::vector<std::string> family_class_names(Family family) {
  switch (family) {
    case Family::source16:
      return {"bar0",    "bar30",    "bar60",     "bar90",     "bar120", "bar150",
              "corner0", "corner90", "corner180", "corner270", "check4a", "check4b",
              "check8a", "check8b",  "ring",      "plus"};
    case Family::target4_related:
      return {"crop-bar120", "crop-corner90", "crop-check4b", "crop-ring"};
    case Family::target4_unrelated:
      return {"stripes", "xcross", "dots", "chevron"};
    case Family::blobs2:
      return {"blob-neg", "blob-pos"};
  }
  throw ConfigError("unknown dataset family");
}

}  // namespace

// ----------------------------- GenSpec -----------------------------

Family family_from_string(const std::string& s) {
  if (s == "source16") return Family::source16;
  if (s == "target4-related") return Family::target4_related;
  if (s == "target4-unrelated") return Family::target4_unrelated;
  if (s == "blobs2") return Family::blobs2;
  throw ConfigError("unknown dataset family '" + s + "'");
}

std::string family_to_string(Family f) {
  switch (f) {
    case Family::source16: return "source16";
    case Family::target4_related: return "target4-related";
    case Family::target4_unrelated: return "target4-unrelated";
    case Family::blobs2: return "blobs2";
  }
  throw ConfigError("unknown dataset family");
}

void GenSpec::validate() const {
  if (canvas < 8) throw ConfigError("gen spec: canvas must be >= 8 to resolve the motifs");
  if (train_per_class < 1 || test_per_class < 1) {
    throw ConfigError("gen spec: per-class sample counts must be positive");
  }
  if (noise < 0.0f) throw ConfigError("gen spec: noise must be >= 0");
}

int GenSpec::num_classes() const {
  switch (family) {
    case Family::source16: return 16;
    case Family::target4_related:
    case Family::target4_unrelated: return 4;
    case Family::blobs2: return 2;
  }
  throw ConfigError("unknown dataset family");
}

nlohmann::json GenSpec::to_json() const {
  return {{"family", family_to_string(family)}, {"canvas", canvas},
          {"train_per_class", train_per_class}, {"test_per_class", test_per_class},
          {"noise", noise},                     {"seed", seed}};
}

GenSpec GenSpec::from_json(const nlohmann::json& j) {
  GenSpec s;
  s.family = family_from_string(j.at("family").get<std::string>());
  if (j.contains("canvas")) s.canvas = j.at("canvas").get<int>();
  if (j.contains("train_per_class")) s.train_per_class = j.at("train_per_class").get<int>();
  if (j.contains("test_per_class")) s.test_per_class = j.at("test_per_class").get<int>();
  if (j.contains("noise")) s.noise = j.at("noise").get<float>();
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  s.validate();
  return s;
}

std::vector<int> designated_sources() { return {kDesignated.begin(), kDesignated.end()}; }

// ----------------------------- Dataset -----------------------------

Tensor Dataset::sample(int i) const {
  if (i < 0 || i >= size()) throw ArgumentError("dataset sample index " + std::to_string(i) + " out of range");
  const auto shp = sample_shape();
  Tensor out({shp[0], shp[1], shp[2]});
  const std::size_t stride = out.data.size();
  std::copy_n(images.data.begin() + static_cast<std::ptrdiff_t>(stride * static_cast<std::size_t>(i)),
              stride, out.data.begin());
  return out;
}

int Dataset::count_in_class(int label) const {
  int n = 0;
  for (int l : labels) {
    if (l == label) ++n;
  }
  return n;
}

void Dataset::validate() const {
  if (images.rank() != 4) throw DataError("dataset: images must be rank-4 [n,C,H,W]");
  if (static_cast<int>(labels.size()) != size()) throw DataError("dataset: label count != image count");
  const int k = num_classes();
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) {
    if (l < 0 || l >= k) throw DataError("dataset: label " + std::to_string(l) + " outside [0," + std::to_string(k) + ")");
    ++counts[static_cast<std::size_t>(l)];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw DataError("dataset: class " + std::to_string(c) + " ('" + class_names[static_cast<std::size_t>(c)] +
                      "') is empty in split '" + split + "'");
    }
  }
}

// ----------------------------- generation -----------------------------

Dataset generate_split(const GenSpec& spec, Split split) {
  spec.validate();
  const int k = spec.num_classes();
  const int per_class = split == Split::train ? spec.train_per_class : spec.test_per_class;
  const int n = k * per_class;

  Dataset ds;
  ds.images = Tensor({n, 3, spec.canvas, spec.canvas});
  ds.labels.reserve(static_cast<std::size_t>(n));
  ds.class_names = family_class_names(spec.family);
  ds.split = split == Split::train ? "train" : "test";
  ds.provenance = {{"generator", spec.to_json()}, {"split", ds.split}};
  if (spec.family == Family::target4_related) ds.provenance["designated_sources"] = designated_sources();

  const std::size_t stride = static_cast<std::size_t>(3) * spec.canvas * spec.canvas;
  const std::uint64_t split_bits = split == Split::train ? 1ULL : 2ULL;
  int row = 0;
  for (int klass = 0; klass < k; ++klass) {
    for (int i = 0; i < per_class; ++i, ++row) {
      // Per-sample substream keyed by (seed, split, class, index): splits are
      // disjoint and the result is independent of generation order.
      Rng rng(Rng::derive(spec.seed, (split_bits << 32) | static_cast<std::uint64_t>(klass),
                          static_cast<std::uint64_t>(i)));
      float* out = ds.images.data.data() + stride * static_cast<std::size_t>(row);
      if (spec.family == Family::blobs2) {
        render_blob_sample(spec, klass, rng, out);
      } else {
        render_motif_sample(spec, klass, rng, out);
      }
      ds.labels.push_back(klass);
    }
  }
  ds.validate();
  return ds;
}

GeneratedPair generate(const GenSpec& spec) {
  return {generate_split(spec, Split::train), generate_split(spec, Split::test)};
}

// ----------------------------- container I/O -----------------------------

void save_dataset(const Dataset& ds, const std::string& path) {
  ContainerRecord record;
  record.kind = "dataset";
  record.meta = {{"split", ds.split}, {"class_names", ds.class_names}, {"provenance", ds.provenance}};
  record.tensors.emplace_back("images", ds.images);
  Tensor labels({std::max(1, ds.size())});
  labels.shape = {ds.size()};
  labels.data.assign(ds.labels.size(), 0.0f);
  for (std::size_t i = 0; i < ds.labels.size(); ++i) labels.data[i] = static_cast<float>(ds.labels[i]);
  record.tensors.emplace_back("labels", std::move(labels));
  write_container(path, record);
}

Dataset load_dataset(const std::string& path) {
  const ContainerRecord record = read_container(path, "dataset");
  Dataset ds;
  try {
    ds.split = record.meta.at("split").get<std::string>();
    ds.class_names = record.meta.at("class_names").get<std::vector<std::string>>();
    ds.provenance = record.meta.at("provenance");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "': malformed dataset metadata: " + e.what());
  }
  ds.images = record.tensor("images");
  const Tensor& labels = record.tensor("labels");
  for (float v : labels.data) {
    const int l = static_cast<int>(v);
    if (static_cast<float>(l) != v) throw FormatError("'" + path + "': non-integer label value");
    ds.labels.push_back(l);
  }
  ds.validate();
  return ds;
}

std::uint64_t dataset_digest(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint32_t bits) {
    for (int byte = 0; byte < 4; ++byte) {
      h ^= (bits >> (8 * byte)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (int e : ds.images.shape) mix(static_cast<std::uint32_t>(e));
  for (float v : ds.images.data) mix(std::bit_cast<std::uint32_t>(v));
  for (int l : ds.labels) mix(static_cast<std::uint32_t>(l));
  return h;
}

// ----------------------------- PGM / PPM -----------------------------

namespace {

std::uint8_t to_byte(float v) {
  const float scaled = clamp01(v) * 255.0f;
  return static_cast<std::uint8_t>(std::lround(scaled));
}

void write_pnm(const std::string& path, const Tensor& img, int channels) {
  const int h = img.shape[img.rank() - 2];
  const int w = img.shape[img.rank() - 1];
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << (channels == 1 ? "P5" : "P6") << "\n" << w << " " << h << "\n255\n";
  std::vector<char> row(static_cast<std::size_t>(w) * channels);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      for (int c = 0; c < channels; ++c) {
        const float v = img.rank() == 2 ? img[i * w + j] : img.at3(c, i, j);
        row[static_cast<std::size_t>(j) * channels + c] = static_cast<char>(to_byte(v));
      }
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw DataError("short write to '" + path + "'");
}

int pnm_next_int(std::istream& in, const std::string& path) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    } else {
      c = in.get();
    }
  }
  if (c == EOF) throw FormatError("'" + path + "': truncated PNM header");
  int value = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw FormatError("'" + path + "': malformed PNM header");
  return value;
}

}  // namespace

void write_pgm(const std::string& path, const Tensor& img) {
  if (!(img.rank() == 2 || (img.rank() == 3 && img.shape[0] == 1))) {
    throw ShapeError("write_pgm: expected [H,W] or [1,H,W], got " + img.shape_str());
  }
  write_pnm(path, img, 1);
}

void write_ppm(const std::string& path, const Tensor& img) {
  if (img.rank() != 3 || img.shape[0] != 3) {
    throw ShapeError("write_ppm: expected [3,H,W], got " + img.shape_str());
  }
  write_pnm(path, img, 3);
}

Tensor read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw FormatError("'" + path + "': not a binary PGM/PPM file");
  }
  const int channels = magic[1] == '5' ? 1 : 3;
  const int w = pnm_next_int(in, path);
  const int h = pnm_next_int(in, path);
  const int maxval = pnm_next_int(in, path);
  if (w <= 0 || h <= 0) throw FormatError("'" + path + "': bad PNM dimensions");
  if (maxval <= 0 || maxval > 255) throw FormatError("'" + path + "': only 8-bit PNM supported");
  // header terminates with exactly one whitespace byte, already consumed by
  // pnm_next_int's digit scan

  std::vector<char> raw(static_cast<std::size_t>(w) * h * channels);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw FormatError("'" + path + "': truncated PNM payload");
  }
  Tensor img({channels, h, w});
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      for (int c = 0; c < channels; ++c) {
        const auto byte = static_cast<std::uint8_t>(raw[(static_cast<std::size_t>(i) * w + j) * channels + c]);
        img.at3(c, i, j) = static_cast<float>(byte) / static_cast<float>(maxval);
      }
    }
  }
  return img;
}

Dataset ingest_pnm_dir(const std::string& dir, const std::string& split) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("'" + dir + "' is not a directory");

  std::vector<std::pair<std::string, int>> files;  // (path, label)
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    const std::string ext = entry.path().extension().string();
    if (ext != ".pgm" && ext != ".ppm") continue;
    if (name.rfind("label_", 0) != 0) {
      throw DataError("'" + name + "': PNM files must be named label_<k>_*.pgm/.ppm");
    }
    std::size_t pos = 6;
    int label = 0;
    bool any = false;
    while (pos < name.size() && std::isdigit(static_cast<unsigned char>(name[pos]))) {
      label = label * 10 + (name[pos] - '0');
      any = true;
      ++pos;
    }
    if (!any || pos >= name.size() || name[pos] != '_') {
      throw DataError("'" + name + "': cannot parse class index from file name");
    }
    files.emplace_back(entry.path().string(), label);
  }
  if (files.empty()) throw DataError("'" + dir + "': no PGM/PPM files found");
  std::sort(files.begin(), files.end());

  std::vector<Tensor> imgs;
  int max_label = 0;
  for (const auto& [path, label] : files) {
    imgs.push_back(read_pnm(path));
    if (!imgs.back().same_shape(imgs.front())) {
      throw DataError("'" + path + "': image shape " + imgs.back().shape_str() +
                      " differs from first file's " + imgs.front().shape_str());
    }
    max_label = std::max(max_label, label);
  }

  Dataset ds;
  const auto& shp = imgs.front().shape;
  ds.images = Tensor({static_cast<int>(imgs.size()), shp[0], shp[1], shp[2]});
  const std::size_t stride = imgs.front().data.size();
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    std::copy(imgs[i].data.begin(), imgs[i].data.end(),
              ds.images.data.begin() + static_cast<std::ptrdiff_t>(stride * i));
    ds.labels.push_back(files[i].second);
  }
  for (int k = 0; k <= max_label; ++k) ds.class_names.push_back("class_" + std::to_string(k));
  ds.split = split;
  ds.provenance = {{"ingested_from", dir}};
  ds.validate();
  return ds;
}

}  // namespace reprog
