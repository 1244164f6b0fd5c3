#ifndef DAATTACK_DATASET_HPP
#define DAATTACK_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "binary_io.hpp"
#include "errors.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace daa {

/// Labelled images with pixels in [0,1].
struct Dataset {
  Tensor images;  // [M,C,H,W]
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  Shape image_shape() const { return {images.dim(1), images.dim(2), images.dim(3)}; }
  Tensor example(std::size_t i) const { return images.slice(i); }

  /// Examples [begin, end) as a new dataset.
  Dataset subset(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) throw ArgumentError("dataset: subset out of range");
    const std::size_t n = shape_size(image_shape());
    Shape s = images.shape();
    s[0] = end - begin;
    std::vector<double> px(images.data().begin() + begin * n, images.data().begin() + end * n);
    return {Tensor(std::move(s), std::move(px)),
            std::vector<std::size_t>(labels.begin() + begin, labels.begin() + end), num_classes};
  }

  void validate() const {
    if (images.rank() != 4) throw StructuralError("dataset: images must be [M,C,H,W]");
    if (labels.empty() || images.dim(0) != labels.size())
      throw StructuralError("dataset: need M >= 1 and one label per image");
    for (std::size_t y : labels)
      if (y >= num_classes) throw StructuralError("dataset: label out of range");
  }
};

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

/// Leading examples train, trailing `test_fraction` test.
inline TrainTestSplit split(const Dataset& d, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must be in (0,1)");
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(d.size())));
  if (n_test == 0 || n_test >= d.size()) throw ConfigError("dataset too small for the requested split");
  return {d.subset(0, d.size() - n_test), d.subset(d.size() - n_test, d.size())};
}

namespace detail {

// Pixels are stored as f32 on disk; generators round the same way so a saved
// dataset reloads bit-identically.
inline double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace detail

struct BlobsOptions {
  std::size_t n = 1000;
  std::size_t hw = 8;
  std::size_t classes = 2;
  double spread = 0.1;
  std::uint64_t seed = 0;
};

/// Gaussian blobs: one random mean image per class, isotropic pixel noise, clipped to [0,1].
inline Dataset make_blobs(const BlobsOptions& o) {
  if (o.n == 0 || o.hw == 0 || o.classes < 2) throw ConfigError("blobs: need n >= 1, hw >= 1, classes >= 2");
  RngStream rng(o.seed, 1);
  const std::size_t px = o.hw * o.hw;
  std::vector<std::vector<double>> centers(o.classes, std::vector<double>(px));
  for (auto& c : centers)
    for (double& v : c) v = rng.uniform(0.2, 0.8);
  Dataset d{Tensor({o.n, 1, o.hw, o.hw}), std::vector<std::size_t>(o.n), o.classes};
  for (std::size_t i = 0; i < o.n; ++i) {
    const std::size_t y = rng.uniform_int(0, o.classes - 1);
    d.labels[i] = y;
    for (std::size_t p = 0; p < px; ++p)
      d.images[i * px + p] = detail::to_f32(std::clamp(centers[y][p] + o.spread * rng.normal(), 0.0, 1.0));
  }
  return d;
}

struct RingsOptions {
  std::size_t n = 2000;
  std::size_t hw = 16;
  std::size_t classes = 3;
  double noise = 0.1;
  double contrast = 0.9;  // peak ring amplitude; drawn in [contrast/2, contrast]
  std::uint64_t seed = 0;
};

/// Concentric-ring images: class k is a soft ring whose radius lies in the
/// k-th band of [0.15, 0.45]*hw, with jittered centre, random contrast and
/// pixel noise. The class is a function of radius only, so the decision
/// boundary in pixel space is curved.
inline Dataset make_rings(const RingsOptions& o) {
  if (o.n == 0 || o.hw < 8 || o.classes < 2) throw ConfigError("rings: need n >= 1, hw >= 8, classes >= 2");
  if (!(o.noise >= 0.0)) throw ConfigError("rings: noise must be >= 0");
  if (!(o.contrast > 0.0 && o.contrast <= 1.0)) throw ConfigError("rings: contrast must be in (0,1]");
  RngStream rng(o.seed, 2);
  const double hw = static_cast<double>(o.hw);
  const double r_lo = 0.15 * hw, r_hi = 0.45 * hw;
  const double band = (r_hi - r_lo) / static_cast<double>(o.classes);
  const double width = std::max(0.6, 0.05 * hw);
  Dataset d{Tensor({o.n, 1, o.hw, o.hw}), std::vector<std::size_t>(o.n), o.classes};
  const std::size_t px = o.hw * o.hw;
  for (std::size_t i = 0; i < o.n; ++i) {
    const std::size_t y = rng.uniform_int(0, o.classes - 1);
    d.labels[i] = y;
    const double radius = r_lo + band * (static_cast<double>(y) + rng.uniform(0.2, 0.8));
    const double cy = 0.5 * (hw - 1.0) + rng.uniform(-1.0, 1.0) * hw / 16.0;
    const double cx = 0.5 * (hw - 1.0) + rng.uniform(-1.0, 1.0) * hw / 16.0;
    const double amp = rng.uniform(0.5 * o.contrast, o.contrast);
    const double bg = rng.uniform(0.05, 0.25);
    for (std::size_t h = 0; h < o.hw; ++h)
      for (std::size_t w = 0; w < o.hw; ++w) {
        const double dist = std::hypot(static_cast<double>(h) - cy, static_cast<double>(w) - cx);
        const double ring = amp * std::exp(-0.5 * (dist - radius) * (dist - radius) / (width * width));
        const double v = bg + ring + o.noise * rng.normal();
        d.images[i * px + h * o.hw + w] = detail::to_f32(std::clamp(v, 0.0, 1.0));
      }
  }
  return d;
}

inline constexpr std::string_view kDatasetMagic = "DAKD";

/// DAKD layout: "DAKD", u32 M, u32 C, u32 H, u32 W, f32 pixels row-major, u16 labels.
inline std::vector<char> encode_dataset(const Dataset& d) {
  d.validate();
  io::Writer w;
  w.bytes(kDatasetMagic);
  for (std::size_t i = 0; i < 4; ++i) w.u32(static_cast<std::uint32_t>(d.images.dim(i)));
  for (double v : d.images.data()) w.f32(static_cast<float>(v));
  for (std::size_t y : d.labels) w.u16(static_cast<std::uint16_t>(y));
  return w.buffer();
}

inline void save_dataset(const Dataset& d, const std::string& path) {
  io::Writer w;
  const auto bytes = encode_dataset(d);
  w.bytes(std::string_view(bytes.data(), bytes.size()));
  w.save(path);
}

/// Class count is not stored; it is max(label) + 1 unless `num_classes` is given.
inline Dataset decode_dataset(std::vector<char> bytes, std::size_t num_classes = 0) {
  io::Reader r(std::move(bytes), "dataset");
  if (r.bytes(std::min<std::size_t>(4, r.size()), "magic") != kDatasetMagic)
    throw MagicError("dataset: bad magic, expected \"DAKD\"", 0);
  Shape shape(4);
  const char* names[] = {"M", "C", "H", "W"};
  for (std::size_t i = 0; i < 4; ++i) shape[i] = r.u32(names[i]);
  const std::size_t count = shape_size(shape);
  if (count == 0) throw FormatError("dataset: empty image tensor", r.offset());
  const std::size_t expected = 20 + 4 * count + 2 * shape[0];
  if (r.size() != expected)
    throw TruncationError(std::string(r.size() < expected ? "dataset: truncated" : "dataset: trailing bytes") +
                              ": expected " + std::to_string(expected) + " bytes for " + shape_str(shape) +
                              ", file has " + std::to_string(r.size()),
                          std::min(r.size(), expected));
  Dataset d{Tensor(shape), std::vector<std::size_t>(shape[0]), 0};
  for (double& v : d.images.data()) {
    const std::size_t at = r.offset();
    v = r.f32("pixels");
    if (!(v >= 0.0 && v <= 1.0)) throw FormatError("dataset: pixel outside [0,1]", at);
  }
  std::size_t max_label = 0;
  for (auto& y : d.labels) {
    y = r.u16("labels");
    max_label = std::max(max_label, y);
  }
  d.num_classes = std::max(num_classes, max_label + 1);
  if (d.num_classes < 2) d.num_classes = 2;
  return d;
}

inline Dataset load_dataset(const std::string& path, std::size_t num_classes = 0) {
  return decode_dataset(io::Reader::slurp(path), num_classes);
}

}  // namespace daa

#endif  // DAATTACK_DATASET_HPP
