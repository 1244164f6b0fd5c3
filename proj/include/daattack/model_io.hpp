#ifndef DAATTACK_MODEL_IO_HPP
#define DAATTACK_MODEL_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "binary_io.hpp"
#include "errors.hpp"
#include "net.hpp"

namespace daa {

inline constexpr std::string_view kModelMagic = "DAKM";
inline constexpr std::uint16_t kModelFormatVersion = 1;

// DAKM v1, little-endian:
//   "DAKM" u16 version
//   u32 input_rank, u32 dims[input_rank]
//   u32 n_layers, n_layers x {u8 kind, u32 in, u32 out, u32 k}
//   u8 adversarial, f64 epsilon, u32 steps, u64 seed
//   for each dense/conv layer: f64 weight[...], f64 bias[...]
inline std::vector<char> encode_model(const Classifier& m) {
  io::Writer w;
  w.bytes(kModelMagic);
  w.u16(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(m.input_shape().size()));
  for (std::size_t d : m.input_shape()) w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(m.spec().layers.size()));
  for (const LayerSpec& l : m.spec().layers) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    w.u32(static_cast<std::uint32_t>(l.in));
    w.u32(static_cast<std::uint32_t>(l.out));
    w.u32(static_cast<std::uint32_t>(l.k));
  }
  w.u8(m.training.adversarial ? 1 : 0);
  w.f64(m.training.epsilon);
  w.u32(m.training.steps);
  w.u64(m.seed);
  for (const LayerParams& p : m.params()) {
    for (double v : p.weight.data()) w.f64(v);
    for (double v : p.bias.data()) w.f64(v);
  }
  return w.buffer();
}

inline void save_model(const Classifier& m, const std::string& path) {
  const auto bytes = encode_model(m);
  io::Writer w;
  w.bytes(std::string_view(bytes.data(), bytes.size()));
  w.save(path);
}

inline Classifier decode_model(std::vector<char> bytes) {
  io::Reader r(std::move(bytes), "model");
  if (r.size() < 4 || r.bytes(4, "magic") != kModelMagic) throw MagicError("model: bad magic, expected \"DAKM\"", 0);
  const std::uint16_t version = r.u16("version");
  if (version != kModelFormatVersion)
    throw VersionError("model: unsupported format version " + std::to_string(version) + " (this build reads version " +
                           std::to_string(kModelFormatVersion) + ")",
                       4);
  ModelSpec spec;
  const std::uint32_t rank = r.u32("input rank");
  if (rank == 0 || rank > 4) throw FormatError("model: invalid input rank " + std::to_string(rank), r.offset() - 4);
  for (std::uint32_t i = 0; i < rank; ++i) spec.input_shape.push_back(r.u32("input shape"));
  const std::uint32_t n_layers = r.u32("layer count");
  if (n_layers > 1024) throw FormatError("model: implausible layer count", r.offset() - 4);
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const std::size_t at = r.offset();
    LayerSpec l;
    const std::uint8_t kind = r.u8("layer kind");
    if (kind < 1 || kind > 4) throw FormatError("model: unknown layer kind " + std::to_string(kind), at);
    l.kind = static_cast<LayerKind>(kind);
    l.in = r.u32("layer in");
    l.out = r.u32("layer out");
    l.k = r.u32("layer k");
    spec.layers.push_back(l);
  }
  TrainingDescriptor td;
  td.adversarial = r.u8("training mode") != 0;
  td.epsilon = r.f64("training epsilon");
  td.steps = r.u32("training steps");
  const std::uint64_t seed = r.u64("seed");

  const std::size_t table_end = r.offset();
  try {
    layer_shapes(spec);
  } catch (const StructuralError& e) {
    throw FormatError(std::string("model: inconsistent layer table: ") + e.what(), table_end);
  }
  std::vector<LayerParams> params;
  for (const LayerSpec& l : spec.layers) {
    LayerParams p;
    if (l.kind == LayerKind::dense) p = {Tensor({l.out, l.in}), Tensor({l.out})};
    if (l.kind == LayerKind::conv) p = {Tensor({l.out, l.in, l.k, l.k}), Tensor({l.out})};
    r.need(8 * (p.weight.size() + p.bias.size()), "parameters");
    for (double& v : p.weight.data()) v = r.f64("weight");
    for (double& v : p.bias.data()) v = r.f64("bias");
    params.push_back(std::move(p));
  }
  if (r.remaining() != 0) throw FormatError("model: trailing bytes after parameters", r.offset());
  Classifier m(std::move(spec), std::move(params));
  m.training = td;
  m.seed = seed;
  return m;
}

inline Classifier load_model(const std::string& path) { return decode_model(io::Reader::slurp(path)); }

}  // namespace daa

#endif  // DAATTACK_MODEL_IO_HPP
