#ifndef DAATTACK_ARTIFACTS_HPP
#define DAATTACK_ARTIFACTS_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "binary_io.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace daa {

using ojson = nlohmann::ordered_json;

inline constexpr std::string_view kSchema = "daattack/1";
inline constexpr std::string_view kAdvSetMagic = "DAKA";
inline constexpr std::uint16_t kAdvSetVersion = 1;

inline std::string bytes_hash(const std::vector<char>& bytes) {
  return hex64(fnv1a(std::string_view(bytes.data(), bytes.size())));
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw ConfigError("write failed for '" + path + "'");
}

inline std::string read_text(const std::string& path) {
  const auto b = io::Reader::slurp(path);
  return {b.begin(), b.end()};
}

inline ojson parse_json_artifact(const std::string& text, const std::string& what) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(what + ": invalid JSON: " + e.what(), e.byte);
  }
}

// DAKA v1: "DAKA" u16 version, str config_hash, str source, str attack, u32 M,
// u32 rank, u32 dims[rank], then per example u32 position, u16 label,
// f64 x[...], f64 x_star[...].
inline std::vector<char> encode_adversarial_set(const AdversarialSet& s, const std::string& config_hash = "") {
  io::Writer w;
  w.bytes(kAdvSetMagic);
  w.u16(kAdvSetVersion);
  w.str(config_hash);
  w.str(s.source);
  w.str(s.attack);
  w.u32(static_cast<std::uint32_t>(s.size()));
  const Shape shape = s.empty() ? Shape{} : s.items.front().x.shape();
  w.u32(static_cast<std::uint32_t>(shape.size()));
  for (std::size_t d : shape) w.u32(static_cast<std::uint32_t>(d));
  for (const auto& e : s.items) {
    if (e.x.shape() != shape || e.x_star.shape() != shape) throw StructuralError("adversarial set: mixed shapes");
    w.u32(static_cast<std::uint32_t>(e.position));
    w.u16(static_cast<std::uint16_t>(e.label));
    for (double v : e.x.data()) w.f64(v);
    for (double v : e.x_star.data()) w.f64(v);
  }
  return w.buffer();
}

inline AdversarialSet decode_adversarial_set(std::vector<char> bytes, std::string* config_hash = nullptr) {
  io::Reader r(std::move(bytes), "adversarial set");
  if (r.size() < 4 || r.bytes(4, "magic") != kAdvSetMagic)
    throw MagicError("adversarial set: bad magic, expected \"DAKA\"", 0);
  const std::uint16_t version = r.u16("version");
  if (version != kAdvSetVersion)
    throw VersionError("adversarial set: unsupported format version " + std::to_string(version) +
                           " (this build reads version " + std::to_string(kAdvSetVersion) + ")",
                       4);
  AdversarialSet s;
  std::string hash = r.bytes(r.u32("hash length"), "config hash");
  if (config_hash) *config_hash = std::move(hash);
  s.source = r.bytes(r.u32("source length"), "source");
  s.attack = r.bytes(r.u32("attack length"), "attack");
  const std::uint32_t m = r.u32("M");
  Shape shape(r.u32("rank"));
  for (auto& d : shape) d = r.u32("dims");
  const std::size_t n = shape_size(shape);
  r.need(static_cast<std::size_t>(m) * (6 + 16 * n), "examples");
  for (std::uint32_t i = 0; i < m; ++i) {
    AdversarialExample e{Tensor(shape), Tensor(shape), 0, 0};
    e.position = r.u32("position");
    e.label = r.u16("label");
    for (double& v : e.x.data()) v = r.f64("x");
    for (double& v : e.x_star.data()) v = r.f64("x_star");
    s.items.push_back(std::move(e));
  }
  if (r.remaining() != 0) throw FormatError("adversarial set: trailing bytes", r.offset());
  return s;
}

inline ojson row_to_json(const TransferRow& r) {
  return {{"attack", r.attack}, {"source", r.source},   {"target", r.target},          {"success_rate", r.success_rate},
          {"M", r.examples},    {"seed", r.seed},       {"white_box", r.white_box}};
}

inline TransferRow row_from_json(const ojson& j) {
  try {
    return {j.at("attack").get<std::string>(), j.at("source").get<std::string>(), j.at("target").get<std::string>(),
            j.at("success_rate").get<double>(), j.at("M").get<std::size_t>(),     j.at("white_box").get<bool>(),
            j.at("seed").get<std::uint64_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(std::string("malformed report row: ") + e.what());
  }
}

inline ojson rows_to_json(const std::vector<TransferRow>& rows) {
  ojson a = ojson::array();
  for (const auto& r : rows) a.push_back(row_to_json(r));
  return a;
}

/// CSV with columns attack,source,target,success_rate,M,seed.
inline std::string rows_to_csv(const std::vector<TransferRow>& rows) {
  std::string out = "attack,source,target,success_rate,M,seed\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.4f", r.success_rate);
    out += r.attack + "," + r.source + "," + r.target + "," + buf + "," + std::to_string(r.examples) + "," +
           std::to_string(r.seed) + "\n";
  }
  return out;
}

/// Header shared by every JSON artifact.
inline ojson artifact_header(std::string_view kind, const std::string& config_hash, const std::string& dataset_hash) {
  return {{"schema", kSchema}, {"kind", kind}, {"config_hash", config_hash}, {"dataset_hash", dataset_hash}};
}

/// Merge row-bearing artifacts (attack outputs, sweep outputs, earlier
/// reports). All must share the schema and the dataset hash. Rows are
/// unioned (exact duplicates dropped) and stable-sorted by
/// (attack, source, target); sweeps are carried through in input order.
/// Zero inputs give a valid empty report.
inline ojson merge_reports(const std::vector<ojson>& docs, const ojson& config_echo = ojson::object(),
                           const std::string& config_hash = "") {
  std::string dataset_hash;
  std::vector<TransferRow> rows;
  ojson sweeps = ojson::array();
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const ojson& d = docs[i];
    const std::string schema = d.value("schema", "");
    if (schema != kSchema)
      throw ArtifactError("merge: artifact " + std::to_string(i) + " has schema '" + schema + "', expected '" +
                          std::string(kSchema) + "'");
    const std::string dh = d.value("dataset_hash", "");
    if (i == 0) dataset_hash = dh;
    else if (dh != dataset_hash)
      throw ArtifactError("merge: dataset hash " + dh + " does not match " + dataset_hash);
    if (d.contains("rows"))
      for (const auto& r : d.at("rows")) {
        TransferRow row = row_from_json(r);
        if (std::find(rows.begin(), rows.end(), row) == rows.end()) rows.push_back(std::move(row));
      }
    if (d.contains("sweeps"))
      for (const auto& s : d.at("sweeps")) sweeps.push_back(s);
    if (d.value("kind", "") == "sweep") sweeps.push_back(d.at("sweep"));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const TransferRow& a, const TransferRow& b) {
    return std::tie(a.attack, a.source, a.target) < std::tie(b.attack, b.source, b.target);
  });
  ojson out = artifact_header("report", config_hash, dataset_hash);
  out["config"] = config_echo;
  out["rows"] = rows_to_json(rows);
  out["sweeps"] = sweeps;
  out["similarity"] = ojson::array();
  return out;
}

inline std::vector<TransferRow> report_rows(const ojson& report) {
  std::vector<TransferRow> rows;
  for (const auto& r : report.at("rows")) rows.push_back(row_from_json(r));
  return rows;
}

}  // namespace daa

#endif  // DAATTACK_ARTIFACTS_HPP
