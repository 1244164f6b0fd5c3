#ifndef DAATTACK_ZOO_HPP
#define DAATTACK_ZOO_HPP

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "net.hpp"

namespace daa {

namespace detail {

inline std::vector<std::string_view> split_view(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i)
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  return out;
}

inline std::size_t parse_count(std::string_view s, std::string_view ctx) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || v == 0)
    throw ConfigError("architecture '" + std::string(ctx) + "': bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

/// Architecture descriptors:
///   "linear"                 flatten -> dense(K)
///   "mlp:64,32"              flatten -> [dense(w) relu]* -> dense(K)
///   "cnn:4k3,8k5/32"         [conv(c, k) relu]* -> flatten -> [dense(w) relu]* -> dense(K)
inline ModelSpec parse_architecture(std::string_view arch, const Shape& input, std::size_t classes) {
  ModelSpec spec{input, {}};
  const auto colon = arch.find(':');
  const std::string_view kind = arch.substr(0, colon);
  const std::string_view body = colon == std::string_view::npos ? std::string_view{} : arch.substr(colon + 1);
  std::size_t features = shape_size(input);
  const auto dense_tail = [&](std::string_view widths) {
    spec.layers.push_back(LayerSpec::flatten());
    for (auto w : detail::split_view(widths, ',')) {
      const std::size_t n = detail::parse_count(w, arch);
      spec.layers.push_back(LayerSpec::dense(features, n));
      spec.layers.push_back(LayerSpec::relu());
      features = n;
    }
    spec.layers.push_back(LayerSpec::dense(features, classes));
  };
  if (kind == "linear" && body.empty()) {
    dense_tail({});
  } else if (kind == "mlp") {
    dense_tail(body);
  } else if (kind == "cnn") {
    if (input.size() != 3) throw ConfigError("architecture '" + std::string(arch) + "': cnn needs [C,H,W] input");
    const auto slash = body.find('/');
    std::size_t channels = input[0];
    for (auto c : detail::split_view(body.substr(0, slash), ',')) {
      const auto kpos = c.find('k');
      if (kpos == std::string_view::npos) throw ConfigError("architecture '" + std::string(arch) + "': conv needs <C>k<K>");
      const std::size_t out = detail::parse_count(c.substr(0, kpos), arch);
      const std::size_t k = detail::parse_count(c.substr(kpos + 1), arch);
      spec.layers.push_back(LayerSpec::conv(channels, out, k));
      spec.layers.push_back(LayerSpec::relu());
      channels = out;
    }
    features = channels * input[1] * input[2];
    dense_tail(slash == std::string_view::npos ? std::string_view{} : body.substr(slash + 1));
  } else {
    throw ConfigError("unknown architecture '" + std::string(arch) + "'");
  }
  try {
    layer_shapes(spec);
  } catch (const StructuralError& e) {
    throw ConfigError("architecture '" + std::string(arch) + "': " + e.what());
  }
  return spec;
}

}  // namespace daa

#endif  // DAATTACK_ZOO_HPP
