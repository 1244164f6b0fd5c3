#ifndef DAATTACK_BINARY_IO_HPP
#define DAATTACK_BINARY_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace daa::io {

/// Little-endian byte sink.
class Writer {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }

  const std::vector<char>& buffer() const noexcept { return buf_; }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open '" + path + "' for writing");
    f.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!f) throw ConfigError("write failed for '" + path + "'");
  }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::vector<char> buf_;
};

/// Little-endian byte source with offset-carrying truncation errors.
class Reader {
 public:
  explicit Reader(std::vector<char> data, std::string what = "file") : data_(std::move(data)), what_(std::move(what)) {}

  static std::vector<char> slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  }

  std::size_t offset() const noexcept { return pos_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

  /// Throws TruncationError unless `n` more bytes are available.
  void need(std::size_t n, std::string_view field) const {
    if (remaining() < n)
      throw TruncationError(what_ + ": truncated while reading " + std::string(field) + ": expected " +
                                std::to_string(pos_ + n) + " bytes, file has " + std::to_string(data_.size()),
                            pos_);
  }

  std::string bytes(std::size_t n, std::string_view field) {
    need(n, field);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8(std::string_view f) { return static_cast<std::uint8_t>(get(1, f)); }
  std::uint16_t u16(std::string_view f) { return static_cast<std::uint16_t>(get(2, f)); }
  std::uint32_t u32(std::string_view f) { return static_cast<std::uint32_t>(get(4, f)); }
  std::uint64_t u64(std::string_view f) { return get(8, f); }
  float f32(std::string_view f) { return std::bit_cast<float>(u32(f)); }
  double f64(std::string_view f) { return std::bit_cast<double>(u64(f)); }
  std::string str(std::string_view f) { return bytes(u32(f), f); }

 private:
  std::uint64_t get(int n, std::string_view field) {
    need(static_cast<std::size_t>(n), field);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::vector<char> data_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace daa::io

#endif  // DAATTACK_BINARY_IO_HPP
