#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

#include "vsum/common.hpp"

namespace vsum::io {

// Little-endian binary buffer builders/readers shared by the feature,
// checkpoint and transform file formats.

struct ByteWriter {
  std::string buf;

  void u8(std::uint8_t v) { buf.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    u64(bits);
  }
  void bytes(std::string_view s) { buf.append(s); }
  // length-prefixed (u32) string
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
};

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string context)
      : data_(data), context_(std::move(context)) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == data_.size(); }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string str() { return bytes(u32()); }

  void expect_magic(std::string_view magic) {
    if (bytes(magic.size()) != magic)
      throw ParseError(context_ + ": bad magic at offset 0");
  }
  void expect_end() {
    if (!at_end())
      throw ParseError(context_ + ": trailing bytes at offset " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size())
      throw ParseError(context_ + ": truncated at offset " + std::to_string(pos_));
  }

  std::string_view data_;
  std::string context_;
  std::size_t pos_ = 0;
};

// Whole-file helpers; writes go through a temp file + rename.
std::string read_file(const std::filesystem::path& path);
void atomic_write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace vsum::io
