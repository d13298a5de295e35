#pragma once

// Little-endian byte (de)serialization shared by the CTED/CTES/CTEQ/CTEC
// and index formats.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cte::detail {

class ByteWriter {
 public:
  void bytes(std::string_view raw) { out_.append(raw); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  // u32 length followed by the raw UTF-8 bytes.
  void str(std::string_view s);

  const std::string& buffer() const { return out_; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const char> data) : data_(data) {}

  std::string_view bytes(std::size_t count);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string str();

  // Throws FormatError unless the next bytes equal `magic`.
  void expect_magic(std::string_view magic);

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  std::span<const char> data_;
  std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view data);

}  // namespace cte::detail
