#include "binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "cte/errors.hpp"

namespace cte::detail {

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s);
}

std::string_view ByteReader::bytes(std::size_t count) {
  if (count > remaining()) {
    throw IoError("truncated payload: wanted " + std::to_string(count) +
                  " bytes at offset " + std::to_string(pos_) + ", have " +
                  std::to_string(remaining()));
  }
  std::string_view view(data_.data() + pos_, count);
  pos_ += count;
  return view;
}

std::uint8_t ByteReader::u8() {
  return static_cast<std::uint8_t>(bytes(1)[0]);
}

std::uint32_t ByteReader::u32() {
  auto raw = bytes(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(raw[i])) << (8 * i);
  }
  return v;
}

std::uint64_t ByteReader::u64() {
  auto raw = bytes(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(raw[i])) << (8 * i);
  }
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
  const std::uint32_t len = u32();
  return std::string(bytes(len));
}

void ByteReader::expect_magic(std::string_view magic) {
  if (remaining() < magic.size() ||
      std::memcmp(data_.data() + pos_, magic.data(), magic.size()) != 0) {
    throw FormatError("bad magic: expected \"" + std::string(magic) + "\"");
  }
  pos_ += magic.size();
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> data((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return data;
}

void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace cte::detail
