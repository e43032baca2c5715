#include "lvtts/binary_io.hpp"

#include <bit>
#include <vector>

#include "lvtts/errors.hpp"

namespace lvtts::io {

namespace {

template <typename T>
void write_le(std::ostream& os, T v) {
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  }
  os.write(bytes, sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw FormatError("unexpected end of file");
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void write_u16(std::ostream& os, std::uint16_t v) { write_le(os, v); }
void write_u32(std::ostream& os, std::uint32_t v) { write_le(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { write_le(os, v); }
void write_f64(std::ostream& os, double v) { write_le(os, std::bit_cast<std::uint64_t>(v)); }

void write_magic(std::ostream& os, const std::string& magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

std::uint16_t read_u16(std::istream& is) { return read_le<std::uint16_t>(is); }
std::uint32_t read_u32(std::istream& is) { return read_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return read_le<std::uint64_t>(is); }
double read_f64(std::istream& is) { return std::bit_cast<double>(read_le<std::uint64_t>(is)); }

void expect_magic(std::istream& is, const std::string& magic, const std::string& path) {
  std::vector<char> buf(magic.size());
  if (!is.read(buf.data(), static_cast<std::streamsize>(buf.size())) ||
      std::string(buf.begin(), buf.end()) != magic) {
    throw FormatError(path + ": missing magic \"" + magic + "\"");
  }
}

}  // namespace lvtts::io
