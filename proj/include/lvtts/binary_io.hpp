#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

namespace lvtts::io {

// Explicit little-endian encoding independent of host byte order.
void write_u16(std::ostream& os, std::uint16_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
void write_magic(std::ostream& os, const std::string& magic);

std::uint16_t read_u16(std::istream& is);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);
// Throws FormatError unless the next bytes equal `magic`.
void expect_magic(std::istream& is, const std::string& magic, const std::string& path);

}  // namespace lvtts::io
