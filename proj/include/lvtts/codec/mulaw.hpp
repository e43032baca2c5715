#pragma once

#include <cstddef>
#include <cstdint>

namespace lvtts::codec {

struct CodecConfig {
  double mu = 255.0;
  int levels = 256;
  int bits = 8;

  // Throws ConfigError unless levels == 2^bits and mu > 0.
  void validate() const;
};

// sign(x) ln(1 + mu|x|) / ln(1 + mu). Throws DomainError for |x| > 1.
double compand(double x, const CodecConfig& cfg = {});
double expand(double y, const CodecConfig& cfg = {});

// Half-open bins over [-1, 1] with the top edge folded into the last class.
// Inputs outside [-1, 1] are clamped and counted rather than rejected.
int quantize(double y, const CodecConfig& cfg = {});
double dequantize(int cls, const CodecConfig& cfg = {});

int encode(double x, const CodecConfig& cfg = {});
double decode(int cls, const CodecConfig& cfg = {});

// Same bins applied directly to x, no companding.
double uniform_roundtrip(double x, const CodecConfig& cfg = {});

// Process-wide count of clamped quantizer inputs.
std::uint64_t clamp_count();
void reset_clamp_count();

}  // namespace lvtts::codec
