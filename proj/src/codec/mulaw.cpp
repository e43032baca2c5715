#include "lvtts/codec/mulaw.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "lvtts/errors.hpp"

namespace lvtts::codec {

namespace {

std::atomic<std::uint64_t> g_clamped{0};

void check_unit(double v, const char* what) {
  if (!(std::abs(v) <= 1.0)) {
    throw DomainError(std::string(what) + ": |" + std::to_string(v) + "| > 1");
  }
}

}  // namespace

void CodecConfig::validate() const {
  if (!(mu > 0.0)) throw ConfigError("codec.mu must be positive");
  if (bits < 1 || bits > 16) throw ConfigError("codec.bits must be in [1, 16]");
  if (levels != (1 << bits)) {
    throw ConfigError("codec.levels " + std::to_string(levels) + " != 2^" + std::to_string(bits));
  }
}

double compand(double x, const CodecConfig& cfg) {
  check_unit(x, "compand");
  const double y = std::log1p(cfg.mu * std::abs(x)) / std::log1p(cfg.mu);
  return std::copysign(y, x);
}

double expand(double y, const CodecConfig& cfg) {
  check_unit(y, "expand");
  const double x = std::expm1(std::abs(y) * std::log1p(cfg.mu)) / cfg.mu;
  return std::copysign(x, y);
}

int quantize(double y, const CodecConfig& cfg) {
  if (std::isnan(y)) throw DomainError("quantize: NaN input");
  if (y < -1.0 || y > 1.0) {
    g_clamped.fetch_add(1, std::memory_order_relaxed);
    y = std::clamp(y, -1.0, 1.0);
  }
  const int cls = static_cast<int>(std::floor((y + 1.0) / 2.0 * cfg.levels));
  return std::min(cfg.levels - 1, cls);
}

double dequantize(int cls, const CodecConfig& cfg) {
  if (cls < 0 || cls >= cfg.levels) {
    throw DomainError("dequantize: class " + std::to_string(cls) + " outside [0, " +
                      std::to_string(cfg.levels) + ")");
  }
  return (cls + 0.5) * 2.0 / cfg.levels - 1.0;
}

int encode(double x, const CodecConfig& cfg) { return quantize(compand(x, cfg), cfg); }

double decode(int cls, const CodecConfig& cfg) { return expand(dequantize(cls, cfg), cfg); }

double uniform_roundtrip(double x, const CodecConfig& cfg) { return dequantize(quantize(x, cfg), cfg); }

std::uint64_t clamp_count() { return g_clamped.load(); }
void reset_clamp_count() { g_clamped.store(0); }

}  // namespace lvtts::codec
