#pragma once

#include <string>
#include <vector>

#include "lvtts/nn/param.hpp"

namespace lvtts::nn {

// Little-endian parameter file:
//   "LVNN1", then per tensor: u32 name length, name bytes, u32 rank,
//   rank x u64 dims, prod(dims) x f64 values.
// Records run until end of file.
struct NamedTensor {
  std::string name;
  Tensor value;
};

void write_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::string& path);

void save_params(const std::string& path, const ParamList& params);
// Every param must appear in the file with the same shape.
void load_params(const std::string& path, const ParamList& params);

}  // namespace lvtts::nn
