#include "lvtts/nn/checkpoint.hpp"

#include <fstream>
#include <map>

#include "lvtts/binary_io.hpp"
#include "lvtts/errors.hpp"

namespace lvtts::nn {

namespace {
constexpr const char* kMagic = "LVNN1";
}

void write_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  io::write_magic(os, kMagic);
  for (const NamedTensor& t : tensors) {
    io::write_u32(os, static_cast<std::uint32_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    io::write_u32(os, static_cast<std::uint32_t>(t.value.rank()));
    for (std::size_t d : t.value.shape()) io::write_u64(os, d);
    for (double v : t.value.values()) io::write_f64(os, v);
  }
  if (!os) throw FormatError("failed writing " + path);
}

std::vector<NamedTensor> read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint " + path);
  io::expect_magic(is, kMagic, path);
  std::vector<NamedTensor> out;
  while (is.peek() != std::char_traits<char>::eof()) {
    const std::uint32_t name_len = io::read_u32(is);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw FormatError(path + ": truncated tensor name");
    const std::uint32_t rank = io::read_u32(is);
    if (rank == 0 || rank > 3) throw FormatError(path + ": tensor " + name + " has rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = io::read_u64(is);
    Tensor value(shape);
    for (double& v : value.values()) v = io::read_f64(is);
    out.push_back({std::move(name), std::move(value)});
  }
  return out;
}

void save_params(const std::string& path, const ParamList& params) {
  std::vector<NamedTensor> tensors;
  tensors.reserve(params.size());
  for (const Param* p : params) tensors.push_back({p->name, p->value});
  write_checkpoint(path, tensors);
}

void load_params(const std::string& path, const ParamList& params) {
  std::map<std::string, Tensor> by_name;
  for (NamedTensor& t : read_checkpoint(path)) by_name[t.name] = std::move(t.value);
  for (Param* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw FormatError(path + ": missing tensor " + p->name);
    if (it->second.shape() != p->value.shape()) {
      throw FormatError(path + ": tensor " + p->name + " has shape " +
                        shape_string(it->second.shape()) + ", model expects " +
                        shape_string(p->value.shape()));
    }
    p->value = it->second;
  }
}

}  // namespace lvtts::nn
