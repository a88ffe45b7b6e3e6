#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fgn/nn/tensor.hpp"

namespace fgn::nn {

// FGNMDL1 model file:
//   "FGNMDL1"                      7-byte magic (format version included)
//   u32 metadata length, bytes     free-form UTF-8 (the harness stores JSON)
//   u32 record count
//   per record: u32 name length, name bytes, u32 rank, rank x u64 dims,
//               product(dims) x float64 payload
// All integers and floats are little-endian.
struct NamedTensor {
  std::string name;
  Tensor value;
};

struct ModelFile {
  std::string metadata;
  std::vector<NamedTensor> records;
};

void save_model_file(const std::filesystem::path& path, const ModelFile& model);
// Throws IoError when unreadable, FormatError on bad magic or truncation.
ModelFile load_model_file(const std::filesystem::path& path);

// Copies records into parameters by name; every parameter must be present
// with a matching shape (FormatError otherwise).
void assign_parameters(const ModelFile& model, const std::vector<Parameter*>& params);
std::vector<NamedTensor> snapshot_parameters(const std::vector<Parameter*>& params);

}  // namespace fgn::nn
