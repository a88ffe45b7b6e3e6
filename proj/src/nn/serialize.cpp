#include "fgn/nn/serialize.hpp"

#include <fstream>
#include <unordered_map>

#include "fgn/binary_io.hpp"
#include "fgn/errors.hpp"

namespace fgn::nn {

namespace {
constexpr std::string_view kMagic = "FGNMDL1";
}

void save_model_file(const std::filesystem::path& path, const ModelFile& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.metadata.size()));
  out.write(model.metadata.data(), static_cast<std::streamsize>(model.metadata.size()));
  binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.records.size()));
  for (const NamedTensor& rec : model.records) {
    binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.name.size()));
    out.write(rec.name.data(), static_cast<std::streamsize>(rec.name.size()));
    binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.value.rank()));
    for (std::size_t d : rec.value.shape()) binary::write_le<std::uint64_t>(out, d);
    for (double v : rec.value.data()) binary::write_f64(out, v);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

ModelFile load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  const std::string file = path.string();
  binary::expect_magic(in, std::string(kMagic), file);
  ModelFile model;
  auto meta_len = binary::read_le<std::uint32_t>(in, file + " metadata length");
  model.metadata.resize(meta_len);
  if (!in.read(model.metadata.data(), meta_len)) throw FormatError("truncated metadata in " + file);
  auto count = binary::read_le<std::uint32_t>(in, file + " record count");
  for (std::uint32_t r = 0; r < count; ++r) {
    NamedTensor rec;
    auto name_len = binary::read_le<std::uint32_t>(in, file + " record name length");
    rec.name.resize(name_len);
    if (!in.read(rec.name.data(), name_len)) throw FormatError("truncated record name in " + file);
    auto rank = binary::read_le<std::uint32_t>(in, file + " rank");
    if (rank == 0 || rank > 8) throw FormatError(file + ": record " + rec.name + " has invalid rank");
    Shape shape(rank);
    for (auto& d : shape) {
      d = binary::read_le<std::uint64_t>(in, file + " dims");
      if (d == 0 || d > (1ULL << 32)) throw FormatError(file + ": record " + rec.name + " has invalid dims");
    }
    std::vector<double> data(shape_size(shape));
    for (double& v : data) v = binary::read_f64(in, file + " payload of " + rec.name);
    rec.value = Tensor(std::move(shape), std::move(data));
    model.records.push_back(std::move(rec));
  }
  return model;
}

void assign_parameters(const ModelFile& model, const std::vector<Parameter*>& params) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const NamedTensor& rec : model.records) by_name[rec.name] = &rec.value;
  for (Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw FormatError("model file lacks parameter " + p->name);
    if (it->second->shape() != p->value.shape())
      throw FormatError("parameter " + p->name + " has shape " + shape_string(it->second->shape()) + ", expected " +
                        shape_string(p->value.shape()));
    p->value = *it->second;
    p->grad = Tensor(p->value.shape());
  }
}

std::vector<NamedTensor> snapshot_parameters(const std::vector<Parameter*>& params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back({p->name, p->value});
  return out;
}

}  // namespace fgn::nn
