// SPDX-License-Identifier: Apache-2.0
#include "mavae/model/serialize.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "mavae/binary_io.hpp"
#include "mavae/errors.hpp"

namespace mavae::model {
namespace {

constexpr char kMagic[8] = {'M', 'A', 'V', 'A', 'E', 'C', 'K', 'P'};
constexpr std::uint32_t kConfigFields = 8;

void write_record(std::ostream& out, const std::string& name, const Tensor& t) {
  binary::put_string(out, name);
  binary::put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t extent : t.shape()) binary::put_u64(out, extent);
  for (double v : t.values()) binary::put_f64(out, v);
}

std::pair<std::string, Tensor> read_record(std::istream& in) {
  std::string name = binary::get_string(in, 4096);
  const std::uint32_t rank = binary::get_u32(in);
  if (rank > 8) throw DataError("record " + name + ": implausible rank");
  Shape shape(rank);
  for (auto& extent : shape) extent = binary::get_u64(in);
  const std::size_t count = element_count(shape);
  if (count > (std::size_t{1} << 32)) throw DataError("record " + name + ": implausible size");
  std::vector<double> values(count);
  for (double& v : values) v = binary::get_f64(in);
  return {std::move(name), Tensor(std::move(shape), std::move(values))};
}

}  // namespace

const Tensor* Checkpoint::find_extra(const std::string& name) const {
  for (const auto& [n, t] : extras) {
    if (n == name) return &t;
  }
  return nullptr;
}

void Checkpoint::set_extra(const std::string& name, Tensor value) {
  for (auto& [n, t] : extras) {
    if (n == name) {
      t = std::move(value);
      return;
    }
  }
  extras.emplace_back(name, std::move(value));
}

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  const MavaeConfig& c = checkpoint.config;
  check_params(c, checkpoint.params);
  out.write(kMagic, sizeof kMagic);
  binary::put_u32(out, kCheckpointVersion);
  binary::put_u32(out, kConfigFields);
  for (std::uint64_t v : {std::uint64_t{c.window}, std::uint64_t{c.input_width},
                          std::uint64_t{c.latent_width}, std::uint64_t{c.heads},
                          std::uint64_t{c.resolved_key_width()}, std::uint64_t{c.outer_units},
                          std::uint64_t{c.inner_units}, std::uint64_t{c.no_attention ? 1u : 0u}}) {
    binary::put_u64(out, v);
  }
  const auto weights = checkpoint.params.named();
  binary::put_u32(out, static_cast<std::uint32_t>(weights.size() + checkpoint.extras.size()));
  for (const auto& [name, tensor] : weights) write_record(out, name, *tensor);
  for (const auto& [name, tensor] : checkpoint.extras) write_record(out, name, tensor);
  if (!out) throw PathError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  binary::read_exact(in, magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw DataError("not a checkpoint file");
  const std::uint32_t version = binary::get_u32(in);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  if (binary::get_u32(in) != kConfigFields) throw DataError("unexpected checkpoint config block");
  Checkpoint ck;
  MavaeConfig& c = ck.config;
  c.window = binary::get_u64(in);
  c.input_width = binary::get_u64(in);
  c.latent_width = binary::get_u64(in);
  c.heads = binary::get_u64(in);
  c.key_width = binary::get_u64(in);
  c.outer_units = binary::get_u64(in);
  c.inner_units = binary::get_u64(in);
  c.no_attention = binary::get_u64(in) != 0;
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint config invalid: ") + e.what());
  }

  const std::uint32_t count = binary::get_u32(in);
  std::map<std::string, Tensor> records;
  std::vector<std::string> order;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, tensor] = read_record(in);
    if (!records.emplace(name, std::move(tensor)).second) {
      throw DataError("duplicate checkpoint record " + name);
    }
    order.push_back(name);
  }

  ck.params = zero_params(c);
  for (auto& [name, slot] : ck.params.named()) {
    auto it = records.find(name);
    if (it == records.end()) throw DataError("checkpoint is missing weight " + name);
    if (it->second.shape() != slot->shape()) {
      throw DataError("checkpoint weight " + name + " has shape " + to_string(it->second.shape()) +
                      ", expected " + to_string(slot->shape()));
    }
    *slot = std::move(it->second);
    records.erase(it);
  }
  for (const std::string& name : order) {
    if (auto it = records.find(name); it != records.end()) {
      ck.extras.emplace_back(name, std::move(it->second));
    }
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PathError("cannot write checkpoint " + path.string());
  write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PathError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace mavae::model
