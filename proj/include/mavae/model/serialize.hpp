// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mavae/model/mavae.hpp"

namespace mavae::model {

/// Checkpoint file layout (all integers little-endian, reals as IEEE-754
/// binary64 bit patterns, little-endian):
///
///   magic    8 bytes  "MAVAECKP"
///   version  u32      kCheckpointVersion
///   config   u32 field count (8), then u64 each: window, input_width,
///            latent_width, heads, key_width (resolved), outer_units,
///            inner_units, no_attention (0/1)
///   records  u32 count, then per record:
///            u32 name length, name bytes, u32 rank, u64 extents[rank],
///            f64 values[prod(extents)] in row-major order
///
/// Model weights use the names from ModelParams::named(); any other record is
/// an extra (normalisation statistics, training metadata).
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  MavaeConfig config;
  ModelParams params;
  std::vector<std::pair<std::string, Tensor>> extras;

  const Tensor* find_extra(const std::string& name) const;
  void set_extra(const std::string& name, Tensor value);
};

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mavae::model
