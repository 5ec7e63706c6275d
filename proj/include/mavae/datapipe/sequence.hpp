// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mavae/numerics/tensor.hpp"

namespace mavae::data {

inline constexpr double kDefaultRate = 2.0;
inline constexpr const char* kNormalLabel = "normal";

/// One measured channel at its native rate.
struct RawChannel {
  std::string name;
  double rate = 0.0;  // Hz
  std::vector<double> values;

  /// Throws ContractError unless rate > 0 and at least two samples.
  void validate() const;
  double duration() const { return static_cast<double>(values.size() - 1) / rate; }
};

/// A multichannel measurement on a common grid. `values` is [T, d_X].
struct Sequence {
  std::string id;
  std::string label = kNormalLabel;
  double rate = kDefaultRate;
  std::vector<std::string> channels;
  Tensor values;

  std::size_t length() const { return values.rank() == 2 ? values.dim(0) : 0; }
  std::size_t width() const { return values.rank() == 2 ? values.dim(1) : 0; }
  bool is_anomalous() const { return label != kNormalLabel; }

  /// Throws DataError on T < 2, NaN, or a channel-name count mismatch.
  void validate() const;

  friend bool operator==(const Sequence&, const Sequence&) = default;
};

// Binary sequence file, little-endian:
//   magic "MAVAESEQ", u32 version, string id, string label, f64 rate,
//   u64 T, u64 d, d strings (channel names), T*d f64 row-major.
// Strings are u32 length + bytes.
inline constexpr std::uint32_t kSequenceVersion = 1;

void write_sequence(std::ostream& out, const Sequence& seq);
Sequence read_sequence(std::istream& in);
void save_sequence(const std::filesystem::path& path, const Sequence& seq);
Sequence load_sequence(const std::filesystem::path& path);

/// CSV with a header row of channel names; id, label and rate ride in a
/// leading "# id=...,label=...,rate=..." comment line.
void write_sequence_csv(std::ostream& out, const Sequence& seq);
Sequence read_sequence_csv(std::istream& in);

// --- manifest -----------------------------------------------------------------

enum class Split { train, val, test };

const char* to_string(Split split);
Split parse_split(const std::string& text);

struct ManifestEntry {
  Split split = Split::train;
  std::string id;
  std::string label;
  std::string path;  // relative to the manifest directory

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// CSV columns: split,id,label,path
void write_manifest(std::ostream& out, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(std::istream& in);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

/// Loads every sequence of one split; paths resolve against the manifest's
/// directory.
std::vector<Sequence> load_split(const std::filesystem::path& manifest, Split split);

}  // namespace mavae::data
