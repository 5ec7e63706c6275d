// SPDX-License-Identifier: Apache-2.0
#include "mavae/datapipe/sequence.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mavae/binary_io.hpp"
#include "mavae/errors.hpp"

namespace mavae::data {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'V', 'A', 'E', 'S', 'E', 'Q'};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string("cannot parse ") + what + " '" + text + "'");
  }
}

}  // namespace

void RawChannel::validate() const {
  if (!(rate > 0.0)) throw ContractError("channel '" + name + "': sample rate must be positive");
  if (values.size() < 2) throw ContractError("channel '" + name + "': needs at least 2 samples");
}

void Sequence::validate() const {
  if (values.rank() != 2) throw DataError("sequence '" + id + "': values must be a T x d matrix");
  if (length() < 2) throw DataError("sequence '" + id + "': needs at least 2 time steps");
  if (channels.size() != width()) {
    throw DataError("sequence '" + id + "': " + std::to_string(channels.size()) +
                    " channel names for " + std::to_string(width()) + " columns");
  }
  for (double v : values.values()) {
    if (std::isnan(v)) throw DataError("sequence '" + id + "': contains NaN");
  }
  if (!(rate > 0.0)) throw DataError("sequence '" + id + "': rate must be positive");
}

void write_sequence(std::ostream& out, const Sequence& seq) {
  seq.validate();
  out.write(kMagic, sizeof kMagic);
  binary::put_u32(out, kSequenceVersion);
  binary::put_string(out, seq.id);
  binary::put_string(out, seq.label);
  binary::put_f64(out, seq.rate);
  binary::put_u64(out, seq.length());
  binary::put_u64(out, seq.width());
  for (const std::string& name : seq.channels) binary::put_string(out, name);
  for (double v : seq.values.values()) binary::put_f64(out, v);
  if (!out) throw PathError("failed writing sequence '" + seq.id + "'");
}

Sequence read_sequence(std::istream& in) {
  char magic[8];
  binary::read_exact(in, magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw DataError("not a sequence file");
  const std::uint32_t version = binary::get_u32(in);
  if (version != kSequenceVersion) {
    throw DataError("unsupported sequence version " + std::to_string(version));
  }
  Sequence seq;
  seq.id = binary::get_string(in);
  seq.label = binary::get_string(in);
  seq.rate = binary::get_f64(in);
  const std::uint64_t t = binary::get_u64(in);
  const std::uint64_t d = binary::get_u64(in);
  if (d > (1u << 16) || t > (std::uint64_t{1} << 32)) throw DataError("implausible sequence size");
  for (std::uint64_t c = 0; c < d; ++c) seq.channels.push_back(binary::get_string(in));
  seq.values = Tensor({t, d});
  for (double& v : seq.values.values()) v = binary::get_f64(in);
  seq.validate();
  return seq;
}

void save_sequence(const std::filesystem::path& path, const Sequence& seq) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PathError("cannot open '" + path.string() + "' for writing");
  write_sequence(out, seq);
}

Sequence load_sequence(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PathError("cannot open '" + path.string() + "'");
  return read_sequence(in);
}

void write_sequence_csv(std::ostream& out, const Sequence& seq) {
  seq.validate();
  out << "# id=" << seq.id << ",label=" << seq.label << ",rate=" << std::setprecision(17)
      << seq.rate << '\n';
  for (std::size_t c = 0; c < seq.width(); ++c) out << (c ? "," : "") << seq.channels[c];
  out << '\n';
  for (std::size_t t = 0; t < seq.length(); ++t) {
    for (std::size_t c = 0; c < seq.width(); ++c) {
      out << (c ? "," : "") << seq.values.at(t, c);
    }
    out << '\n';
  }
}

Sequence read_sequence_csv(std::istream& in) {
  Sequence seq;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty sequence CSV");
  if (line.rfind("# ", 0) == 0) {
    for (const std::string& kv : split_csv(line.substr(2))) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw DataError("malformed CSV metadata '" + kv + "'");
      const std::string key = kv.substr(0, eq);
      const std::string value = kv.substr(eq + 1);
      if (key == "id") seq.id = value;
      else if (key == "label") seq.label = value;
      else if (key == "rate") seq.rate = parse_double(value, "rate");
      else throw DataError("unknown CSV metadata key '" + key + "'");
    }
    if (!std::getline(in, line)) throw DataError("sequence CSV has no header row");
  }
  seq.channels = split_csv(line);
  const std::size_t d = seq.channels.size();
  std::vector<double> flat;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != d) {
      throw DataError("CSV row " + std::to_string(rows + 1) + " has " +
                      std::to_string(fields.size()) + " fields, expected " + std::to_string(d));
    }
    for (const std::string& f : fields) flat.push_back(parse_double(f, "value"));
    ++rows;
  }
  seq.values = Tensor({rows, d}, std::move(flat));
  seq.validate();
  return seq;
}

const char* to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  throw DataError("unknown split '" + text + "'");
}

void write_manifest(std::ostream& out, const std::vector<ManifestEntry>& entries) {
  out << "split,id,label,path\n";
  for (const ManifestEntry& e : entries) {
    out << to_string(e.split) << ',' << e.id << ',' << e.label << ',' << e.path << '\n';
  }
}

std::vector<ManifestEntry> read_manifest(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || split_csv(line) != std::vector<std::string>{"split", "id", "label", "path"}) {
    throw DataError("manifest header must be 'split,id,label,path'");
  }
  std::vector<ManifestEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw DataError("malformed manifest row '" + line + "'");
    entries.push_back({parse_split(f[0]), f[1], f[2], f[3]});
  }
  return entries;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot open manifest '" + path.string() + "'");
  return read_manifest(in);
}

std::vector<Sequence> load_split(const std::filesystem::path& manifest, Split split) {
  const auto base = manifest.parent_path();
  std::vector<Sequence> out;
  for (const ManifestEntry& e : load_manifest(manifest)) {
    if (e.split != split) continue;
    Sequence seq = load_sequence(base / e.path);
    if (seq.id != e.id) {
      throw DataError("manifest id '" + e.id + "' does not match file id '" + seq.id + "'");
    }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace mavae::data
