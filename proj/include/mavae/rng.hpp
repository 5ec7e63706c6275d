// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mavae {

using Rng = std::mt19937_64;

/// Independent generator for one named purpose ("data", "init", "noise",
/// "epsilon", ...). Streams derived from the same seed but different names do
/// not perturb each other.
Rng make_stream(std::uint64_t seed, std::string_view name);

/// Same as make_stream, further split by an integer index (e.g. per sequence).
Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index);

}  // namespace mavae
