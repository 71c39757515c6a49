#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace saunet {

using Rng = std::mt19937_64;

/// Independent stream seed for (seed, tag), so results do not depend on the
/// order in which streams are consumed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

inline Rng make_rng(std::uint64_t seed, std::string_view tag) { return Rng(derive_seed(seed, tag)); }

}  // namespace saunet
