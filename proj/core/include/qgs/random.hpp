#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qgs {

using Rng = std::mt19937_64;

/// Child seed for an independent stream: splitmix64(master ^ fnv1a64(label)).
/// The mapping is part of the persisted-result contract; do not change it.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label) noexcept;

inline Rng make_rng(std::uint64_t master, std::string_view label) {
  return Rng(derive_seed(master, label));
}

}  // namespace qgs
