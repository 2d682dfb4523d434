#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hrdyn {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x);

// All randomness descends from one root seed. Child streams are named
// "module:purpose" plus an index, e.g. derive_seed(root, "harness:shuffle", fold).
std::uint64_t derive_seed(std::uint64_t root, std::string_view path,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view path,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(root, path, index));
}

// Standard normal draw via Box-Muller on the engine's raw output, so sequences
// do not depend on the standard library's distribution implementation.
double standard_normal(Rng& rng);

// Uniform draw in [0, 1).
double uniform01(Rng& rng);

// 64-bit FNV-1a, used for content hashes in run manifests.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace hrdyn
