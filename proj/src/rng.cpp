#include "hrdyn/rng.hpp"
#include "hrdyn/log.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <numbers>
#include <string>

namespace hrdyn {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view path,
                          std::uint64_t index) {
  return mix64(mix64(root) ^ fnv1a64(path) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

double uniform01(Rng& rng) {
  // 53 random bits -> [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace log {
namespace {

Level initial_level() {
  const char* env = std::getenv("HRDYN_LOG");
  if (env == nullptr) return Level::warn;
  const std::string v(env);
  if (v == "debug") return Level::debug;
  if (v == "info") return Level::info;
  if (v == "error") return Level::error;
  if (v == "off") return Level::off;
  return Level::warn;
}

std::atomic<Level>& threshold() {
  static std::atomic<Level> t{initial_level()};
  return t;
}

}  // namespace

void set_level(Level l) { threshold().store(l); }
Level level() { return threshold().load(); }

void write(Level l, std::string_view message) {
  if (l < threshold().load()) return;
  static constexpr const char* kNames[] = {"debug", "info", "warn", "error"};
  std::cerr << "[hrdyn " << kNames[static_cast<int>(l)] << "] " << message << '\n';
}

}  // namespace log
}  // namespace hrdyn
