#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>

#include "bdlab/lattice.hpp"

namespace bdlab {

// Counter-based randomness. Every random quantity in the toolkit is a pure
// function of a key (seed, site, stream, index), so any draw can be recomputed
// in isolation and in any order.

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t word) {
  return mix64(h ^ (word * 0xd6e8feb86659fd93ULL + 0x632be59bd9b4e019ULL));
}

// FNV-1a, used to turn component names into seed material.
constexpr std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t site_key(const Site& u);

// Sub-seed for a named component: derive_seed(global, "fpp/mu", {replica}).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag,
                          std::initializer_list<std::uint64_t> words = {});

inline std::uint64_t double_bits(double x) { return std::bit_cast<std::uint64_t>(x); }

// Uniform on the open interval (0, 1).
inline double unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline double exp_from_bits(std::uint64_t bits, double rate) {
  return -std::log(unit_open(bits)) / rate;
}

}  // namespace bdlab
