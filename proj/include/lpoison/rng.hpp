#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace lpoison {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Derives an independent stream seed from a base seed and a sequence of
/// integer tags (repetition index, tree index, ...).
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = detail::splitmix64(base);
  for (std::uint64_t t : tags) h = detail::splitmix64(h ^ detail::splitmix64(t));
  return h;
}

/// Same as above with a textual tag first ("rq1", "lab", ...).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                    std::initializer_list<std::uint64_t> tags = {}) noexcept {
  std::uint64_t h = detail::splitmix64(base ^ detail::fnv1a(tag));
  for (std::uint64_t t : tags) h = detail::splitmix64(h ^ detail::splitmix64(t));
  return h;
}

}  // namespace lpoison
