#pragma once

#include <cstdint>
#include <cstring>

#include "invlab/tensor.hpp"

namespace invlab {

/// FNV-1a over raw bytes; used for bitwise trajectory assertions.
inline std::uint64_t fnv1a(const void* bytes, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <class S>
std::uint64_t hash_tensor(const TensorT<S>& t, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(t.data(), t.size() * sizeof(S), h);
}

}  // namespace invlab
