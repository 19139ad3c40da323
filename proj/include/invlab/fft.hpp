#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

namespace invlab {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Iterative radix-2 Cooley-Tukey transform, length must be a power of two.
/// inverse=true applies the conjugate transform including the 1/N factor.
inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (!is_power_of_two(static_cast<int>(n)))
    throw std::invalid_argument("fft: length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const auto u = a[i + j];
        const auto v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}

/// In-place 2-D transform of an n x n row-major grid.
inline void fft2_inplace(std::vector<std::complex<double>>& grid, int n, bool inverse) {
  if (grid.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("fft2: grid size does not match n*n");
  std::vector<std::complex<double>> line(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    std::copy(grid.begin() + static_cast<std::size_t>(r) * n,
              grid.begin() + static_cast<std::size_t>(r + 1) * n, line.begin());
    fft_inplace(line, inverse);
    std::copy(line.begin(), line.end(), grid.begin() + static_cast<std::size_t>(r) * n);
  }
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) line[static_cast<std::size_t>(r)] = grid[static_cast<std::size_t>(r) * n + c];
    fft_inplace(line, inverse);
    for (int r = 0; r < n; ++r) grid[static_cast<std::size_t>(r) * n + c] = line[static_cast<std::size_t>(r)];
  }
}

}  // namespace invlab
