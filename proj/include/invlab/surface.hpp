#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "invlab/tensor.hpp"

// Spectral synthesis of rough textured surfaces from a band-limited
// power-law PSD, plus the radially averaged spectrum used to verify them.

namespace invlab {

struct SurfaceSpec {
  double hurst = 0.5;   // H
  double amplitude = 1e11;  // C
  double k_low = 16;    // k_l, lower roll-off
  double k_roll = 16;   // k_r, upper roll-off
  double k_cut = 64;    // k_s, cutoff

  void validate() const {
    if (!(hurst > 0.0 && hurst <= 1.0))
      throw std::invalid_argument("surface spec: H must be in (0,1]");
    if (!(amplitude > 0.0)) throw std::invalid_argument("surface spec: C must be > 0");
    if (!(k_low > 0.0 && k_low <= k_roll && k_roll <= k_cut))
      throw std::invalid_argument("surface spec: need 0 < k_l <= k_r <= k_s");
  }
};

/// Piecewise PSD: C on [k_l,k_r], C*(|k|/k_r)^(-2(1+H)) on [k_r,k_s], 0 otherwise.
/// Wavenumbers are integer DFT frequency indices (cycles per surface side).
double psd(double k_mag, const SurfaceSpec& spec);

struct HeightMap {
  int n = 0;                 // side length (samples)
  TensorT<double> heights;   // (n, n)
  SurfaceSpec spec;
  std::uint64_t seed = 0;
};

/// Random-phase spectral synthesis: amplitudes sqrt(psd(|k|)), Hermitian
/// symmetry imposed so the inverse transform is real, DC forced to zero.
/// rayleigh_amplitudes randomizes per-mode power (off by default).
HeightMap synthesize_surface(const SurfaceSpec& spec, int n, std::uint64_t seed,
                             bool rayleigh_amplitudes = false);

struct RadialBin {
  double k_center = 0;
  double mean_power = 0;
  long count = 0;
};

/// Power spectrum binned into radial annuli of equal width over [0, n/2].
std::vector<RadialBin> radial_psd(const HeightMap& map, int n_bins);

/// Writes <path_prefix>.csv, <path_prefix>.pgm (16-bit graymap normalized to
/// [min,max]) and <path_prefix>.json (spec, seed, normalization).
void export_heightmap(const HeightMap& map, const std::string& path_prefix);

/// Parses a grid previously written by export_heightmap.
TensorT<double> import_heightmap_csv(const std::string& path);

}  // namespace invlab
