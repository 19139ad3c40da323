#include "invlab/surface.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "invlab/fft.hpp"
#include "invlab/rng.hpp"

namespace invlab {

double psd(double k_mag, const SurfaceSpec& spec) {
  spec.validate();
  if (k_mag < 0.0) throw std::invalid_argument("psd: |k| must be >= 0");
  if (k_mag < spec.k_low || k_mag > spec.k_cut) return 0.0;
  if (k_mag <= spec.k_roll) return spec.amplitude;
  return spec.amplitude * std::pow(k_mag / spec.k_roll, -2.0 * (1.0 + spec.hurst));
}

HeightMap synthesize_surface(const SurfaceSpec& spec, int n, std::uint64_t seed,
                             bool rayleigh_amplitudes) {
  spec.validate();
  if (!is_power_of_two(n) || n < 8)
    throw std::invalid_argument("synthesize_surface: side must be a power of two >= 8");
  if (spec.k_cut >= n / 2.0)
    throw std::invalid_argument("synthesize_surface: k_s = " + std::to_string(spec.k_cut) +
                                " not representable on an N = " + std::to_string(n) +
                                " grid (need k_s < N/2)");

  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::complex<double>> A(static_cast<std::size_t>(n) * n, {0.0, 0.0});
  auto signed_freq = [n](int i) { return i <= n / 2 ? i : i - n; };

  // Fill the non-redundant half-plane in fixed row-major order so the draw
  // sequence is deterministic; mirror each mode to its conjugate partner.
  for (int ky = 0; ky < n; ++ky) {
    for (int kx = 0; kx < n; ++kx) {
      const int cy = (n - ky) % n, cx = (n - kx) % n;
      const bool self_conj = (cy == ky && cx == kx);
      // canonical representative: lexicographically smallest of the pair
      if (!self_conj && (cy < ky || (cy == ky && cx < kx))) continue;

      const double fy = signed_freq(ky), fx = signed_freq(kx);
      const double kmag = std::hypot(fx, fy);
      double amp = std::sqrt(psd(kmag, spec));
      if (kmag == 0.0) amp = 0.0;  // zero-mean surface
      if (amp == 0.0) continue;
      if (rayleigh_amplitudes) amp *= std::sqrt(0.5) * std::hypot(gauss(rng), gauss(rng));

      if (self_conj) {
        // must be real; random sign keeps the expected power
        const double s = phase(rng) < M_PI ? 1.0 : -1.0;
        A[static_cast<std::size_t>(ky) * n + kx] = {s * amp, 0.0};
      } else {
        const double ph = phase(rng);
        const std::complex<double> v(amp * std::cos(ph), amp * std::sin(ph));
        A[static_cast<std::size_t>(ky) * n + kx] = v;
        A[static_cast<std::size_t>(cy) * n + cx] = std::conj(v);
      }
    }
  }

  fft2_inplace(A, n, /*inverse=*/true);

  HeightMap map;
  map.n = n;
  map.spec = spec;
  map.seed = seed;
  map.heights = TensorT<double>({n, n});
  for (std::size_t i = 0; i < A.size(); ++i) map.heights[i] = A[i].real();
  return map;
}

std::vector<RadialBin> radial_psd(const HeightMap& map, int n_bins) {
  if (n_bins < 2) throw std::invalid_argument("radial_psd: n_bins must be >= 2");
  const int n = map.n;
  if (n < 8) throw std::invalid_argument("radial_psd: map side must be >= 8");

  std::vector<std::complex<double>> A(static_cast<std::size_t>(n) * n);
  for (std::size_t i = 0; i < A.size(); ++i) A[i] = {map.heights[i], 0.0};
  fft2_inplace(A, n, /*inverse=*/false);

  const double k_max = n / 2.0;
  const double width = k_max / n_bins;
  std::vector<RadialBin> bins(static_cast<std::size_t>(n_bins));
  for (int i = 0; i < n_bins; ++i) bins[static_cast<std::size_t>(i)].k_center = (i + 0.5) * width;

  auto signed_freq = [n](int i) { return i <= n / 2 ? i : i - n; };
  for (int ky = 0; ky < n; ++ky) {
    for (int kx = 0; kx < n; ++kx) {
      const double kmag = std::hypot(static_cast<double>(signed_freq(kx)),
                                     static_cast<double>(signed_freq(ky)));
      if (kmag > k_max) continue;
      int b = static_cast<int>(kmag / width);
      if (b >= n_bins) b = n_bins - 1;
      const double p = std::norm(A[static_cast<std::size_t>(ky) * n + kx]);
      bins[static_cast<std::size_t>(b)].mean_power += p;
      bins[static_cast<std::size_t>(b)].count += 1;
    }
  }
  for (auto& b : bins) {
    if (b.count > 0) b.mean_power /= static_cast<double>(b.count);
  }
  return bins;
}

void export_heightmap(const HeightMap& map, const std::string& path_prefix) {
  const int n = map.n;
  {
    std::ofstream csv(path_prefix + ".csv");
    if (!csv) throw std::runtime_error("export_heightmap: cannot write " + path_prefix + ".csv");
    char buf[40];
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", map.heights[static_cast<std::size_t>(r) * n + c]);
        csv << buf << (c + 1 < n ? "," : "\n");
      }
    }
  }

  double lo = map.heights[0], hi = map.heights[0];
  for (std::size_t i = 0; i < map.heights.size(); ++i) {
    lo = std::min(lo, map.heights[i]);
    hi = std::max(hi, map.heights[i]);
  }
  const bool degenerate = !(hi > lo);
  {
    std::ofstream pgm(path_prefix + ".pgm", std::ios::binary);
    if (!pgm) throw std::runtime_error("export_heightmap: cannot write " + path_prefix + ".pgm");
    pgm << "P5\n" << n << " " << n << "\n65535\n";
    const double scale = degenerate ? 0.0 : 65535.0 / (hi - lo);
    for (std::size_t i = 0; i < map.heights.size(); ++i) {
      const double v = degenerate ? 32768.0 : (map.heights[i] - lo) * scale;
      const auto g = static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 65535.0)));
      const unsigned char bytes[2] = {static_cast<unsigned char>(g >> 8),
                                      static_cast<unsigned char>(g & 0xff)};  // PGM is big-endian
      pgm.write(reinterpret_cast<const char*>(bytes), 2);
    }
  }
  {
    nlohmann::json side;
    side["side"] = n;
    side["seed"] = map.seed;
    side["spec"] = {{"H", map.spec.hurst},
                    {"C", map.spec.amplitude},
                    {"k_l", map.spec.k_low},
                    {"k_r", map.spec.k_roll},
                    {"k_s", map.spec.k_cut}};
    side["normalization"] = {{"min", lo}, {"max", hi}, {"degenerate", degenerate}};
    std::ofstream js(path_prefix + ".json");
    if (!js) throw std::runtime_error("export_heightmap: cannot write " + path_prefix + ".json");
    js << side.dump(2) << "\n";
  }
}

TensorT<double> import_heightmap_csv(const std::string& path) {
  std::ifstream csv(path);
  if (!csv) throw std::runtime_error("import_heightmap_csv: cannot read " + path);
  std::vector<double> values;
  std::string line;
  int rows = 0, cols = -1;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int c = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(std::stod(cell));
      ++c;
    }
    if (cols < 0) cols = c;
    if (c != cols) throw std::runtime_error("import_heightmap_csv: ragged row in " + path);
    ++rows;
  }
  if (rows == 0 || cols != rows)
    throw std::runtime_error("import_heightmap_csv: expected a square grid in " + path);
  return TensorT<double>({rows, cols}, std::move(values));
}

}  // namespace invlab
