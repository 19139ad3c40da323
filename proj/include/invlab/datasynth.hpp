#pragma once

#include <cstdint>
#include <vector>

#include "invlab/data.hpp"
#include "invlab/rng.hpp"
#include "invlab/tensor.hpp"

// Synthetic multichannel trial generator: class-distinct evoked deflections
// over centro-parietal channels, movement-conditioned oscillations over
// motor channels, pink background noise. Amplitudes are controllable so the
// texture signal and the movement leakage can be dialed independently.
// Also the acquisition-geometry helpers (force onsets, decimation,
// segmentation) for 1200 Hz streams.

namespace invlab {

struct GeneratorConfig {
  int n_channels = 14;
  double fs_raw = 1200.0;
  double fs_out = 300.0;
  int trial_samples = 100;
  double snr_texture = 0.8;
  double leak_movement = 0.8;  // kappa
  double noise_exponent = 1.0;  // alpha of the 1/f^alpha noise
  std::uint64_t seed = 0;

  void validate() const {
    if (n_channels < 1 || trial_samples < 8)
      throw std::invalid_argument("generator config: bad geometry");
    if (fs_raw / fs_out != 4.0)
      throw std::invalid_argument("generator config: fs_raw/fs_out must be exactly 4");
    if (snr_texture < 0.0 || leak_movement < 0.0)
      throw std::invalid_argument("generator config: amplitudes must be >= 0");
  }
};

struct Templates {
  std::vector<TensorT<double>> texture;   // 3 x (channels, samples), unit RMS
  std::vector<TensorT<double>> movement;  // 2 x (channels, samples), unit RMS
};

/// Channel indices carrying most of the movement template energy.
const std::vector<int>& motor_channel_indices();
/// Channel indices carrying most of the texture template energy.
const std::vector<int>& centroparietal_channel_indices();

/// Draws the class templates. Texture templates are damped-sinusoid evoked
/// deflections with class-distinct latency/frequency/amplitude profile;
/// movement templates are amplitude-modulated fast oscillations with
/// condition-distinct modulation depth. Redrawn until the texture templates
/// are pairwise distinguishable (cosine similarity < 0.9).
Templates generate_templates(const GeneratorConfig& config, Rng& rng);

/// One labeled trial: snr*T_texture[l_s] (latency-jittered by +-3 samples)
/// + kappa*T_movement[l_m] + per-channel pink noise of unit expected RMS.
TensorT<double> generate_trial(int l_s, int l_m, const GeneratorConfig& config,
                               const Templates& templates, Rng& rng);

/// Balanced six-condition set: exactly n_per_condition trials per
/// (l_s, l_m) pair, deterministic in config.seed.
TrialSet generate_dataset(int n_per_condition, const GeneratorConfig& config);

/// Upward threshold crossings with re-trigger suppression.
std::vector<int> detect_onsets(const std::vector<double>& force, double threshold,
                               int refractory_samples);

/// Anti-aliased 4:1 decimation (zero-phase moving-average cascade, then
/// keep-every-4th). Input length must be divisible by 4.
TensorT<double> downsample4(const TensorT<double>& stream);

struct SegmentResult {
  std::vector<TensorT<double>> trials;  // each (channels, trial_samples)
  int discarded = 0;                    // windows running past the stream end
};

SegmentResult segment(const TensorT<double>& stream, const std::vector<int>& onsets,
                      int trial_samples = 100);

}  // namespace invlab
