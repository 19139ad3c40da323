#include "invlab/datasynth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace invlab {

namespace {

// channel order: F3 F4 FC3 FC4 C1 C3 C5 CZ C2 C4 C6 CP1 CPZ CP2
const std::vector<int> kMotorChannels = {2, 3, 5, 9, 6, 10};        // FC3 FC4 C3 C4 C5 C6
const std::vector<int> kCentroParietal = {11, 12, 13, 4, 8};        // CP1 CPZ CP2 C1 C2

void normalize_rms(TensorT<double>& t) {
  double sumsq = 0;
  for (std::size_t i = 0; i < t.size(); ++i) sumsq += t[i] * t[i];
  const double rms = std::sqrt(sumsq / static_cast<double>(t.size()));
  if (rms == 0.0) throw std::runtime_error("template normalization: all-zero template");
  for (std::size_t i = 0; i < t.size(); ++i) t[i] /= rms;
}

double cosine_similarity(const TensorT<double>& a, const TensorT<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

// Pink noise of unit expected RMS via random-phase spectral synthesis.
void add_pink_noise(double* x, int T, double alpha, Rng& rng) {
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  const int kmax = T / 2;
  double power = 0;
  std::vector<double> amp(static_cast<std::size_t>(kmax) + 1, 0.0);
  for (int k = 1; k <= kmax; ++k) {
    amp[static_cast<std::size_t>(k)] = std::pow(static_cast<double>(k), -alpha / 2.0);
    power += 0.5 * amp[static_cast<std::size_t>(k)] * amp[static_cast<std::size_t>(k)];
  }
  const double norm = 1.0 / std::sqrt(power);
  for (int k = 1; k <= kmax; ++k) {
    const double a = norm * amp[static_cast<std::size_t>(k)];
    const double ph = phase(rng);
    const double w = 2.0 * M_PI * k / static_cast<double>(T);
    for (int t = 0; t < T; ++t) x[t] += a * std::cos(w * t + ph);
  }
}

}  // namespace

const std::vector<int>& motor_channel_indices() { return kMotorChannels; }
const std::vector<int>& centroparietal_channel_indices() { return kCentroParietal; }

Templates generate_templates(const GeneratorConfig& config, Rng& rng) {
  config.validate();
  const int C = config.n_channels;
  const int T = config.trial_samples;
  const double fs = config.fs_out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Templates out;
  for (int attempt = 0; attempt < 32; ++attempt) {
    out.texture.clear();
    out.movement.clear();

    // class-distinct evoked deflections: latency, frequency and decay differ
    for (int cls = 0; cls < 3; ++cls) {
      const double latency_s = 0.055 + 0.045 * cls + 0.008 * (unit(rng) - 0.5);
      const double freq = 5.5 + 2.2 * cls + 0.4 * (unit(rng) - 0.5);
      const double tau_s = 0.085 - 0.012 * cls + 0.006 * (unit(rng) - 0.5);
      const int t0 = static_cast<int>(std::lround(latency_s * fs));

      TensorT<double> tpl({C, T});
      std::vector<double> wave(static_cast<std::size_t>(T), 0.0);
      for (int t = t0; t < T; ++t) {
        const double dt = (t - t0) / fs;
        wave[static_cast<std::size_t>(t)] =
            std::exp(-dt / tau_s) * std::sin(2.0 * M_PI * freq * dt);
      }
      for (int ch = 0; ch < C; ++ch) {
        const bool focal =
            std::find(kCentroParietal.begin(), kCentroParietal.end(), ch) != kCentroParietal.end();
        const double w = (focal ? 1.0 : 0.15) * (1.0 + 0.1 * (unit(rng) - 0.5));
        for (int t = 0; t < T; ++t) tpl[static_cast<std::size_t>(ch) * T + t] = w * wave[static_cast<std::size_t>(t)];
      }
      normalize_rms(tpl);
      out.texture.push_back(std::move(tpl));
    }

    // condition-distinct modulated oscillations over the motor channels
    for (int cond = 0; cond < 2; ++cond) {
      const double cycles = (cond == 0 ? 10.4 : 11.6) + 0.2 * (unit(rng) - 0.5);
      const double depth = cond == 0 ? 0.15 : 0.85;
      const double phase0 = 2.0 * M_PI * unit(rng);

      TensorT<double> tpl({C, T});
      std::vector<double> wave(static_cast<std::size_t>(T), 0.0);
      for (int t = 0; t < T; ++t) {
        const double u = static_cast<double>(t) / T;
        const double env = (1.0 - depth) + depth * std::sin(M_PI * u) * std::sin(M_PI * u);
        wave[static_cast<std::size_t>(t)] = env * std::sin(2.0 * M_PI * cycles * u + phase0);
      }
      for (int ch = 0; ch < C; ++ch) {
        double w = 0.1;
        const auto it = std::find(kMotorChannels.begin(), kMotorChannels.end(), ch);
        if (it != kMotorChannels.end()) {
          const auto pos = static_cast<std::size_t>(it - kMotorChannels.begin());
          w = pos < 4 ? 1.0 : 0.55;  // FC3/FC4/C3/C4 strongest, C5/C6 moderate
        }
        w *= 1.0 + 0.1 * (unit(rng) - 0.5);
        for (int t = 0; t < T; ++t) tpl[static_cast<std::size_t>(ch) * T + t] = w * wave[static_cast<std::size_t>(t)];
      }
      normalize_rms(tpl);
      out.movement.push_back(std::move(tpl));
    }

    bool distinguishable = true;
    for (int a = 0; a < 3 && distinguishable; ++a)
      for (int b = a + 1; b < 3; ++b)
        if (std::abs(cosine_similarity(out.texture[static_cast<std::size_t>(a)],
                                       out.texture[static_cast<std::size_t>(b)])) >= 0.9) {
          distinguishable = false;
          break;
        }
    if (distinguishable) return out;
  }
  throw std::runtime_error("generate_templates: could not draw distinguishable templates");
}

TensorT<double> generate_trial(int l_s, int l_m, const GeneratorConfig& config,
                               const Templates& templates, Rng& rng) {
  if (l_s < 0 || l_s > 2) throw std::invalid_argument("generate_trial: texture label out of range");
  if (l_m < 0 || l_m > 1) throw std::invalid_argument("generate_trial: movement label out of range");
  const int C = config.n_channels;
  const int T = config.trial_samples;
  const TensorT<double>& tex = templates.texture[static_cast<std::size_t>(l_s)];
  const TensorT<double>& mov = templates.movement[static_cast<std::size_t>(l_m)];

  std::uniform_int_distribution<int> jitter_d(-3, 3);
  const int jitter = jitter_d(rng);

  TensorT<double> X({C, T});
  for (int ch = 0; ch < C; ++ch) {
    double* row = X.data() + static_cast<std::size_t>(ch) * T;
    const double* trow = tex.data() + static_cast<std::size_t>(ch) * T;
    const double* mrow = mov.data() + static_cast<std::size_t>(ch) * T;
    for (int t = 0; t < T; ++t) {
      const int ts = t - jitter;  // shifted texture latency, zero outside
      const double tv = (ts >= 0 && ts < T) ? trow[ts] : 0.0;
      row[t] = config.snr_texture * tv + config.leak_movement * mrow[t];
    }
    add_pink_noise(row, T, config.noise_exponent, rng);
  }
  return X;
}

TrialSet generate_dataset(int n_per_condition, const GeneratorConfig& config) {
  if (n_per_condition < 1)
    throw std::invalid_argument("generate_dataset: n_per_condition must be >= 1");
  config.validate();

  Rng template_rng = make_rng(derive_seed(config.seed, 0));
  const Templates templates = generate_templates(config, template_rng);

  const int n = 6 * n_per_condition;
  const int C = config.n_channels, T = config.trial_samples;
  TrialSet set;
  set.X = Tensor({n, C, T});
  set.l_s.resize(static_cast<std::size_t>(n));
  set.l_m.resize(static_cast<std::size_t>(n));

  int idx = 0;
  for (int i = 0; i < n_per_condition; ++i) {
    for (int ls = 0; ls < 3; ++ls) {
      for (int lm = 0; lm < 2; ++lm, ++idx) {
        // per-trial stream: order-independent, parallel-safe derivation
        Rng trial_rng = make_rng(derive_seed(config.seed, 1 + static_cast<std::uint64_t>(idx)));
        TensorT<double> X = generate_trial(ls, lm, config, templates, trial_rng);
        float* dst = set.X.data() + static_cast<std::size_t>(idx) * C * T;
        for (std::size_t j = 0; j < X.size(); ++j) dst[j] = static_cast<float>(X[j]);
        set.l_s[static_cast<std::size_t>(idx)] = ls;
        set.l_m[static_cast<std::size_t>(idx)] = lm;
      }
    }
  }
  return set;
}

std::vector<int> detect_onsets(const std::vector<double>& force, double threshold,
                               int refractory_samples) {
  if (threshold <= 0.0) throw std::invalid_argument("detect_onsets: threshold must be > 0");
  if (refractory_samples < 1)
    throw std::invalid_argument("detect_onsets: refractory must be >= 1");
  std::vector<int> onsets;
  int next_allowed = 0;
  for (std::size_t i = 1; i < force.size(); ++i) {
    if (static_cast<int>(i) < next_allowed) continue;
    if (force[i - 1] < threshold && force[i] >= threshold) {
      onsets.push_back(static_cast<int>(i));
      next_allowed = static_cast<int>(i) + refractory_samples;
    }
  }
  return onsets;
}

namespace {

// Moving average with clamp-to-edge boundary; width-W causal pass.
void ma_causal(std::vector<double>& x, int w) {
  std::vector<double> y(x.size());
  const double inv = 1.0 / w;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double acc = 0;
    for (int k = 0; k < w; ++k) {
      const long j = static_cast<long>(i) - k;
      acc += x[static_cast<std::size_t>(std::max(0L, j))];
    }
    y[i] = acc * inv;
  }
  x.swap(y);
}

void ma_centered(std::vector<double>& x, int w) {
  std::vector<double> y(x.size());
  const int half = w / 2;
  const double inv = 1.0 / w;
  const long n = static_cast<long>(x.size());
  for (long i = 0; i < n; ++i) {
    double acc = 0;
    for (int k = -half; k <= half; ++k) {
      const long j = std::clamp(i + k, 0L, n - 1);
      acc += x[static_cast<std::size_t>(j)];
    }
    y[static_cast<std::size_t>(i)] = acc * inv;
  }
  x.swap(y);
}

}  // namespace

TensorT<double> downsample4(const TensorT<double>& stream) {
  if (stream.rank() != 2)
    throw std::invalid_argument("downsample4: stream must be (channels, samples)");
  const int C = stream.dim(0), L = stream.dim(1);
  if (L % 4 != 0)
    throw std::invalid_argument("downsample4: length " + std::to_string(L) +
                                " not divisible by 4");
  const int Lo = L / 4;
  TensorT<double> out({C, Lo});
  std::vector<double> row(static_cast<std::size_t>(L));
  for (int ch = 0; ch < C; ++ch) {
    std::copy(stream.data() + static_cast<std::size_t>(ch) * L,
              stream.data() + static_cast<std::size_t>(ch + 1) * L, row.begin());
    // zero-phase width-4 pair (forward then reversed) plus a centered width-3;
    // cascade -3 dB sits near 90 Hz, first null at 300 Hz
    ma_causal(row, 4);
    std::reverse(row.begin(), row.end());
    ma_causal(row, 4);
    std::reverse(row.begin(), row.end());
    ma_centered(row, 3);
    for (int t = 0; t < Lo; ++t) out[static_cast<std::size_t>(ch) * Lo + t] = row[static_cast<std::size_t>(t) * 4];
  }
  return out;
}

SegmentResult segment(const TensorT<double>& stream, const std::vector<int>& onsets,
                      int trial_samples) {
  if (stream.rank() != 2)
    throw std::invalid_argument("segment: stream must be (channels, samples)");
  const int C = stream.dim(0), L = stream.dim(1);
  SegmentResult r;
  for (int onset : onsets) {
    if (onset < 0 || onset + trial_samples > L) {
      ++r.discarded;
      continue;
    }
    TensorT<double> trial({C, trial_samples});
    for (int ch = 0; ch < C; ++ch)
      std::copy(stream.data() + static_cast<std::size_t>(ch) * L + onset,
                stream.data() + static_cast<std::size_t>(ch) * L + onset + trial_samples,
                trial.data() + static_cast<std::size_t>(ch) * trial_samples);
    r.trials.push_back(std::move(trial));
  }
  return r;
}

}  // namespace invlab
