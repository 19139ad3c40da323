#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "invlab/rng.hpp"
#include "invlab/tensor.hpp"

// Dense-tensor forward/backward kernels for the layer types of the encoder
// architecture: temporal convolution, depthwise spatial convolution,
// separable convolution, batch normalization, ELU, average pooling,
// inverted dropout, dense, and softmax cross-entropy. All convolutions are
// bias-free. Layout is row-major (batch, map, channel, time).

namespace invlab::nn {

enum class Mode { kTrain, kInfer };

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// "same" padding split; for even K the extra zero goes on the right.
inline int pad_left(int k) { return (k - 1) / 2; }
inline int pad_right(int k) { return k - 1 - (k - 1) / 2; }

// Copies src[0..n) into dst at offset `off`, zeros elsewhere.
template <class S>
inline void pad_row(const S* src, int n, S* dst, int padded, int off) {
  std::fill(dst, dst + padded, S(0));
  std::copy(src, src + n, dst + off);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Temporal convolution ("same" zero padding, no bias)
// input (B, Fin, C, T), kernels (Fout, Fin, K) -> (B, Fout, C, T)
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> conv_temporal(const TensorT<S>& input, const TensorT<S>& kernels) {
  detail::require(input.rank() == 4, "conv_temporal: input must be (B,F,C,T), got " +
                                         shape_to_string(input.shape()));
  detail::require(kernels.rank() == 3, "conv_temporal: kernels must be (Fout,Fin,K), got " +
                                           shape_to_string(kernels.shape()));
  const int B = input.dim(0), Fin = input.dim(1), C = input.dim(2), T = input.dim(3);
  const int Fout = kernels.dim(0), K = kernels.dim(2);
  detail::require(kernels.dim(1) == Fin,
                  "conv_temporal: kernel channel extent " + shape_to_string(kernels.shape()) +
                      " does not match input " + shape_to_string(input.shape()));

  const int padL = detail::pad_left(K);
  const int padded = T + K - 1;
  TensorT<S> out({B, Fout, C, T});
  std::vector<S> scratch(static_cast<std::size_t>(padded));

  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      for (int fi = 0; fi < Fin; ++fi) {
        const S* x = input.data() + ((static_cast<std::size_t>(b) * Fin + fi) * C + c) * T;
        detail::pad_row(x, T, scratch.data(), padded, padL);
        for (int fo = 0; fo < Fout; ++fo) {
          const S* w = kernels.data() + (static_cast<std::size_t>(fo) * Fin + fi) * K;
          S* y = out.data() + ((static_cast<std::size_t>(b) * Fout + fo) * C + c) * T;
          for (int t = 0; t < T; ++t) {
            S acc = 0;
            const S* xs = scratch.data() + t;
            for (int k = 0; k < K; ++k) acc += xs[k] * w[k];
            y[t] += acc;
          }
        }
      }
    }
  }
  return out;
}

template <class S>
struct ConvTemporalGrads {
  TensorT<S> kernels;
  TensorT<S> input;
};

template <class S>
ConvTemporalGrads<S> conv_temporal_backward(const TensorT<S>& input, const TensorT<S>& kernels,
                                            const TensorT<S>& out_grad) {
  const int B = input.dim(0), Fin = input.dim(1), C = input.dim(2), T = input.dim(3);
  const int Fout = kernels.dim(0), K = kernels.dim(2);
  detail::require(out_grad.same_shape({B, Fout, C, T}),
                  "conv_temporal_backward: out_grad shape " + shape_to_string(out_grad.shape()));

  const int padL = detail::pad_left(K);
  const int padR = detail::pad_right(K);
  const int padded = T + K - 1;

  ConvTemporalGrads<S> g{TensorT<S>({Fout, Fin, K}), TensorT<S>({B, Fin, C, T})};
  std::vector<S> xpad(static_cast<std::size_t>(padded));
  std::vector<S> gpad(static_cast<std::size_t>(padded));

  for (int b = 0; b < B; ++b) {
    for (int c = 0; c < C; ++c) {
      for (int fi = 0; fi < Fin; ++fi) {
        const S* x = input.data() + ((static_cast<std::size_t>(b) * Fin + fi) * C + c) * T;
        detail::pad_row(x, T, xpad.data(), padded, padL);
        S* gx = g.input.data() + ((static_cast<std::size_t>(b) * Fin + fi) * C + c) * T;
        for (int fo = 0; fo < Fout; ++fo) {
          const S* gy = out_grad.data() + ((static_cast<std::size_t>(b) * Fout + fo) * C + c) * T;
          S* gw = g.kernels.data() + (static_cast<std::size_t>(fo) * Fin + fi) * K;
          for (int k = 0; k < K; ++k) {
            S acc = 0;
            const S* xs = xpad.data() + k;
            for (int t = 0; t < T; ++t) acc += gy[t] * xs[t];
            gw[k] += acc;
          }
          // input grad: correlation of padded out_grad with the reversed kernel
          detail::pad_row(gy, T, gpad.data(), padded, padR);
          const S* w = kernels.data() + (static_cast<std::size_t>(fo) * Fin + fi) * K;
          for (int t = 0; t < T; ++t) {
            S acc = 0;
            const S* gs = gpad.data() + t;
            for (int k = 0; k < K; ++k) acc += gs[k] * w[K - 1 - k];
            gx[t] += acc;
          }
        }
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Depthwise spatial convolution (full-height filter, no padding)
// input (B, F, C, T), kernels (F, D, C) -> (B, F*D, 1, T)
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> depthwise_conv(const TensorT<S>& input, const TensorT<S>& kernels) {
  detail::require(input.rank() == 4, "depthwise_conv: input must be (B,F,C,T), got " +
                                         shape_to_string(input.shape()));
  detail::require(kernels.rank() == 3, "depthwise_conv: kernels must be (F,D,C), got " +
                                           shape_to_string(kernels.shape()));
  const int B = input.dim(0), F = input.dim(1), C = input.dim(2), T = input.dim(3);
  const int D = kernels.dim(1);
  detail::require(kernels.dim(0) == F && kernels.dim(2) == C,
                  "depthwise_conv: kernel height must equal channel extent; kernels " +
                      shape_to_string(kernels.shape()) + " vs input " + shape_to_string(input.shape()));
  detail::require(D >= 1, "depthwise_conv: depth multiplier must be >= 1");

  TensorT<S> out({B, F * D, 1, T});
  for (int b = 0; b < B; ++b) {
    for (int f = 0; f < F; ++f) {
      for (int d = 0; d < D; ++d) {
        const S* w = kernels.data() + (static_cast<std::size_t>(f) * D + d) * C;
        S* y = out.data() + (static_cast<std::size_t>(b) * F * D + f * D + d) * T;
        for (int c = 0; c < C; ++c) {
          const S* x = input.data() + ((static_cast<std::size_t>(b) * F + f) * C + c) * T;
          const S wc = w[c];
          for (int t = 0; t < T; ++t) y[t] += wc * x[t];
        }
      }
    }
  }
  return out;
}

template <class S>
struct DepthwiseGrads {
  TensorT<S> kernels;
  TensorT<S> input;
};

template <class S>
DepthwiseGrads<S> depthwise_conv_backward(const TensorT<S>& input, const TensorT<S>& kernels,
                                          const TensorT<S>& out_grad) {
  const int B = input.dim(0), F = input.dim(1), C = input.dim(2), T = input.dim(3);
  const int D = kernels.dim(1);
  detail::require(out_grad.same_shape({B, F * D, 1, T}),
                  "depthwise_conv_backward: out_grad shape " + shape_to_string(out_grad.shape()));

  DepthwiseGrads<S> g{TensorT<S>({F, D, C}), TensorT<S>({B, F, C, T})};
  for (int b = 0; b < B; ++b) {
    for (int f = 0; f < F; ++f) {
      for (int d = 0; d < D; ++d) {
        const S* gy = out_grad.data() + (static_cast<std::size_t>(b) * F * D + f * D + d) * T;
        const S* w = kernels.data() + (static_cast<std::size_t>(f) * D + d) * C;
        S* gw = g.kernels.data() + (static_cast<std::size_t>(f) * D + d) * C;
        for (int c = 0; c < C; ++c) {
          const S* x = input.data() + ((static_cast<std::size_t>(b) * F + f) * C + c) * T;
          S* gx = g.input.data() + ((static_cast<std::size_t>(b) * F + f) * C + c) * T;
          S acc = 0;
          const S wc = w[c];
          for (int t = 0; t < T; ++t) {
            acc += gy[t] * x[t];
            gx[t] += wc * gy[t];
          }
          gw[c] += acc;
        }
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Separable convolution: per-map temporal conv ("same" padding) followed by
// a 1x1 pointwise mix.
// input (B, F, 1, T), depth_kernels (F, K), point_kernels (Fout, F)
// ---------------------------------------------------------------------------

template <class S>
struct SeparableOut {
  TensorT<S> out;  // (B, Fout, 1, T)
  TensorT<S> mid;  // (B, F, 1, T), depthwise stage output, kept for backward
};

template <class S>
SeparableOut<S> separable_conv(const TensorT<S>& input, const TensorT<S>& depth_kernels,
                               const TensorT<S>& point_kernels) {
  detail::require(input.rank() == 4 && input.dim(2) == 1,
                  "separable_conv: input must be (B,F,1,T), got " + shape_to_string(input.shape()));
  const int B = input.dim(0), F = input.dim(1), T = input.dim(3);
  detail::require(depth_kernels.rank() == 2 && depth_kernels.dim(0) == F,
                  "separable_conv: depth kernels must be (F,K), got " +
                      shape_to_string(depth_kernels.shape()));
  detail::require(point_kernels.rank() == 2 && point_kernels.dim(1) == F,
                  "separable_conv: pointwise input extent " + shape_to_string(point_kernels.shape()) +
                      " does not match map count " + std::to_string(F));
  const int K = depth_kernels.dim(1);
  const int Fout = point_kernels.dim(0);
  const int padL = detail::pad_left(K);
  const int padded = T + K - 1;

  SeparableOut<S> r{TensorT<S>({B, Fout, 1, T}), TensorT<S>({B, F, 1, T})};
  std::vector<S> scratch(static_cast<std::size_t>(padded));

  for (int b = 0; b < B; ++b) {
    for (int f = 0; f < F; ++f) {
      const S* x = input.data() + (static_cast<std::size_t>(b) * F + f) * T;
      detail::pad_row(x, T, scratch.data(), padded, padL);
      const S* w = depth_kernels.data() + static_cast<std::size_t>(f) * K;
      S* m = r.mid.data() + (static_cast<std::size_t>(b) * F + f) * T;
      for (int t = 0; t < T; ++t) {
        S acc = 0;
        const S* xs = scratch.data() + t;
        for (int k = 0; k < K; ++k) acc += xs[k] * w[k];
        m[t] = acc;
      }
    }
    for (int fo = 0; fo < Fout; ++fo) {
      const S* pw = point_kernels.data() + static_cast<std::size_t>(fo) * F;
      S* y = r.out.data() + (static_cast<std::size_t>(b) * Fout + fo) * T;
      for (int f = 0; f < F; ++f) {
        const S* m = r.mid.data() + (static_cast<std::size_t>(b) * F + f) * T;
        const S wf = pw[f];
        for (int t = 0; t < T; ++t) y[t] += wf * m[t];
      }
    }
  }
  return r;
}

template <class S>
struct SeparableGrads {
  TensorT<S> depth_kernels;
  TensorT<S> point_kernels;
  TensorT<S> input;
};

template <class S>
SeparableGrads<S> separable_conv_backward(const TensorT<S>& input, const TensorT<S>& depth_kernels,
                                          const TensorT<S>& point_kernels, const TensorT<S>& mid,
                                          const TensorT<S>& out_grad) {
  const int B = input.dim(0), F = input.dim(1), T = input.dim(3);
  const int K = depth_kernels.dim(1);
  const int Fout = point_kernels.dim(0);
  detail::require(out_grad.same_shape({B, Fout, 1, T}),
                  "separable_conv_backward: out_grad shape " + shape_to_string(out_grad.shape()));
  const int padL = detail::pad_left(K);
  const int padR = detail::pad_right(K);
  const int padded = T + K - 1;

  SeparableGrads<S> g{TensorT<S>({F, K}), TensorT<S>({Fout, F}), TensorT<S>({B, F, 1, T})};
  TensorT<S> mid_grad({B, F, 1, T});
  std::vector<S> xpad(static_cast<std::size_t>(padded));
  std::vector<S> gpad(static_cast<std::size_t>(padded));

  for (int b = 0; b < B; ++b) {
    // pointwise stage
    for (int fo = 0; fo < Fout; ++fo) {
      const S* gy = out_grad.data() + (static_cast<std::size_t>(b) * Fout + fo) * T;
      const S* pw = point_kernels.data() + static_cast<std::size_t>(fo) * F;
      S* gpw = g.point_kernels.data() + static_cast<std::size_t>(fo) * F;
      for (int f = 0; f < F; ++f) {
        const S* m = mid.data() + (static_cast<std::size_t>(b) * F + f) * T;
        S* gm = mid_grad.data() + (static_cast<std::size_t>(b) * F + f) * T;
        S acc = 0;
        const S wf = pw[f];
        for (int t = 0; t < T; ++t) {
          acc += gy[t] * m[t];
          gm[t] += wf * gy[t];
        }
        gpw[f] += acc;
      }
    }
    // depthwise stage
    for (int f = 0; f < F; ++f) {
      const S* x = input.data() + (static_cast<std::size_t>(b) * F + f) * T;
      const S* gm = mid_grad.data() + (static_cast<std::size_t>(b) * F + f) * T;
      detail::pad_row(x, T, xpad.data(), padded, padL);
      S* gw = g.depth_kernels.data() + static_cast<std::size_t>(f) * K;
      for (int k = 0; k < K; ++k) {
        S acc = 0;
        const S* xs = xpad.data() + k;
        for (int t = 0; t < T; ++t) acc += gm[t] * xs[t];
        gw[k] += acc;
      }
      detail::pad_row(gm, T, gpad.data(), padded, padR);
      const S* w = depth_kernels.data() + static_cast<std::size_t>(f) * K;
      S* gx = g.input.data() + (static_cast<std::size_t>(b) * F + f) * T;
      for (int t = 0; t < T; ++t) {
        S acc = 0;
        const S* gs = gpad.data() + t;
        for (int k = 0; k < K; ++k) acc += gs[k] * w[K - 1 - k];
        gx[t] = acc;
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Batch normalization (statistics per feature map over batch and positions)
// ---------------------------------------------------------------------------

template <class S>
struct BatchNormParamsT {
  TensorT<S> gamma, beta, run_mean, run_var;

  static BatchNormParamsT init(int maps) {
    BatchNormParamsT p;
    p.gamma = TensorT<S>::full({maps}, S(1));
    p.beta = TensorT<S>({maps});
    p.run_mean = TensorT<S>({maps});
    p.run_var = TensorT<S>::full({maps}, S(1));
    return p;
  }
};

template <class S>
struct BatchNormCache {
  TensorT<S> x_hat;                     // normalized input
  std::vector<S> inv_std;               // per map, 1/sqrt(var+eps)
  TensorT<S> new_run_mean, new_run_var; // proposed EMA update; committed by the caller
};

inline constexpr double kBatchNormEps = 1e-3;
inline constexpr double kBatchNormMomentum = 0.99;

/// Train mode normalizes by batch statistics and proposes updated running
/// statistics in the cache (the function itself never mutates params).
/// Infer mode uses the stored running statistics and is a pure function.
template <class S>
TensorT<S> batchnorm(const TensorT<S>& input, const BatchNormParamsT<S>& params, Mode mode,
                     BatchNormCache<S>* cache = nullptr) {
  detail::require(input.rank() == 4, "batchnorm: input must be (B,F,C,T), got " +
                                         shape_to_string(input.shape()));
  const int B = input.dim(0), F = input.dim(1), C = input.dim(2), T = input.dim(3);
  detail::require(params.gamma.dim(0) == F, "batchnorm: param extent " +
                                                shape_to_string(params.gamma.shape()) +
                                                " does not match map count " + std::to_string(F));
  const std::size_t plane = static_cast<std::size_t>(C) * T;
  TensorT<S> out(input.shape());

  if (mode == Mode::kInfer) {
    for (int b = 0; b < B; ++b) {
      for (int f = 0; f < F; ++f) {
        const S* x = input.data() + (static_cast<std::size_t>(b) * F + f) * plane;
        S* y = out.data() + (static_cast<std::size_t>(b) * F + f) * plane;
        const S inv = S(1) / std::sqrt(params.run_var[f] + S(kBatchNormEps));
        const S m = params.run_mean[f];
        const S gmul = params.gamma[f] * inv;
        const S badd = params.beta[f];
        for (std::size_t i = 0; i < plane; ++i) y[i] = gmul * (x[i] - m) + badd;
      }
    }
    return out;
  }

  detail::require(B >= 2, "batchnorm: Train mode requires batch size >= 2, got " + std::to_string(B));
  const double n = static_cast<double>(B) * static_cast<double>(plane);

  BatchNormCache<S> local;
  BatchNormCache<S>& c = cache ? *cache : local;
  c.x_hat = TensorT<S>(input.shape());
  c.inv_std.assign(static_cast<std::size_t>(F), S(0));
  c.new_run_mean = TensorT<S>({F});
  c.new_run_var = TensorT<S>({F});

  for (int f = 0; f < F; ++f) {
    double sum = 0, sumsq = 0;
    for (int b = 0; b < B; ++b) {
      const S* x = input.data() + (static_cast<std::size_t>(b) * F + f) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum += x[i];
        sumsq += static_cast<double>(x[i]) * x[i];
      }
    }
    const double mean = sum / n;
    const double var = std::max(0.0, sumsq / n - mean * mean);
    const S inv = static_cast<S>(1.0 / std::sqrt(var + kBatchNormEps));
    c.inv_std[f] = inv;
    c.new_run_mean[f] = static_cast<S>(kBatchNormMomentum * params.run_mean[f] +
                                       (1.0 - kBatchNormMomentum) * mean);
    c.new_run_var[f] = static_cast<S>(kBatchNormMomentum * params.run_var[f] +
                                      (1.0 - kBatchNormMomentum) * var);
    const S sm = static_cast<S>(mean);
    const S gmul = params.gamma[f];
    const S badd = params.beta[f];
    for (int b = 0; b < B; ++b) {
      const S* x = input.data() + (static_cast<std::size_t>(b) * F + f) * plane;
      S* xh = c.x_hat.data() + (static_cast<std::size_t>(b) * F + f) * plane;
      S* y = out.data() + (static_cast<std::size_t>(b) * F + f) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const S v = (x[i] - sm) * inv;
        xh[i] = v;
        y[i] = gmul * v + badd;
      }
    }
  }
  return out;
}

template <class S>
struct BatchNormGrads {
  TensorT<S> gamma, beta, input;
};

template <class S>
BatchNormGrads<S> batchnorm_backward(const BatchNormCache<S>& cache,
                                     const BatchNormParamsT<S>& params,
                                     const TensorT<S>& out_grad) {
  const int B = out_grad.dim(0), F = out_grad.dim(1), C = out_grad.dim(2), T = out_grad.dim(3);
  const std::size_t plane = static_cast<std::size_t>(C) * T;
  const double n = static_cast<double>(B) * static_cast<double>(plane);

  BatchNormGrads<S> g{TensorT<S>({F}), TensorT<S>({F}), TensorT<S>(out_grad.shape())};
  for (int f = 0; f < F; ++f) {
    double sum_gy = 0, sum_gy_xhat = 0;
    for (int b = 0; b < B; ++b) {
      const S* gy = out_grad.data() + (static_cast<std::size_t>(b) * F + f) * plane;
      const S* xh = cache.x_hat.data() + (static_cast<std::size_t>(b) * F + f) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_gy += gy[i];
        sum_gy_xhat += static_cast<double>(gy[i]) * xh[i];
      }
    }
    g.beta[f] = static_cast<S>(sum_gy);
    g.gamma[f] = static_cast<S>(sum_gy_xhat);
    const S k1 = static_cast<S>(sum_gy / n);
    const S k2 = static_cast<S>(sum_gy_xhat / n);
    const S gmul = params.gamma[f] * cache.inv_std[f];
    for (int b = 0; b < B; ++b) {
      const S* gy = out_grad.data() + (static_cast<std::size_t>(b) * F + f) * plane;
      const S* xh = cache.x_hat.data() + (static_cast<std::size_t>(b) * F + f) * plane;
      S* gx = g.input.data() + (static_cast<std::size_t>(b) * F + f) * plane;
      for (std::size_t i = 0; i < plane; ++i) gx[i] = gmul * (gy[i] - k1 - xh[i] * k2);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// ELU
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> elu(const TensorT<S>& input) {
  TensorT<S> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const S x = input[i];
    out[i] = x > S(0) ? x : std::expm1(x);
  }
  return out;
}

/// Backward from the stored *output*: slope is 1 for y > 0, y + 1 otherwise.
template <class S>
TensorT<S> elu_backward(const TensorT<S>& output, const TensorT<S>& out_grad) {
  TensorT<S> g(output.shape());
  for (std::size_t i = 0; i < output.size(); ++i) {
    const S y = output[i];
    g[i] = out_grad[i] * (y > S(0) ? S(1) : y + S(1));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Average pooling over the temporal axis (non-overlapping, remainder dropped)
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> avg_pool(const TensorT<S>& input, int window) {
  detail::require(window >= 1, "avg_pool: window must be >= 1, got " + std::to_string(window));
  detail::require(input.rank() == 4, "avg_pool: input must be (B,F,C,T), got " +
                                         shape_to_string(input.shape()));
  const int B = input.dim(0), F = input.dim(1), C = input.dim(2), T = input.dim(3);
  const int To = T / window;
  detail::require(To >= 1, "avg_pool: window longer than temporal extent");
  TensorT<S> out({B, F, C, To});
  const S inv = S(1) / static_cast<S>(window);
  const std::size_t rows = static_cast<std::size_t>(B) * F * C;
  for (std::size_t r = 0; r < rows; ++r) {
    const S* x = input.data() + r * T;
    S* y = out.data() + r * To;
    for (int o = 0; o < To; ++o) {
      S acc = 0;
      for (int k = 0; k < window; ++k) acc += x[o * window + k];
      y[o] = acc * inv;
    }
  }
  return out;
}

template <class S>
TensorT<S> avg_pool_backward(const std::vector<int>& input_shape, int window,
                             const TensorT<S>& out_grad) {
  const int T = input_shape[3];
  const int To = out_grad.dim(3);
  TensorT<S> g(input_shape);
  const S inv = S(1) / static_cast<S>(window);
  const std::size_t rows = static_cast<std::size_t>(input_shape[0]) * input_shape[1] * input_shape[2];
  for (std::size_t r = 0; r < rows; ++r) {
    const S* gy = out_grad.data() + r * To;
    S* gx = g.data() + r * T;
    for (int o = 0; o < To; ++o) {
      const S v = gy[o] * inv;
      for (int k = 0; k < window; ++k) gx[o * window + k] = v;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Inverted dropout
// ---------------------------------------------------------------------------

template <class S>
struct DropoutOut {
  TensorT<S> out;
  TensorT<S> mask;  // 0 or 1/(1-p); backward multiplies by this
};

template <class S>
DropoutOut<S> dropout(const TensorT<S>& input, double p, Mode mode, Rng* rng) {
  detail::require(p >= 0.0 && p < 1.0, "dropout: p must be in [0,1), got " + std::to_string(p));
  DropoutOut<S> r;
  if (mode == Mode::kInfer || p == 0.0) {
    r.out = input;
    r.mask = TensorT<S>::full(input.shape(), S(1));
    return r;
  }
  detail::require(rng != nullptr, "dropout: Train mode with p > 0 requires an RNG");
  r.out = TensorT<S>(input.shape());
  r.mask = TensorT<S>(input.shape());
  const S keep_scale = static_cast<S>(1.0 / (1.0 - p));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (unit(*rng) < p) {
      r.mask[i] = S(0);
    } else {
      r.mask[i] = keep_scale;
      r.out[i] = input[i] * keep_scale;
    }
  }
  return r;
}

template <class S>
TensorT<S> dropout_backward(const TensorT<S>& mask, const TensorT<S>& out_grad) {
  TensorT<S> g(out_grad.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = out_grad[i] * mask[i];
  return g;
}

// ---------------------------------------------------------------------------
// Dense (affine): input (B, N), weights (N, M), bias (M) -> (B, M)
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> dense(const TensorT<S>& input, const TensorT<S>& weights, const TensorT<S>& bias) {
  detail::require(input.rank() == 2, "dense: input must be (B,N), got " +
                                         shape_to_string(input.shape()));
  const int B = input.dim(0), N = input.dim(1);
  detail::require(weights.rank() == 2 && weights.dim(0) == N,
                  "dense: weight extent " + shape_to_string(weights.shape()) +
                      " does not match input " + shape_to_string(input.shape()));
  const int M = weights.dim(1);
  detail::require(bias.rank() == 1 && bias.dim(0) == M,
                  "dense: bias extent " + shape_to_string(bias.shape()));
  TensorT<S> out({B, M});
  for (int b = 0; b < B; ++b) {
    const S* x = input.data() + static_cast<std::size_t>(b) * N;
    S* y = out.data() + static_cast<std::size_t>(b) * M;
    for (int m = 0; m < M; ++m) y[m] = bias[m];
    for (int n = 0; n < N; ++n) {
      const S xv = x[n];
      const S* w = weights.data() + static_cast<std::size_t>(n) * M;
      for (int m = 0; m < M; ++m) y[m] += xv * w[m];
    }
  }
  return out;
}

template <class S>
struct DenseGrads {
  TensorT<S> weights, bias, input;
};

template <class S>
DenseGrads<S> dense_backward(const TensorT<S>& input, const TensorT<S>& weights,
                             const TensorT<S>& out_grad) {
  const int B = input.dim(0), N = input.dim(1), M = weights.dim(1);
  DenseGrads<S> g{TensorT<S>({N, M}), TensorT<S>({M}), TensorT<S>({B, N})};
  for (int b = 0; b < B; ++b) {
    const S* x = input.data() + static_cast<std::size_t>(b) * N;
    const S* gy = out_grad.data() + static_cast<std::size_t>(b) * M;
    S* gx = g.input.data() + static_cast<std::size_t>(b) * N;
    for (int m = 0; m < M; ++m) g.bias[m] += gy[m];
    for (int n = 0; n < N; ++n) {
      const S* w = weights.data() + static_cast<std::size_t>(n) * M;
      S* gw = g.weights.data() + static_cast<std::size_t>(n) * M;
      S acc = 0;
      for (int m = 0; m < M; ++m) {
        gw[m] += x[n] * gy[m];
        acc += gy[m] * w[m];
      }
      gx[n] = acc;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Softmax + categorical cross-entropy (mean over batch)
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> softmax_rows(const TensorT<S>& logits) {
  const int B = logits.dim(0), K = logits.dim(1);
  TensorT<S> probs({B, K});
  for (int b = 0; b < B; ++b) {
    const S* x = logits.data() + static_cast<std::size_t>(b) * K;
    S* p = probs.data() + static_cast<std::size_t>(b) * K;
    S mx = x[0];
    for (int k = 1; k < K; ++k) mx = std::max(mx, x[k]);
    S sum = 0;
    for (int k = 0; k < K; ++k) {
      p[k] = std::exp(x[k] - mx);
      sum += p[k];
    }
    const S inv = S(1) / sum;
    for (int k = 0; k < K; ++k) p[k] *= inv;
  }
  return probs;
}

template <class S>
struct SoftmaxXentOut {
  S loss;                 // mean over the batch
  TensorT<S> probs;       // (B, K)
  TensorT<S> logits_grad; // (probs - onehot) / B
};

template <class S>
SoftmaxXentOut<S> softmax_cross_entropy(const TensorT<S>& logits, const TensorT<S>& onehot) {
  detail::require(logits.rank() == 2 && onehot.same_shape(logits.shape()),
                  "softmax_cross_entropy: logits " + shape_to_string(logits.shape()) +
                      " vs onehot " + shape_to_string(onehot.shape()));
  const int B = logits.dim(0), K = logits.dim(1);
  SoftmaxXentOut<S> r;
  r.probs = softmax_rows(logits);
  r.logits_grad = TensorT<S>({B, K});
  double loss = 0;
  const S invB = S(1) / static_cast<S>(B);
  for (int b = 0; b < B; ++b) {
    const S* h = onehot.data() + static_cast<std::size_t>(b) * K;
    const S* p = r.probs.data() + static_cast<std::size_t>(b) * K;
    S* g = r.logits_grad.data() + static_cast<std::size_t>(b) * K;
    int ones = 0;
    for (int k = 0; k < K; ++k) {
      if (h[k] == S(1)) {
        ++ones;
        loss -= std::log(static_cast<double>(p[k]));
      } else {
        detail::require(h[k] == S(0), "softmax_cross_entropy: malformed one-hot row " +
                                          std::to_string(b));
      }
      g[k] = (p[k] - h[k]) * invB;
    }
    detail::require(ones == 1, "softmax_cross_entropy: one-hot row " + std::to_string(b) +
                                   " has " + std::to_string(ones) + " set entries");
  }
  r.loss = static_cast<S>(loss / B);
  return r;
}

/// Hard decision per row: argmax with lowest-index tie-break.
template <class S>
std::vector<int> argmax_rows(const TensorT<S>& probs) {
  const int B = probs.dim(0), K = probs.dim(1);
  std::vector<int> out(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    const S* p = probs.data() + static_cast<std::size_t>(b) * K;
    int best = 0;
    for (int k = 1; k < K; ++k) {
      if (p[k] > p[best]) best = k;
    }
    out[static_cast<std::size_t>(b)] = best;
  }
  return out;
}

}  // namespace invlab::nn
