#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "invlab/nn.hpp"
#include "invlab/rng.hpp"
#include "invlab/tensor.hpp"

// The full network: a convolutional feature encoder producing a 48-d latent,
// a 3-class texture classifier head and a binary movement adversary head.

namespace invlab {

using nn::Mode;

struct ArchSpec {
  int n_channels = 14;
  int n_samples = 100;
  int temporal_filters = 8;  // F1
  int temporal_kernel = 75;
  int depth_multiplier = 2;  // D
  int separable_filters = 16;
  int separable_kernel = 16;
  int pool1 = 4;
  int pool2 = 8;
  int latent_dim = 48;
  int n_classes = 3;
  int n_nuisance = 2;
  double dropout_p = 0.5;

  int spatial_maps() const { return temporal_filters * depth_multiplier; }
  int pooled_samples() const { return (n_samples / pool1) / pool2; }

  void validate() const {
    if (n_channels < 1 || n_samples < 1 || temporal_filters < 1 || temporal_kernel < 1 ||
        depth_multiplier < 1 || separable_filters < 1 || separable_kernel < 1 || pool1 < 1 ||
        pool2 < 1 || n_classes < 2 || n_nuisance < 2)
      throw std::invalid_argument("arch spec: all extents must be positive");
    if (dropout_p < 0.0 || dropout_p >= 1.0)
      throw std::invalid_argument("arch spec: dropout_p must be in [0,1)");
    if (spatial_maps() != separable_filters)
      throw std::invalid_argument(
          "arch spec: separable_filters must equal temporal_filters*depth_multiplier (" +
          std::to_string(separable_filters) + " != " + std::to_string(spatial_maps()) + ")");
    const int expect = separable_filters * pooled_samples();
    if (latent_dim != expect)
      throw std::invalid_argument(
          "arch spec: latent_dim must equal separable_filters*floor(floor(n_samples/pool1)/pool2) (" +
          std::to_string(latent_dim) + " != " + std::to_string(separable_filters) + "*" +
          std::to_string(pooled_samples()) + " = " + std::to_string(expect) + ")");
  }
};

enum class ParamGroup { kEncoder, kClassifier, kAdversary };

template <class S>
struct NetworkParamsT {
  ArchSpec spec;
  std::uint64_t seed = 0;

  TensorT<S> conv_kernels;  // (F1, 1, K)
  nn::BatchNormParamsT<S> bn1;
  TensorT<S> depthwise_kernels;  // (F1, D, C)
  nn::BatchNormParamsT<S> bn2;
  TensorT<S> sep_depth_kernels;  // (F, Ks)
  TensorT<S> sep_point_kernels;  // (F, F)
  nn::BatchNormParamsT<S> bn3;
  TensorT<S> cls_w, cls_b;  // (48, n_classes), (n_classes)
  TensorT<S> adv_w, adv_b;  // (48, n_nuisance), (n_nuisance)

  template <class T>
  NetworkParamsT<T> cast() const {
    NetworkParamsT<T> o;
    o.spec = spec;
    o.seed = seed;
    o.conv_kernels = conv_kernels.template cast<T>();
    o.bn1 = {bn1.gamma.template cast<T>(), bn1.beta.template cast<T>(),
             bn1.run_mean.template cast<T>(), bn1.run_var.template cast<T>()};
    o.depthwise_kernels = depthwise_kernels.template cast<T>();
    o.bn2 = {bn2.gamma.template cast<T>(), bn2.beta.template cast<T>(),
             bn2.run_mean.template cast<T>(), bn2.run_var.template cast<T>()};
    o.sep_depth_kernels = sep_depth_kernels.template cast<T>();
    o.sep_point_kernels = sep_point_kernels.template cast<T>();
    o.bn3 = {bn3.gamma.template cast<T>(), bn3.beta.template cast<T>(),
             bn3.run_mean.template cast<T>(), bn3.run_var.template cast<T>()};
    o.cls_w = cls_w.template cast<T>();
    o.cls_b = cls_b.template cast<T>();
    o.adv_w = adv_w.template cast<T>();
    o.adv_b = adv_b.template cast<T>();
    return o;
  }
};

using NetworkParams = NetworkParamsT<float>;

template <class S>
struct NamedParam {
  std::string name;
  TensorT<S>* tensor;
  ParamGroup group;
  bool trainable;
};

/// Enumerates every parameter array in checkpoint order. Running statistics
/// are included with trainable=false.
template <class S>
std::vector<NamedParam<S>> named_params(NetworkParamsT<S>& p) {
  using NP = NamedParam<S>;
  return {
      NP{"conv_temporal.kernels", &p.conv_kernels, ParamGroup::kEncoder, true},
      NP{"bn1.gamma", &p.bn1.gamma, ParamGroup::kEncoder, true},
      NP{"bn1.beta", &p.bn1.beta, ParamGroup::kEncoder, true},
      NP{"bn1.run_mean", &p.bn1.run_mean, ParamGroup::kEncoder, false},
      NP{"bn1.run_var", &p.bn1.run_var, ParamGroup::kEncoder, false},
      NP{"depthwise.kernels", &p.depthwise_kernels, ParamGroup::kEncoder, true},
      NP{"bn2.gamma", &p.bn2.gamma, ParamGroup::kEncoder, true},
      NP{"bn2.beta", &p.bn2.beta, ParamGroup::kEncoder, true},
      NP{"bn2.run_mean", &p.bn2.run_mean, ParamGroup::kEncoder, false},
      NP{"bn2.run_var", &p.bn2.run_var, ParamGroup::kEncoder, false},
      NP{"separable.depth_kernels", &p.sep_depth_kernels, ParamGroup::kEncoder, true},
      NP{"separable.point_kernels", &p.sep_point_kernels, ParamGroup::kEncoder, true},
      NP{"bn3.gamma", &p.bn3.gamma, ParamGroup::kEncoder, true},
      NP{"bn3.beta", &p.bn3.beta, ParamGroup::kEncoder, true},
      NP{"bn3.run_mean", &p.bn3.run_mean, ParamGroup::kEncoder, false},
      NP{"bn3.run_var", &p.bn3.run_var, ParamGroup::kEncoder, false},
      NP{"classifier.weights", &p.cls_w, ParamGroup::kClassifier, true},
      NP{"classifier.bias", &p.cls_b, ParamGroup::kClassifier, true},
      NP{"adversary.weights", &p.adv_w, ParamGroup::kAdversary, true},
      NP{"adversary.bias", &p.adv_b, ParamGroup::kAdversary, true},
  };
}

namespace detail {

// Glorot-uniform draw; sampling happens in double so the same seed yields
// the same parameters (up to rounding) in every precision.
template <class S>
TensorT<S> glorot_uniform(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  TensorT<S> t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<S>(u(rng));
  return t;
}

}  // namespace detail

template <class S>
NetworkParamsT<S> build_network(const ArchSpec& spec, std::uint64_t seed, bool zero_heads = false) {
  spec.validate();
  NetworkParamsT<S> p;
  p.spec = spec;
  p.seed = seed;
  Rng rng = make_rng(seed);

  const int F1 = spec.temporal_filters, K = spec.temporal_kernel;
  const int D = spec.depth_multiplier, C = spec.n_channels;
  const int F = spec.separable_filters, Ks = spec.separable_kernel;

  p.conv_kernels = detail::glorot_uniform<S>({F1, 1, K}, K, F1 * K, rng);
  p.bn1 = nn::BatchNormParamsT<S>::init(F1);
  p.depthwise_kernels = detail::glorot_uniform<S>({F1, D, C}, F1 * C, D * C, rng);
  p.bn2 = nn::BatchNormParamsT<S>::init(F1 * D);
  p.sep_depth_kernels = detail::glorot_uniform<S>({F, Ks}, F * Ks, Ks, rng);
  p.sep_point_kernels = detail::glorot_uniform<S>({F, F}, F, F, rng);
  p.bn3 = nn::BatchNormParamsT<S>::init(F);
  if (zero_heads) {
    p.cls_w = TensorT<S>({spec.latent_dim, spec.n_classes});
    p.adv_w = TensorT<S>({spec.latent_dim, spec.n_nuisance});
  } else {
    p.cls_w = detail::glorot_uniform<S>({spec.latent_dim, spec.n_classes}, spec.latent_dim,
                                        spec.n_classes, rng);
    p.adv_w = detail::glorot_uniform<S>({spec.latent_dim, spec.n_nuisance}, spec.latent_dim,
                                        spec.n_nuisance, rng);
  }
  p.cls_b = TensorT<S>({spec.n_classes});
  p.adv_b = TensorT<S>({spec.n_nuisance});
  return p;
}

struct LayerCount {
  std::string layer;
  long count;
};

struct ParameterTable {
  std::vector<LayerCount> layers;
  long total = 0;
};

template <class S>
ParameterTable count_parameters(const NetworkParamsT<S>& p) {
  auto n = [](const TensorT<S>& t) { return static_cast<long>(t.size()); };
  ParameterTable t;
  t.layers = {
      {"conv_temporal", n(p.conv_kernels)},
      {"bn1", n(p.bn1.gamma) + n(p.bn1.beta)},
      {"depthwise", n(p.depthwise_kernels)},
      {"bn2", n(p.bn2.gamma) + n(p.bn2.beta)},
      {"separable", n(p.sep_depth_kernels) + n(p.sep_point_kernels)},
      {"bn3", n(p.bn3.gamma) + n(p.bn3.beta)},
      {"classifier", n(p.cls_w) + n(p.cls_b)},
      {"adversary", n(p.adv_w) + n(p.adv_b)},
  };
  for (const auto& l : t.layers) t.total += l.count;
  return t;
}

// ---------------------------------------------------------------------------
// Encoder forward/backward
// ---------------------------------------------------------------------------

template <class S>
struct EncoderCache {
  TensorT<S> x;  // (B,1,C,T)
  TensorT<S> conv_out;
  nn::BatchNormCache<S> bn1_cache;
  TensorT<S> elu1_out;
  TensorT<S> dw_out;
  nn::BatchNormCache<S> bn2_cache;
  TensorT<S> elu2_out;
  TensorT<S> pool1_out;
  TensorT<S> drop1_mask;
  TensorT<S> drop1_out;
  TensorT<S> sep_mid;
  TensorT<S> sep_out;
  nn::BatchNormCache<S> bn3_cache;
  TensorT<S> elu3_out;
  TensorT<S> pool2_out;
  TensorT<S> drop2_mask;
  TensorT<S> z;  // (B, latent)
  Mode mode = Mode::kInfer;
};

/// Runs the encoder. Train mode consumes the RNG for dropout masks and
/// leaves proposed batch-norm running statistics in the cache; it never
/// mutates params. Infer mode is a deterministic pure function.
template <class S>
TensorT<S> encode(const TensorT<S>& X, const NetworkParamsT<S>& params, Mode mode, Rng* rng,
                  EncoderCache<S>* cache = nullptr) {
  const ArchSpec& a = params.spec;
  if (X.rank() != 4 || X.dim(1) != 1 || X.dim(2) != a.n_channels || X.dim(3) != a.n_samples)
    throw std::invalid_argument("encode: expected input (B,1," + std::to_string(a.n_channels) +
                                "," + std::to_string(a.n_samples) + "), got " +
                                shape_to_string(X.shape()));
  const int B = X.dim(0);

  EncoderCache<S> local;
  EncoderCache<S>& c = cache ? *cache : local;
  c.mode = mode;
  c.x = X;

  c.conv_out = nn::conv_temporal(X, params.conv_kernels);
  TensorT<S> h = nn::batchnorm(c.conv_out, params.bn1, mode, &c.bn1_cache);
  c.elu1_out = nn::elu(h);
  c.dw_out = nn::depthwise_conv(c.elu1_out, params.depthwise_kernels);
  h = nn::batchnorm(c.dw_out, params.bn2, mode, &c.bn2_cache);
  c.elu2_out = nn::elu(h);
  c.pool1_out = nn::avg_pool(c.elu2_out, a.pool1);
  auto d1 = nn::dropout(c.pool1_out, a.dropout_p, mode, rng);
  c.drop1_out = std::move(d1.out);
  c.drop1_mask = std::move(d1.mask);
  auto sep = nn::separable_conv(c.drop1_out, params.sep_depth_kernels, params.sep_point_kernels);
  c.sep_out = std::move(sep.out);
  c.sep_mid = std::move(sep.mid);
  h = nn::batchnorm(c.sep_out, params.bn3, mode, &c.bn3_cache);
  c.elu3_out = nn::elu(h);
  c.pool2_out = nn::avg_pool(c.elu3_out, a.pool2);
  auto d2 = nn::dropout(c.pool2_out, a.dropout_p, mode, rng);
  c.drop2_mask = std::move(d2.mask);

  // flatten (B, F, 1, P) -> (B, F*P)
  c.z = TensorT<S>({B, a.latent_dim}, std::move(d2.out.raw()));
  return c.z;
}

template <class S>
struct EncoderGrads {
  TensorT<S> conv_kernels;
  TensorT<S> bn1_gamma, bn1_beta;
  TensorT<S> depthwise_kernels;
  TensorT<S> bn2_gamma, bn2_beta;
  TensorT<S> sep_depth_kernels, sep_point_kernels;
  TensorT<S> bn3_gamma, bn3_beta;
};

template <class S>
EncoderGrads<S> encoder_backward(const EncoderCache<S>& c, const NetworkParamsT<S>& params,
                                 const TensorT<S>& z_grad) {
  const ArchSpec& a = params.spec;
  const int B = c.x.dim(0);

  // unflatten and walk the layers in reverse
  TensorT<S> g({B, a.separable_filters, 1, a.pooled_samples()},
               std::vector<S>(z_grad.raw()));
  g = nn::dropout_backward(c.drop2_mask, g);
  g = nn::avg_pool_backward(c.elu3_out.shape(), a.pool2, g);
  g = nn::elu_backward(c.elu3_out, g);
  auto bn3 = nn::batchnorm_backward(c.bn3_cache, params.bn3, g);
  auto sep = nn::separable_conv_backward(c.drop1_out, params.sep_depth_kernels,
                                         params.sep_point_kernels, c.sep_mid, bn3.input);
  g = nn::dropout_backward(c.drop1_mask, sep.input);
  g = nn::avg_pool_backward(c.elu2_out.shape(), a.pool1, g);
  g = nn::elu_backward(c.elu2_out, g);
  auto bn2 = nn::batchnorm_backward(c.bn2_cache, params.bn2, g);
  auto dw = nn::depthwise_conv_backward(c.elu1_out, params.depthwise_kernels, bn2.input);
  g = nn::elu_backward(c.elu1_out, dw.input);
  auto bn1 = nn::batchnorm_backward(c.bn1_cache, params.bn1, g);
  auto conv = nn::conv_temporal_backward(c.x, params.conv_kernels, bn1.input);

  EncoderGrads<S> eg;
  eg.conv_kernels = std::move(conv.kernels);
  eg.bn1_gamma = std::move(bn1.gamma);
  eg.bn1_beta = std::move(bn1.beta);
  eg.depthwise_kernels = std::move(dw.kernels);
  eg.bn2_gamma = std::move(bn2.gamma);
  eg.bn2_beta = std::move(bn2.beta);
  eg.sep_depth_kernels = std::move(sep.depth_kernels);
  eg.sep_point_kernels = std::move(sep.point_kernels);
  eg.bn3_gamma = std::move(bn3.gamma);
  eg.bn3_beta = std::move(bn3.beta);
  return eg;
}

// ---------------------------------------------------------------------------
// Heads
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> classify(const TensorT<S>& z, const NetworkParamsT<S>& params) {
  if (z.rank() != 2 || z.dim(1) != params.spec.latent_dim)
    throw std::invalid_argument("classify: latent must be (B," +
                                std::to_string(params.spec.latent_dim) + "), got " +
                                shape_to_string(z.shape()));
  return nn::softmax_rows(nn::dense(z, params.cls_w, params.cls_b));
}

template <class S>
TensorT<S> adversary_predict(const TensorT<S>& z, const NetworkParamsT<S>& params) {
  if (z.rank() != 2 || z.dim(1) != params.spec.latent_dim)
    throw std::invalid_argument("adversary_predict: latent must be (B," +
                                std::to_string(params.spec.latent_dim) + "), got " +
                                shape_to_string(z.shape()));
  return nn::softmax_rows(nn::dense(z, params.adv_w, params.adv_b));
}

/// Forward+backward of one dense softmax head on a fixed latent.
template <class S>
struct HeadGrads {
  S loss;
  TensorT<S> probs;
  TensorT<S> weights, bias;  // grads
  TensorT<S> z_grad;
};

template <class S>
HeadGrads<S> head_grads(const TensorT<S>& z, const TensorT<S>& w, const TensorT<S>& b,
                        const TensorT<S>& onehot) {
  auto logits = nn::dense(z, w, b);
  auto sx = nn::softmax_cross_entropy(logits, onehot);
  auto dg = nn::dense_backward(z, w, sx.logits_grad);
  return HeadGrads<S>{sx.loss, std::move(sx.probs), std::move(dg.weights), std::move(dg.bias),
                      std::move(dg.input)};
}

// ---------------------------------------------------------------------------
// Joint losses
// ---------------------------------------------------------------------------

template <class S>
struct ForwardResult {
  S loss_classifier = 0;
  S loss_adversary = 0;
  S combined = 0;  // loss_classifier - lambda * loss_adversary
  TensorT<S> probs_classifier, probs_adversary;
  TensorT<S> z;
  EncoderCache<S> cache;
};

/// Single shared encoder pass feeding both heads.
template <class S>
ForwardResult<S> forward_losses(const TensorT<S>& X, const TensorT<S>& onehot_s,
                                const TensorT<S>& onehot_m, const NetworkParamsT<S>& params,
                                double lambda, Mode mode, Rng* rng) {
  if (lambda < 0.0)
    throw std::invalid_argument("forward_losses: lambda must be >= 0, got " +
                                std::to_string(lambda));
  ForwardResult<S> r;
  r.z = encode(X, params, mode, rng, &r.cache);
  auto cls = nn::softmax_cross_entropy(nn::dense(r.z, params.cls_w, params.cls_b), onehot_s);
  auto adv = nn::softmax_cross_entropy(nn::dense(r.z, params.adv_w, params.adv_b), onehot_m);
  r.loss_classifier = cls.loss;
  r.loss_adversary = adv.loss;
  r.combined = static_cast<S>(cls.loss - lambda * adv.loss);
  r.probs_classifier = std::move(cls.probs);
  r.probs_adversary = std::move(adv.probs);
  return r;
}

template <class S>
struct CombinedGrads {
  EncoderGrads<S> encoder;
  TensorT<S> cls_w, cls_b;
};

/// Gradients of L_c - lambda*L_a w.r.t. encoder and classifier parameters,
/// holding the adversary fixed at its current weights.
template <class S>
CombinedGrads<S> combined_backward(const ForwardResult<S>& fwd, const NetworkParamsT<S>& params,
                                   double lambda, const TensorT<S>& onehot_s,
                                   const TensorT<S>& onehot_m) {
  CombinedGrads<S> out;
  auto cls = head_grads(fwd.z, params.cls_w, params.cls_b, onehot_s);
  out.cls_w = std::move(cls.weights);
  out.cls_b = std::move(cls.bias);
  TensorT<S> dz = std::move(cls.z_grad);
  if (lambda != 0.0) {
    auto adv = head_grads(fwd.z, params.adv_w, params.adv_b, onehot_m);
    const S lam = static_cast<S>(lambda);
    for (std::size_t i = 0; i < dz.size(); ++i) dz[i] -= lam * adv.z_grad[i];
  }
  out.encoder = encoder_backward(fwd.cache, params, dz);
  return out;
}

}  // namespace invlab
