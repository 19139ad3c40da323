#pragma once

#include <array>
#include <string>
#include <vector>

#include "invlab/tensor.hpp"

namespace invlab {

/// The 14 recording channels, in storage order.
inline const std::vector<std::string>& default_channel_names() {
  static const std::vector<std::string> names = {"F3", "F4",  "FC3", "FC4", "C1",  "C3",  "C5",
                                                 "CZ", "C2",  "C4",  "C6",  "CP1", "CPZ", "CP2"};
  return names;
}

/// Labeled multichannel trials: X is (n_trials, channels, samples), texture
/// label l_s in {0,1,2}, movement label l_m in {0,1}.
struct TrialSet {
  Tensor X;
  std::vector<int> l_s;
  std::vector<int> l_m;
  std::vector<std::string> channel_names = default_channel_names();

  int n_trials() const { return X.empty() ? 0 : X.dim(0); }
  int n_channels() const { return X.empty() ? 0 : X.dim(1); }
  int n_samples() const { return X.empty() ? 0 : X.dim(2); }

  void validate() const {
    if (X.rank() != 3) throw std::invalid_argument("trial set: X must be (n,channels,samples)");
    const std::size_t n = static_cast<std::size_t>(X.dim(0));
    if (l_s.size() != n || l_m.size() != n)
      throw std::invalid_argument("trial set: label arrays must match n_trials");
    for (std::size_t i = 0; i < n; ++i) {
      if (l_s[i] < 0 || l_s[i] > 2)
        throw std::invalid_argument("trial set: texture label out of range at trial " +
                                    std::to_string(i));
      if (l_m[i] < 0 || l_m[i] > 1)
        throw std::invalid_argument("trial set: movement label out of range at trial " +
                                    std::to_string(i));
    }
    if (channel_names.size() != static_cast<std::size_t>(X.dim(1)))
      throw std::invalid_argument("trial set: channel name count does not match X");
  }

  TrialSet subset(const std::vector<int>& indices) const {
    const int C = n_channels(), T = n_samples();
    TrialSet out;
    out.channel_names = channel_names;
    out.X = Tensor({static_cast<int>(indices.size()), C, T});
    out.l_s.reserve(indices.size());
    out.l_m.reserve(indices.size());
    const std::size_t plane = static_cast<std::size_t>(C) * T;
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const int idx = indices[i];
      std::copy(X.data() + idx * plane, X.data() + (idx + 1) * plane, out.X.data() + i * plane);
      out.l_s.push_back(l_s[static_cast<std::size_t>(idx)]);
      out.l_m.push_back(l_m[static_cast<std::size_t>(idx)]);
    }
    return out;
  }
};

/// Gathers trials into a network batch (B,1,C,T) plus one-hot label matrices.
struct Batch {
  Tensor X;         // (B,1,C,T)
  Tensor onehot_s;  // (B,3)
  Tensor onehot_m;  // (B,2)
};

inline Batch make_batch(const TrialSet& set, const std::vector<int>& indices, int n_classes = 3,
                        int n_nuisance = 2) {
  const int B = static_cast<int>(indices.size());
  const int C = set.n_channels(), T = set.n_samples();
  Batch b;
  b.X = Tensor({B, 1, C, T});
  b.onehot_s = Tensor({B, n_classes});
  b.onehot_m = Tensor({B, n_nuisance});
  const std::size_t plane = static_cast<std::size_t>(C) * T;
  for (int i = 0; i < B; ++i) {
    const int idx = indices[static_cast<std::size_t>(i)];
    std::copy(set.X.data() + idx * plane, set.X.data() + (idx + 1) * plane,
              b.X.data() + static_cast<std::size_t>(i) * plane);
    b.onehot_s[static_cast<std::size_t>(i) * n_classes + set.l_s[static_cast<std::size_t>(idx)]] = 1.0f;
    b.onehot_m[static_cast<std::size_t>(i) * n_nuisance + set.l_m[static_cast<std::size_t>(idx)]] = 1.0f;
  }
  return b;
}

}  // namespace invlab
