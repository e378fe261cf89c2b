#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nslf/encoding/hash_grid.hpp"
#include "nslf/encoding/spherical_harmonics.hpp"
#include "nslf/numerics/mlp.hpp"

namespace nslf {

struct NslfConfig {
  HashGridConfig grid;
  int sh_degree = 3;
  /// Channels of the decoded latent s. 3 by default; 1 reproduces the single-value latent.
  int latent_channels = 3;
  int head_width = 32;
  /// Hidden width of the per-point color network whose weights are generated by the w-head.
  int hyper_hidden = 16;

  void validate() const;
  int sh_count() const { return sh_coefficient_count(sh_degree); }
  /// Size of the generated weight vector: C*H + H + H*3 + 3.
  int hyper_param_count() const { return latent_channels * hyper_hidden + hyper_hidden + hyper_hidden * 3 + 3; }

  bool operator==(const NslfConfig&) const = default;
};

/// SH-decoded surface light field:
///   F_p = grid(p); F_sh = head_sh(F_p); s_k = <F_sh[k], Y(d)>; w_p = head_w(F_p);
///   rgb = sigmoid(W2(w_p) relu(W1(w_p) s + b1(w_p)) + b2(w_p)).
template <typename T>
class NslfModel {
 public:
  using Scalar = T;

  struct Cache {
    GridCache<T> grid;
    std::vector<T> features;  // F_p
    MlpCache<T> sh_head;
    MlpCache<T> w_head;
    std::vector<T> basis;   // Y(d)
    std::vector<T> latent;  // s
    std::vector<T> hidden_pre;
    std::vector<T> hidden;
    Vec3<T> rgb;
    // backward scratch
    std::vector<T> grad_features;
    std::vector<T> grad_features2;
    std::vector<T> grad_sh;
    std::vector<T> grad_w;
    std::vector<T> grad_latent;
  };

  NslfModel() = default;
  NslfModel(const NslfConfig& cfg, std::uint64_t seed);
  /// Zero-parameter model of the given shape (for loading).
  explicit NslfModel(const NslfConfig& cfg);

  const NslfConfig& config() const { return config_; }

  /// p in [0,1]^3, d unit length.
  Vec3<T> forward(const Vec3<T>& p, const Vec3<T>& d, Cache& cache) const;
  Vec3<T> predict(const Vec3<T>& p, const Vec3<T>& d) const;
  /// Accumulates d(grad_rgb . rgb)/d(params) into grads (blocks in parameter_blocks() order).
  void backward(Cache& cache, const Vec3<T>& grad_rgb, GradBundle<T>& grads) const;

  /// Blocks: grid table, head_sh (W0,b0,W1,b1), head_w (W0,b0,W1,b1).
  ParamBlocks<T> parameter_blocks();
  ConstParamBlocks<T> parameter_blocks() const;
  GradBundle<T> make_grads() const { return GradBundle<T>::shaped_like(parameter_blocks()); }

  HashGrid<T>& grid() { return grid_; }
  const HashGrid<T>& grid() const { return grid_; }
  Mlp<T>& sh_head() { return sh_head_; }
  const Mlp<T>& sh_head() const { return sh_head_; }
  Mlp<T>& w_head() { return w_head_; }
  const Mlp<T>& w_head() const { return w_head_; }

  template <typename U>
  NslfModel<U> cast() const {
    NslfModel<U> r(config_);
    r.grid() = grid_.template cast<U>();
    r.sh_head() = sh_head_.template cast<U>();
    r.w_head() = w_head_.template cast<U>();
    return r;
  }

 private:
  NslfConfig config_;
  HashGrid<T> grid_;
  Mlp<T> sh_head_;
  Mlp<T> w_head_;
};

extern template class NslfModel<float>;
extern template class NslfModel<double>;

}  // namespace nslf
