#pragma once

#include <cstdint>
#include <vector>

#include "nslf/encoding/hash_grid.hpp"
#include "nslf/encoding/spherical_harmonics.hpp"
#include "nslf/numerics/mlp.hpp"

namespace nslf {

struct HgConfig {
  HashGridConfig grid;
  int sh_degree = 3;
  int width = 32;
  /// Dense layers in the decoder, including the 3-wide sigmoid output layer.
  int layers = 4;

  void validate() const;
  int sh_count() const { return sh_coefficient_count(sh_degree); }

  bool operator==(const HgConfig&) const = default;
};

/// Concatenation baseline: rgb = decoder(concat(grid(p), Y(d))), sigmoid output.
template <typename T>
class HgModel {
 public:
  using Scalar = T;

  struct Cache {
    GridCache<T> grid;
    std::vector<T> input;  // [F_p, Y(d)]
    MlpCache<T> decoder;
    Vec3<T> rgb;
    std::vector<T> grad_input;
  };

  HgModel() = default;
  HgModel(const HgConfig& cfg, std::uint64_t seed);
  explicit HgModel(const HgConfig& cfg);

  const HgConfig& config() const { return config_; }

  Vec3<T> forward(const Vec3<T>& p, const Vec3<T>& d, Cache& cache) const;
  Vec3<T> predict(const Vec3<T>& p, const Vec3<T>& d) const;
  void backward(Cache& cache, const Vec3<T>& grad_rgb, GradBundle<T>& grads) const;

  /// Blocks: grid table, then decoder W0, b0, ..., W3, b3.
  ParamBlocks<T> parameter_blocks();
  ConstParamBlocks<T> parameter_blocks() const;
  GradBundle<T> make_grads() const { return GradBundle<T>::shaped_like(parameter_blocks()); }

  HashGrid<T>& grid() { return grid_; }
  const HashGrid<T>& grid() const { return grid_; }
  Mlp<T>& decoder() { return decoder_; }
  const Mlp<T>& decoder() const { return decoder_; }

  template <typename U>
  HgModel<U> cast() const {
    HgModel<U> r(config_);
    r.grid() = grid_.template cast<U>();
    r.decoder() = decoder_.template cast<U>();
    return r;
  }

 private:
  HgConfig config_;
  HashGrid<T> grid_;
  Mlp<T> decoder_;
};

extern template class HgModel<float>;
extern template class HgModel<double>;

}  // namespace nslf
