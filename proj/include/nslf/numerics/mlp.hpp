#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "nslf/numerics/grad_bundle.hpp"

namespace nslf {

enum class Activation : std::uint8_t { None = 0, ReLU = 1, Sigmoid = 2 };

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

/// Fully connected layer y = act(W x + b); W is out x in, row-major.
template <typename T>
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::None;
  std::vector<T> weights;
  std::vector<T> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation act)
      : in(in_dim), out(out_dim), activation(act), weights(in_dim * out_dim, T(0)), bias(out_dim, T(0)) {}
};

/// Per-layer activations retained by a forward pass.
template <typename T>
struct MlpCache {
  std::vector<std::vector<T>> inputs;  // input to layer i
  std::vector<std::vector<T>> pre;     // W x + b of layer i
  std::vector<T> output;
};

template <typename T>
class Mlp {
 public:
  Mlp() = default;
  /// dims has layers+1 entries; acts has one entry per layer. Parameters start at zero.
  Mlp(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts);

  /// Glorot-uniform weights, zero biases.
  static Mlp glorot(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts,
                    std::mt19937_64& rng);

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t num_blocks() const { return 2 * layers_.size(); }
  std::size_t parameter_count() const;

  std::vector<DenseLayer<T>>& layers() { return layers_; }
  const std::vector<DenseLayer<T>>& layers() const { return layers_; }

  /// Blocks in order: W0, b0, W1, b1, ...
  void append_parameter_blocks(ParamBlocks<T>& out);
  void append_parameter_blocks(ConstParamBlocks<T>& out) const;

  /// Runs the network, leaving every intermediate in `cache`. Returns a view of cache.output.
  std::span<const T> forward(std::span<const T> x, MlpCache<T>& cache) const;
  /// Inference only.
  std::vector<T> forward(std::span<const T> x) const;

  /// Reverse pass. Accumulates (+=) parameter gradients into grad_blocks (num_blocks() arrays
  /// in block order) and, when grad_x is non-empty, writes (=) the input gradient.
  void backward(const MlpCache<T>& cache, std::span<const T> grad_y,
                std::span<std::vector<T>> grad_blocks, std::span<T> grad_x) const;

  template <typename U>
  Mlp<U> cast() const {
    Mlp<U> r;
    for (const auto& l : layers_) {
      DenseLayer<U> c(l.in, l.out, l.activation);
      for (std::size_t i = 0; i < l.weights.size(); ++i) c.weights[i] = static_cast<U>(l.weights[i]);
      for (std::size_t i = 0; i < l.bias.size(); ++i) c.bias[i] = static_cast<U>(l.bias[i]);
      r.layers().push_back(std::move(c));
    }
    return r;
  }

 private:
  void check_cache(const MlpCache<T>& cache) const;

  std::vector<DenseLayer<T>> layers_;
};

/// Functional forms: forward with cache, and backward returning fresh gradient arrays.
template <typename T>
std::pair<std::vector<T>, MlpCache<T>> mlp_forward(const Mlp<T>& mlp, std::span<const T> x);

template <typename T>
std::pair<GradBundle<T>, std::vector<T>> mlp_backward(const Mlp<T>& mlp, const MlpCache<T>& cache,
                                                      std::span<const T> grad_y);

extern template class Mlp<float>;
extern template class Mlp<double>;

}  // namespace nslf
