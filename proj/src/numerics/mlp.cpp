#include "nslf/numerics/mlp.hpp"

#include <cmath>
#include <string>

namespace nslf {

template <typename T>
Mlp<T>::Mlp(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts) {
  if (dims.size() < 2 || acts.size() + 1 != dims.size())
    throw ShapeError("mlp: need dims.size() == acts.size() + 1 >= 2");
  for (std::size_t i = 0; i < acts.size(); ++i) layers_.emplace_back(dims[i], dims[i + 1], acts[i]);
}

template <typename T>
Mlp<T> Mlp<T>::glorot(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts,
                      std::mt19937_64& rng) {
  Mlp m(dims, acts);
  for (auto& l : m.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& w : l.weights) w = static_cast<T>(dist(rng));
  }
  return m;
}

template <typename T>
std::size_t Mlp<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

template <typename T>
void Mlp<T>::append_parameter_blocks(ParamBlocks<T>& out) {
  for (auto& l : layers_) {
    out.emplace_back(l.weights);
    out.emplace_back(l.bias);
  }
}

template <typename T>
void Mlp<T>::append_parameter_blocks(ConstParamBlocks<T>& out) const {
  for (const auto& l : layers_) {
    out.emplace_back(l.weights);
    out.emplace_back(l.bias);
  }
}

template <typename T>
std::span<const T> Mlp<T>::forward(std::span<const T> x, MlpCache<T>& cache) const {
  if (x.size() != input_dim())
    throw ShapeError("mlp: input has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(input_dim()));
  cache.inputs.resize(layers_.size());
  cache.pre.resize(layers_.size());
  cache.inputs[0].assign(x.begin(), x.end());
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    const std::vector<T>& in = cache.inputs[li];
    std::vector<T>& pre = cache.pre[li];
    pre.resize(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      const T* w = l.weights.data() + o * l.in;
      T s = l.bias[o];
      for (std::size_t i = 0; i < l.in; ++i) s += w[i] * in[i];
      pre[o] = s;
    }
    std::vector<T>& post = li + 1 < layers_.size() ? cache.inputs[li + 1] : cache.output;
    post.resize(l.out);
    switch (l.activation) {
      case Activation::None:
        for (std::size_t o = 0; o < l.out; ++o) post[o] = pre[o];
        break;
      case Activation::ReLU:
        for (std::size_t o = 0; o < l.out; ++o) post[o] = pre[o] > T(0) ? pre[o] : T(0);
        break;
      case Activation::Sigmoid:
        for (std::size_t o = 0; o < l.out; ++o) post[o] = sigmoid(pre[o]);
        break;
    }
  }
  return cache.output;
}

template <typename T>
std::vector<T> Mlp<T>::forward(std::span<const T> x) const {
  MlpCache<T> cache;
  forward(x, cache);
  return std::move(cache.output);
}

template <typename T>
void Mlp<T>::check_cache(const MlpCache<T>& cache) const {
  if (cache.inputs.size() != layers_.size() || cache.pre.size() != layers_.size())
    throw ShapeError("mlp: cache layer count does not match network");
  for (std::size_t li = 0; li < layers_.size(); ++li)
    if (cache.inputs[li].size() != layers_[li].in || cache.pre[li].size() != layers_[li].out)
      throw ShapeError("mlp: cache does not belong to this network");
  if (cache.output.size() != output_dim()) throw ShapeError("mlp: cache output size mismatch");
}

template <typename T>
void Mlp<T>::backward(const MlpCache<T>& cache, std::span<const T> grad_y,
                      std::span<std::vector<T>> grad_blocks, std::span<T> grad_x) const {
  check_cache(cache);
  if (grad_y.size() != output_dim()) throw ShapeError("mlp: grad_y size mismatch");
  if (grad_blocks.size() != num_blocks()) throw ShapeError("mlp: gradient block count mismatch");
  if (!grad_x.empty() && grad_x.size() != input_dim()) throw ShapeError("mlp: grad_x size mismatch");

  std::vector<T> delta(grad_y.begin(), grad_y.end());
  std::vector<T> upstream;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& l = layers_[li];
    const std::vector<T>& pre = cache.pre[li];
    const std::vector<T>& in = cache.inputs[li];
    switch (l.activation) {
      case Activation::None:
        break;
      case Activation::ReLU:
        for (std::size_t o = 0; o < l.out; ++o)
          if (!(pre[o] > T(0))) delta[o] = T(0);
        break;
      case Activation::Sigmoid:
        for (std::size_t o = 0; o < l.out; ++o) {
          const T s = li + 1 < layers_.size() ? cache.inputs[li + 1][o] : cache.output[o];
          delta[o] *= s * (T(1) - s);
        }
        break;
    }
    std::vector<T>& gw = grad_blocks[2 * li];
    std::vector<T>& gb = grad_blocks[2 * li + 1];
    if (gw.size() != l.weights.size() || gb.size() != l.bias.size())
      throw ShapeError("mlp: gradient block shape mismatch");
    for (std::size_t o = 0; o < l.out; ++o) {
      const T d = delta[o];
      gb[o] += d;
      if (d == T(0)) continue;
      T* g = gw.data() + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) g[i] += d * in[i];
    }
    if (li == 0 && grad_x.empty()) break;
    upstream.assign(l.in, T(0));
    for (std::size_t o = 0; o < l.out; ++o) {
      const T d = delta[o];
      if (d == T(0)) continue;
      const T* w = l.weights.data() + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) upstream[i] += w[i] * d;
    }
    delta.swap(upstream);
  }
  if (!grad_x.empty())
    for (std::size_t i = 0; i < grad_x.size(); ++i) grad_x[i] = delta[i];
}

template <typename T>
std::pair<std::vector<T>, MlpCache<T>> mlp_forward(const Mlp<T>& mlp, std::span<const T> x) {
  MlpCache<T> cache;
  mlp.forward(x, cache);
  std::vector<T> y = cache.output;
  return {std::move(y), std::move(cache)};
}

template <typename T>
std::pair<GradBundle<T>, std::vector<T>> mlp_backward(const Mlp<T>& mlp, const MlpCache<T>& cache,
                                                      std::span<const T> grad_y) {
  ConstParamBlocks<T> blocks;
  mlp.append_parameter_blocks(blocks);
  auto grads = GradBundle<T>::shaped_like(blocks);
  std::vector<T> grad_x(mlp.input_dim(), T(0));
  mlp.backward(cache, grad_y, grads.blocks, grad_x);
  return {std::move(grads), std::move(grad_x)};
}

template class Mlp<float>;
template class Mlp<double>;
template std::pair<std::vector<float>, MlpCache<float>> mlp_forward(const Mlp<float>&, std::span<const float>);
template std::pair<std::vector<double>, MlpCache<double>> mlp_forward(const Mlp<double>&, std::span<const double>);
template std::pair<GradBundle<float>, std::vector<float>> mlp_backward(const Mlp<float>&, const MlpCache<float>&,
                                                                       std::span<const float>);
template std::pair<GradBundle<double>, std::vector<double>> mlp_backward(const Mlp<double>&, const MlpCache<double>&,
                                                                         std::span<const double>);

}  // namespace nslf
