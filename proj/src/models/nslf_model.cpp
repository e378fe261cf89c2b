#include "nslf/models/nslf_model.hpp"

#include <string>

#include "nslf/core/errors.hpp"

namespace nslf {

void NslfConfig::validate() const {
  grid.validate();
  if (sh_degree < 0 || sh_degree > kMaxShDegree) throw DomainError("nslf: sh_degree must be in 0..3");
  if (latent_channels < 1) throw DomainError("nslf: latent_channels must be >= 1");
  if (head_width < 1 || hyper_hidden < 1) throw DomainError("nslf: widths must be >= 1");
}

namespace {

template <typename T>
void make_heads(const NslfConfig& cfg, Mlp<T>& sh_head, Mlp<T>& w_head, std::mt19937_64* rng) {
  const std::size_t in = cfg.grid.output_dim();
  const std::size_t width = cfg.head_width;
  const std::vector<std::size_t> sh_dims{in, width, static_cast<std::size_t>(cfg.latent_channels * cfg.sh_count())};
  const std::vector<std::size_t> w_dims{in, width, static_cast<std::size_t>(cfg.hyper_param_count())};
  const std::vector<Activation> acts{Activation::ReLU, Activation::None};
  if (rng) {
    sh_head = Mlp<T>::glorot(sh_dims, acts, *rng);
    w_head = Mlp<T>::glorot(w_dims, acts, *rng);
  } else {
    sh_head = Mlp<T>(sh_dims, acts);
    w_head = Mlp<T>(w_dims, acts);
  }
}

}  // namespace

template <typename T>
NslfModel<T>::NslfModel(const NslfConfig& cfg, std::uint64_t seed) : config_(cfg) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  grid_ = HashGrid<T>(cfg.grid, rng);
  make_heads(cfg, sh_head_, w_head_, &rng);
}

template <typename T>
NslfModel<T>::NslfModel(const NslfConfig& cfg) : config_(cfg), grid_(cfg.grid, T(0)) {
  cfg.validate();
  make_heads<T>(cfg, sh_head_, w_head_, nullptr);
}

template <typename T>
Vec3<T> NslfModel<T>::forward(const Vec3<T>& p, const Vec3<T>& d, Cache& c) const {
  const int C = config_.latent_channels;
  const int K = config_.sh_count();
  const int H = config_.hyper_hidden;

  c.features.resize(grid_.output_dim());
  grid_.encode(p, c.features, c.grid);
  const std::span<const T> coeffs = sh_head_.forward(c.features, c.sh_head);
  const std::span<const T> w = w_head_.forward(c.features, c.w_head);

  c.basis.resize(K);
  sh_eval<T>(d, config_.sh_degree, c.basis);
  c.latent.assign(C, T(0));
  for (int k = 0; k < C; ++k) {
    T s = 0;
    for (int i = 0; i < K; ++i) s += coeffs[k * K + i] * c.basis[i];
    c.latent[k] = s;
  }

  const T* w1 = w.data();
  const T* b1 = w1 + C * H;
  const T* w2 = b1 + H;
  const T* b2 = w2 + 3 * H;
  c.hidden_pre.resize(H);
  c.hidden.resize(H);
  for (int j = 0; j < H; ++j) {
    T z = b1[j];
    for (int k = 0; k < C; ++k) z += w1[j * C + k] * c.latent[k];
    c.hidden_pre[j] = z;
    c.hidden[j] = z > T(0) ? z : T(0);
  }
  for (int ch = 0; ch < 3; ++ch) {
    T z = b2[ch];
    for (int j = 0; j < H; ++j) z += w2[ch * H + j] * c.hidden[j];
    c.rgb[ch] = sigmoid(z);
  }
  return c.rgb;
}

template <typename T>
Vec3<T> NslfModel<T>::predict(const Vec3<T>& p, const Vec3<T>& d) const {
  Cache c;
  return forward(p, d, c);
}

template <typename T>
void NslfModel<T>::backward(Cache& c, const Vec3<T>& grad_rgb, GradBundle<T>& grads) const {
  const int C = config_.latent_channels;
  const int K = config_.sh_count();
  const int H = config_.hyper_hidden;
  if (grads.blocks.size() != 9) throw ShapeError("nslf: gradient bundle has wrong block count");

  const std::vector<T>& w = c.w_head.output;
  const T* w1 = w.data();
  const T* w2 = w1 + C * H + H;

  c.grad_w.assign(config_.hyper_param_count(), T(0));
  T* gw1 = c.grad_w.data();
  T* gb1 = gw1 + C * H;
  T* gw2 = gb1 + H;
  T* gb2 = gw2 + 3 * H;

  T g_out[3];
  for (int ch = 0; ch < 3; ++ch) {
    const T s = c.rgb[ch];
    g_out[ch] = grad_rgb[ch] * s * (T(1) - s);
    gb2[ch] = g_out[ch];
    for (int j = 0; j < H; ++j) gw2[ch * H + j] = g_out[ch] * c.hidden[j];
  }
  std::vector<T>& g_latent = c.grad_latent;
  g_latent.assign(C, T(0));
  for (int j = 0; j < H; ++j) {
    if (!(c.hidden_pre[j] > T(0))) continue;
    T g = 0;
    for (int ch = 0; ch < 3; ++ch) g += w2[ch * H + j] * g_out[ch];
    gb1[j] = g;
    for (int k = 0; k < C; ++k) {
      gw1[j * C + k] = g * c.latent[k];
      g_latent[k] += w1[j * C + k] * g;
    }
  }
  c.grad_sh.resize(static_cast<std::size_t>(C) * K);
  for (int k = 0; k < C; ++k)
    for (int i = 0; i < K; ++i) c.grad_sh[k * K + i] = g_latent[k] * c.basis[i];

  const std::size_t nf = grid_.output_dim();
  c.grad_features.resize(nf);
  c.grad_features2.resize(nf);
  std::span<std::vector<T>> blocks(grads.blocks);
  sh_head_.backward(c.sh_head, c.grad_sh, blocks.subspan(1, 4), c.grad_features);
  w_head_.backward(c.w_head, c.grad_w, blocks.subspan(5, 4), c.grad_features2);
  for (std::size_t i = 0; i < nf; ++i) c.grad_features[i] += c.grad_features2[i];
  grid_.accumulate_backward(c.grid, c.grad_features, grads.blocks[0]);
}

template <typename T>
ParamBlocks<T> NslfModel<T>::parameter_blocks() {
  ParamBlocks<T> b{grid_.params()};
  sh_head_.append_parameter_blocks(b);
  w_head_.append_parameter_blocks(b);
  return b;
}

template <typename T>
ConstParamBlocks<T> NslfModel<T>::parameter_blocks() const {
  ConstParamBlocks<T> b{grid_.params()};
  sh_head_.append_parameter_blocks(b);
  w_head_.append_parameter_blocks(b);
  return b;
}

template class NslfModel<float>;
template class NslfModel<double>;

}  // namespace nslf
