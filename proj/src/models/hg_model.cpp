#include "nslf/models/hg_model.hpp"

#include "nslf/core/errors.hpp"

namespace nslf {

void HgConfig::validate() const {
  grid.validate();
  if (sh_degree < 0 || sh_degree > kMaxShDegree) throw DomainError("hg: sh_degree must be in 0..3");
  if (width < 1) throw DomainError("hg: width must be >= 1");
  if (layers < 1) throw DomainError("hg: need at least one decoder layer");
}

namespace {

void decoder_shape(const HgConfig& cfg, std::vector<std::size_t>& dims, std::vector<Activation>& acts) {
  dims.push_back(cfg.grid.output_dim() + static_cast<std::size_t>(cfg.sh_count()));
  for (int i = 0; i + 1 < cfg.layers; ++i) {
    dims.push_back(static_cast<std::size_t>(cfg.width));
    acts.push_back(Activation::ReLU);
  }
  dims.push_back(3);
  acts.push_back(Activation::Sigmoid);
}

}  // namespace

template <typename T>
HgModel<T>::HgModel(const HgConfig& cfg, std::uint64_t seed) : config_(cfg) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  grid_ = HashGrid<T>(cfg.grid, rng);
  std::vector<std::size_t> dims;
  std::vector<Activation> acts;
  decoder_shape(cfg, dims, acts);
  decoder_ = Mlp<T>::glorot(dims, acts, rng);
}

template <typename T>
HgModel<T>::HgModel(const HgConfig& cfg) : config_(cfg), grid_(cfg.grid, T(0)) {
  cfg.validate();
  std::vector<std::size_t> dims;
  std::vector<Activation> acts;
  decoder_shape(cfg, dims, acts);
  decoder_ = Mlp<T>(dims, acts);
}

template <typename T>
Vec3<T> HgModel<T>::forward(const Vec3<T>& p, const Vec3<T>& d, Cache& c) const {
  const std::size_t nf = grid_.output_dim();
  c.input.resize(nf + config_.sh_count());
  grid_.encode(p, std::span<T>(c.input).first(nf), c.grid);
  sh_eval<T>(d, config_.sh_degree, std::span<T>(c.input).subspan(nf));
  const std::span<const T> y = decoder_.forward(c.input, c.decoder);
  c.rgb = {y[0], y[1], y[2]};
  return c.rgb;
}

template <typename T>
Vec3<T> HgModel<T>::predict(const Vec3<T>& p, const Vec3<T>& d) const {
  Cache c;
  return forward(p, d, c);
}

template <typename T>
void HgModel<T>::backward(Cache& c, const Vec3<T>& grad_rgb, GradBundle<T>& grads) const {
  if (grads.blocks.size() != 1 + decoder_.num_blocks()) throw ShapeError("hg: gradient bundle has wrong block count");
  const T g[3] = {grad_rgb.x, grad_rgb.y, grad_rgb.z};
  c.grad_input.resize(c.input.size());
  std::span<std::vector<T>> blocks(grads.blocks);
  decoder_.backward(c.decoder, std::span<const T>(g, 3), blocks.subspan(1), c.grad_input);
  grid_.accumulate_backward(c.grid, std::span<const T>(c.grad_input).first(grid_.output_dim()), grads.blocks[0]);
}

template <typename T>
ParamBlocks<T> HgModel<T>::parameter_blocks() {
  ParamBlocks<T> b{grid_.params()};
  decoder_.append_parameter_blocks(b);
  return b;
}

template <typename T>
ConstParamBlocks<T> HgModel<T>::parameter_blocks() const {
  ConstParamBlocks<T> b{grid_.params()};
  decoder_.append_parameter_blocks(b);
  return b;
}

template class HgModel<float>;
template class HgModel<double>;

}  // namespace nslf
