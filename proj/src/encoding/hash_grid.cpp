#include "nslf/encoding/hash_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nslf/core/errors.hpp"

namespace nslf {

void HashGridConfig::validate() const {
  if (levels < 1) throw DomainError("hash grid: need at least one level");
  if (features < 1) throw DomainError("hash grid: need at least one feature per level");
  if (log2_table_size < 1 || log2_table_size > 30) throw DomainError("hash grid: log2 table size out of range");
  if (base_resolution < 1 || base_resolution > max_resolution)
    throw DomainError("hash grid: need 1 <= N_min <= N_max");
}

int HashGridConfig::resolution(int level) const {
  if (levels == 1) return base_resolution;
  const double log_growth =
      (std::log(static_cast<double>(max_resolution)) - std::log(static_cast<double>(base_resolution))) /
      (levels - 1);
  // The epsilon keeps floor(N_min * b^(L-1)) at N_max despite exp/log rounding.
  return static_cast<int>(std::floor(base_resolution * std::exp(log_growth * level) + 1e-6));
}

std::uint32_t hash_index(const GridCell& cell, const HashGridConfig& cfg) {
  constexpr std::uint32_t kPrimes[3] = {1u, 2654435761u, 805459861u};
  const std::uint32_t h = (cell[0] * kPrimes[0]) ^ (cell[1] * kPrimes[1]) ^ (cell[2] * kPrimes[2]);
  return h & (cfg.table_size() - 1u);
}

template <typename T>
HashGrid<T>::HashGrid(const HashGridConfig& cfg, std::mt19937_64& rng, double init_scale) : HashGrid(cfg, T(0)) {
  std::uniform_real_distribution<double> dist(-init_scale, init_scale);
  for (auto& v : table_) v = static_cast<T>(dist(rng));
}

template <typename T>
HashGrid<T>::HashGrid(const HashGridConfig& cfg, T value) : config_(cfg) {
  cfg.validate();
  resolutions_.resize(cfg.levels);
  for (int l = 0; l < cfg.levels; ++l) resolutions_[l] = cfg.resolution(l);
  table_.assign(static_cast<std::size_t>(cfg.levels) * cfg.table_size() * cfg.features, value);
}

template <typename T>
void HashGrid<T>::encode(const Vec3<T>& p, std::span<T> out, GridCache<T>& cache) const {
  for (int a = 0; a < 3; ++a)
    if (!(p[a] >= T(0) && p[a] <= T(1)))
      throw DomainError("hash grid: point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ", " +
                        std::to_string(p.z) + ") outside the unit cube");
  const int L = config_.levels;
  const int F = config_.features;
  if (out.size() != output_dim()) throw ShapeError("hash grid: output span has wrong size");
  cache.entries.resize(static_cast<std::size_t>(L) * 8);
  cache.weights.resize(static_cast<std::size_t>(L) * 8);
  const std::uint32_t table_size = config_.table_size();

  for (int l = 0; l < L; ++l) {
    const int res = resolutions_[l];
    std::uint32_t base[3];
    T frac[3];
    for (int a = 0; a < 3; ++a) {
      const T x = p[a] * static_cast<T>(res);
      int b = static_cast<int>(std::floor(x));
      b = std::clamp(b, 0, res - 1);  // p == 1 falls into the last cell
      base[a] = static_cast<std::uint32_t>(b);
      frac[a] = x - static_cast<T>(b);
    }
    T* o = out.data() + static_cast<std::size_t>(l) * F;
    for (int f = 0; f < F; ++f) o[f] = T(0);
    for (int c = 0; c < 8; ++c) {
      T w = T(1);
      GridCell cell;
      for (int a = 0; a < 3; ++a) {
        const bool hi = (c >> a) & 1;
        cell[a] = base[a] + (hi ? 1u : 0u);
        w *= hi ? frac[a] : T(1) - frac[a];
      }
      const std::uint32_t entry = static_cast<std::uint32_t>(l) * table_size + hash_index(cell, config_);
      cache.entries[l * 8 + c] = entry;
      cache.weights[l * 8 + c] = w;
      const T* e = table_.data() + static_cast<std::size_t>(entry) * F;
      for (int f = 0; f < F; ++f) o[f] += w * e[f];
    }
  }
}

template <typename T>
std::vector<T> HashGrid<T>::encode(const Vec3<T>& p) const {
  std::vector<T> out(output_dim());
  GridCache<T> cache;
  encode(p, out, cache);
  return out;
}

template <typename T>
void HashGrid<T>::accumulate_backward(const GridCache<T>& cache, std::span<const T> grad_out,
                                      std::span<T> dense_grad) const {
  const int L = config_.levels;
  const int F = config_.features;
  if (cache.entries.size() != static_cast<std::size_t>(L) * 8 || cache.weights.size() != cache.entries.size())
    throw ShapeError("hash grid: cache does not match grid");
  if (grad_out.size() != output_dim()) throw ShapeError("hash grid: grad_out has wrong size");
  if (dense_grad.size() != table_.size()) throw ShapeError("hash grid: dense gradient has wrong size");
  for (int l = 0; l < L; ++l) {
    const T* g = grad_out.data() + static_cast<std::size_t>(l) * F;
    for (int c = 0; c < 8; ++c) {
      const T w = cache.weights[l * 8 + c];
      T* d = dense_grad.data() + static_cast<std::size_t>(cache.entries[l * 8 + c]) * F;
      for (int f = 0; f < F; ++f) d[f] += w * g[f];
    }
  }
}

template <typename T>
SparseGrad<T> HashGrid<T>::backward(const GridCache<T>& cache, std::span<const T> grad_out) const {
  const int L = config_.levels;
  const int F = config_.features;
  if (cache.entries.size() != static_cast<std::size_t>(L) * 8 || cache.weights.size() != cache.entries.size())
    throw ShapeError("hash grid: cache does not match grid");
  if (grad_out.size() != output_dim()) throw ShapeError("hash grid: grad_out has wrong size");
  std::vector<std::pair<std::size_t, T>> items;
  for (int l = 0; l < L; ++l) {
    const T* g = grad_out.data() + static_cast<std::size_t>(l) * F;
    for (int c = 0; c < 8; ++c) {
      const T w = cache.weights[l * 8 + c];
      if (w == T(0)) continue;
      for (int f = 0; f < F; ++f) {
        if (g[f] == T(0)) continue;
        items.emplace_back(static_cast<std::size_t>(cache.entries[l * 8 + c]) * F + f, w * g[f]);
      }
    }
  }
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseGrad<T> out;
  for (const auto& [idx, val] : items) {
    if (!out.indices.empty() && out.indices.back() == idx) {
      out.values.back() += val;
    } else {
      out.indices.push_back(idx);
      out.values.push_back(val);
    }
  }
  return out;
}

template class HashGrid<float>;
template class HashGrid<double>;

}  // namespace nslf
