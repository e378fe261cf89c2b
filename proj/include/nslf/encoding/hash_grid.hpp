#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "nslf/core/vec.hpp"
#include "nslf/numerics/grad_bundle.hpp"

namespace nslf {

struct HashGridConfig {
  int levels = 8;
  int features = 2;
  int log2_table_size = 14;
  int base_resolution = 16;
  int max_resolution = 512;

  void validate() const;
  std::uint32_t table_size() const { return std::uint32_t{1} << log2_table_size; }
  std::size_t output_dim() const { return static_cast<std::size_t>(levels) * features; }
  /// Cells per axis at `level`: floor(N_min * b^level), geometric growth from N_min to N_max.
  int resolution(int level) const;

  bool operator==(const HashGridConfig&) const = default;
};

using GridCell = std::array<std::uint32_t, 3>;

/// Spatial hash of a lattice vertex: (x*1 ^ y*2654435761 ^ z*805459861) mod T, in uint32 arithmetic.
std::uint32_t hash_index(const GridCell& cell, const HashGridConfig& cfg);

/// The 8 (entry, weight) pairs per level touched by one encode.
template <typename T>
struct GridCache {
  std::vector<std::uint32_t> entries;  // levels * 8, absolute entry index level * T + slot
  std::vector<T> weights;              // levels * 8
};

/// Sparse gradient over flat table parameters (index = entry * features + feature).
template <typename T>
struct SparseGrad {
  std::vector<std::size_t> indices;
  std::vector<T> values;
};

/// Multi-resolution hash-table feature field with trilinear interpolation.
template <typename T>
class HashGrid {
 public:
  HashGrid() = default;
  /// Entries drawn uniformly from +-init_scale.
  HashGrid(const HashGridConfig& cfg, std::mt19937_64& rng, double init_scale = 1e-4);
  /// All entries set to `value`.
  HashGrid(const HashGridConfig& cfg, T value);

  const HashGridConfig& config() const { return config_; }
  std::size_t output_dim() const { return config_.output_dim(); }

  std::span<T> params() { return table_; }
  std::span<const T> params() const { return table_; }

  /// p must lie in [0,1]^3 (DomainError otherwise). Writes levels*features values.
  void encode(const Vec3<T>& p, std::span<T> out, GridCache<T>& cache) const;
  std::vector<T> encode(const Vec3<T>& p) const;

  /// Adds weight * grad_out slice into a dense gradient shaped like params().
  void accumulate_backward(const GridCache<T>& cache, std::span<const T> grad_out,
                           std::span<T> dense_grad) const;
  /// Same gradient as a merged, index-sorted sparse list (zero contributions omitted).
  SparseGrad<T> backward(const GridCache<T>& cache, std::span<const T> grad_out) const;

  template <typename U>
  HashGrid<U> cast() const {
    HashGrid<U> g(config_, U(0));
    auto dst = g.params();
    for (std::size_t i = 0; i < table_.size(); ++i) dst[i] = static_cast<U>(table_[i]);
    return g;
  }

 private:
  HashGridConfig config_;
  std::vector<int> resolutions_;
  std::vector<T> table_;  // levels x table_size x features
};

extern template class HashGrid<float>;
extern template class HashGrid<double>;

}  // namespace nslf
