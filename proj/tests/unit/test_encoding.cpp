#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nslf/core/errors.hpp"
#include "nslf/encoding/hash_grid.hpp"
#include "nslf/encoding/spherical_harmonics.hpp"
#include "nslf/numerics/finite_diff.hpp"
#include "test_util.hpp"

using namespace nslf;

namespace {

HashGridConfig small_config() {
  HashGridConfig c;
  c.levels = 4;
  c.features = 2;
  c.log2_table_size = 10;
  c.base_resolution = 4;
  c.max_resolution = 32;
  return c;
}

double table_entry(const HashGrid<double>& g, int level, const GridCell& cell, int feature) {
  const auto& cfg = g.config();
  const std::size_t entry = static_cast<std::size_t>(level) * cfg.table_size() + hash_index(cell, cfg);
  return g.params()[entry * cfg.features + feature];
}

}  // namespace

TEST_SUITE("encoding") {
  TEST_CASE("hash index examples") {
    HashGridConfig cfg;  // T = 2^14
    CHECK(hash_index({0, 0, 0}, cfg) == 0);
    CHECK(hash_index({1, 0, 0}, cfg) == 1);
    CHECK(hash_index({0, 1, 0}, cfg) == 14769);
    CHECK(hash_index({0, 1, 0}, cfg) == 2654435761ull % 16384);
    CHECK(hash_index({0, 0, 1}, cfg) == 805459861ull % 16384);
    // pure: repeated calls agree
    CHECK(hash_index({17, 3, 999}, cfg) == hash_index({17, 3, 999}, cfg));
    for (std::uint32_t x = 0; x < 50; ++x) CHECK(hash_index({x, x * 7, x * 13}, cfg) < cfg.table_size());
  }

  TEST_CASE("per-level resolutions grow geometrically from N_min to N_max") {
    HashGridConfig cfg;
    CHECK(cfg.resolution(0) == 16);
    CHECK(cfg.resolution(cfg.levels - 1) == 512);
    const double b = std::exp((std::log(512.0) - std::log(16.0)) / 7.0);
    for (int l = 0; l < cfg.levels; ++l) CHECK(cfg.resolution(l) == static_cast<int>(std::floor(16 * std::pow(b, l) + 1e-6)));
    HashGridConfig bad = cfg;
    bad.log2_table_size = 0;
    bad.base_resolution = 600;
    CHECK_THROWS_AS(bad.validate(), DomainError);
  }

  TEST_CASE("default grid entries lie in +-1e-4") {
    std::mt19937_64 rng(1);
    HashGrid<float> g(HashGridConfig{}, rng);
    for (float v : g.params()) CHECK(std::abs(v) <= 1e-4f);
  }

  TEST_CASE("constant table encodes to the constant") {
    HashGrid<double> g(small_config(), 0.37);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 20; ++i) {
      const auto out = g.encode(Vec3d{u(rng), u(rng), u(rng)});
      for (double v : out) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
    }
  }

  TEST_CASE("lattice vertex returns that vertex's entry") {
    std::mt19937_64 rng(3);
    HashGrid<double> g(small_config(), rng, 1.0);
    const int n0 = g.config().resolution(0);
    const auto out = g.encode(Vec3d{3.0 / n0, 1.0 / n0, 2.0 / n0});
    CHECK(out[0] == table_entry(g, 0, {3, 1, 2}, 0));
    CHECK(out[1] == table_entry(g, 0, {3, 1, 2}, 1));
  }

  TEST_CASE("cell center is the mean of the 8 corners (trilinear oracle)") {
    std::mt19937_64 rng(4);
    HashGrid<double> g(small_config(), rng, 1.0);
    const Vec3d p{0.41, 0.77, 0.13};
    const auto out = g.encode(p);
    for (int l = 0; l < g.config().levels; ++l) {
      const int res = g.config().resolution(l);
      // independent trilinear interpolation at p itself
      std::uint32_t base[3];
      double frac[3];
      for (int a = 0; a < 3; ++a) {
        const double x = p[a] * res;
        base[a] = static_cast<std::uint32_t>(std::min<int>(static_cast<int>(x), res - 1));
        frac[a] = x - base[a];
      }
      for (int f = 0; f < 2; ++f) {
        double ref = 0;
        for (int dz = 0; dz < 2; ++dz)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const double w = (dx ? frac[0] : 1 - frac[0]) * (dy ? frac[1] : 1 - frac[1]) * (dz ? frac[2] : 1 - frac[2]);
              ref += w * table_entry(g, l, {base[0] + dx, base[1] + dy, base[2] + dz}, f);
            }
        CHECK(std::abs(out[l * 2 + f] - ref) < 1e-12);
      }
    }
    // the exact cell center of level 0
    const int n0 = g.config().resolution(0);
    const Vec3d c{1.5 / n0, 2.5 / n0, 0.5 / n0};
    const auto oc = g.encode(c);
    double mean = 0;
    for (std::uint32_t k = 0; k < 8; ++k) mean += table_entry(g, 0, {1 + (k & 1), 2 + ((k >> 1) & 1), (k >> 2) & 1}, 0);
    CHECK(std::abs(oc[0] - mean / 8) < 1e-6);
  }

  TEST_CASE("points outside the unit cube are domain errors; 1.0 is inside") {
    HashGrid<double> g(small_config(), 0.0);
    CHECK_THROWS_AS(g.encode(Vec3d{1.0 + 1e-9, 0.5, 0.5}), DomainError);
    CHECK_THROWS_AS(g.encode(Vec3d{0.5, -1e-9, 0.5}), DomainError);
    CHECK_THROWS_AS(g.encode(Vec3d{0.5, std::nan(""), 0.5}), DomainError);
    CHECK_NOTHROW(g.encode(Vec3d{1.0, 1.0, 1.0}));
  }

  TEST_CASE("backward: zero upstream gives an empty sparse gradient") {
    std::mt19937_64 rng(5);
    HashGrid<double> g(small_config(), rng, 1.0);
    GridCache<double> cache;
    std::vector<double> out(g.output_dim()), grad(g.output_dim(), 0.0);
    g.encode(Vec3d{0.3, 0.6, 0.9}, out, cache);
    CHECK(g.backward(cache, grad).indices.empty());
  }

  TEST_CASE("backward: a vertex at every level touches one entry per level with weight 1") {
    std::mt19937_64 rng(6);
    HashGrid<double> g(small_config(), rng, 1.0);
    GridCache<double> cache;
    std::vector<double> out(g.output_dim()), grad(g.output_dim());
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = 0.5 + static_cast<double>(i);
    g.encode(Vec3d{0, 0, 0}, out, cache);
    const auto sg = g.backward(cache, grad);
    REQUIRE(sg.indices.size() == grad.size());
    for (std::size_t i = 0; i < sg.indices.size(); ++i) {
      const std::size_t level = sg.indices[i] / (g.config().table_size() * 2);
      const std::size_t feature = sg.indices[i] % 2;
      CHECK(sg.values[i] == grad[level * 2 + feature]);
    }
  }

  TEST_CASE("sparsity: each encode touches exactly 8 corners per level") {
    std::mt19937_64 rng(7);
    HashGrid<double> g(small_config(), rng, 1.0);
    GridCache<double> cache;
    std::vector<double> out(g.output_dim());
    g.encode(Vec3d{0.2, 0.5, 0.8}, out, cache);
    CHECK(cache.entries.size() == 8u * g.config().levels);
    for (int l = 0; l < g.config().levels; ++l) {
      double wsum = 0;
      for (int c = 0; c < 8; ++c) wsum += cache.weights[l * 8 + c];
      CHECK(wsum == doctest::Approx(1.0));
    }
  }

  TEST_CASE("property: grid gradient agrees with finite differences over 100 seeds") {
    double worst = 0;
    std::size_t kinks = 0, checked = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      std::mt19937_64 rng(seed);
      HashGrid<double> g(small_config(), rng, 0.5);
      std::uniform_real_distribution<double> u(0, 1), w(-1, 1);
      const Vec3d p{u(rng), u(rng), u(rng)};
      std::vector<double> wt(g.output_dim());
      for (auto& v : wt) v = w(rng);
      GridCache<double> cache;
      std::vector<double> out(g.output_dim()), dense(g.params().size(), 0.0);
      g.encode(p, out, cache);
      g.accumulate_backward(cache, wt, dense);
      auto f = [&](std::span<const double>) {
        const auto o = g.encode(p);
        double s = 0;
        for (std::size_t i = 0; i < o.size(); ++i) s += wt[i] * o[i];
        return s;
      };
      FdOptions opt;
      opt.select = [&](std::size_t, std::size_t i) { return dense[i] != 0.0 || i % 97 == 0; };
      const FdReport r = finite_diff_check(f, g.params(), dense, opt);
      worst = std::max(worst, r.max_rel_error);
      kinks += r.kinks_skipped;
      checked += r.checked;
    }
    CHECK(worst < 1e-5);
    CHECK(kinks == 0);
    CHECK(checked > 1000);
  }

  TEST_CASE("encode is Lipschitz per level") {
    std::mt19937_64 rng(8);
    HashGrid<double> g(small_config(), rng, 1.0);
    double spread = 0;
    for (double v : g.params()) spread = std::max(spread, std::abs(v));
    spread *= 2;
    std::uniform_real_distribution<double> u(0.05, 0.95);
    const double eps = 1e-6;
    for (int i = 0; i < 200; ++i) {
      const Vec3d p{u(rng), u(rng), u(rng)};
      const auto a = g.encode(p);
      const auto b = g.encode(p + Vec3d{eps, 0, 0});
      for (int l = 0; l < g.config().levels; ++l)
        for (int f = 0; f < 2; ++f)
          CHECK(std::abs(a[l * 2 + f] - b[l * 2 + f]) <= g.config().resolution(l) * spread * eps * (1 + 1e-6));
    }
  }

  TEST_CASE("SH constant and pole values") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 10; ++i) {
      const auto y = sh_basis(test::random_unit(rng), 3);
      CHECK(y.size() == 16);
      CHECK(y[0] == doctest::Approx(0.28209479).epsilon(1e-8));
    }
    const auto pole = sh_basis(Vec3d{0, 0, 1}, 3);
    CHECK(pole[1] == doctest::Approx(0.0));
    CHECK(pole[2] == doctest::Approx(0.48860251).epsilon(1e-8));
    CHECK(pole[3] == doctest::Approx(0.0));
    CHECK(pole[6] == doctest::Approx(std::sqrt(5.0 / (4 * std::numbers::pi))));  // Y_2^0 at the pole
  }

  TEST_CASE("SH closed forms agree with an independent evaluation") {
    // Y_1^{-1} = c1 y, Y_1^1 = c1 x, Y_2^{-2} = c2 xy, Y_3^{-3} = c3 y (3x^2 - y^2)
    const double c1 = std::sqrt(3 / (4 * std::numbers::pi));
    const double c2 = 0.5 * std::sqrt(15 / std::numbers::pi);
    const double c3 = 0.25 * std::sqrt(35 / (2 * std::numbers::pi));
    std::mt19937_64 rng(10);
    for (int i = 0; i < 50; ++i) {
      const Vec3d d = test::random_unit(rng);
      const auto y = sh_basis(d, 3);
      CHECK(y[1] == doctest::Approx(c1 * d.y).epsilon(1e-12));
      CHECK(y[3] == doctest::Approx(c1 * d.x).epsilon(1e-12));
      CHECK(y[4] == doctest::Approx(c2 * d.x * d.y).epsilon(1e-12));
      CHECK(y[9] == doctest::Approx(c3 * d.y * (3 * d.x * d.x - d.y * d.y)).epsilon(1e-12));
    }
  }

  TEST_CASE("SH addition theorem holds pointwise") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
      const auto y = sh_basis(test::random_unit(rng), 3);
      for (int l = 0; l <= 3; ++l) {
        double s = 0;
        for (int m = -l; m <= l; ++m) s += y[l * l + l + m] * y[l * l + l + m];
        CHECK(std::abs(s - (2 * l + 1) / (4 * std::numbers::pi)) < 1e-6);
      }
    }
  }

  TEST_CASE("SH Monte-Carlo Gram matrix is close to identity") {
    std::mt19937_64 rng(12);
    const std::size_t n = 200000;
    std::vector<double> gram(256, 0.0), y(16);
    for (std::size_t s = 0; s < n; ++s) {
      sh_eval(test::random_unit(rng), 3, std::span<double>(y));
      for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) gram[i * 16 + j] += y[i] * y[j];
    }
    double worst = 0;
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j)
        worst = std::max(worst, std::abs(gram[i * 16 + j] * 4 * std::numbers::pi / n - (i == j ? 1.0 : 0.0)));
    CHECK(worst < 0.02);
  }

  TEST_CASE("SH input normalization policy") {
    const auto exact = sh_basis(Vec3d{0, 0, 1}, 3);
    const auto near = sh_basis(Vec3d{0, 0, 1.0005}, 3);  // within 1e-3: normalized
    for (int i = 0; i < 16; ++i) CHECK(near[i] == doctest::Approx(exact[i]).epsilon(1e-12));
    CHECK_THROWS_AS(sh_basis(Vec3d{0, 0, 1.01}, 3), DomainError);
    CHECK_THROWS_AS(sh_basis(Vec3d{0, 0, 0}, 3), DomainError);
    CHECK(sh_basis(Vec3d{1, 0, 0}, 1).size() == 4);
  }
}
