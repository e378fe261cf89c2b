#include "nslf/encoding/spherical_harmonics.hpp"

#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "nslf/core/errors.hpp"

namespace nslf {

namespace {

// Normalization constants of the real basis.
constexpr double kC0 = 0.28209479177387814;    // 1/(2 sqrt(pi))
constexpr double kC1 = 0.48860251190291992;    // sqrt(3/(4 pi))
constexpr double kC2a = 1.0925484305920792;    // sqrt(15/(4 pi))
constexpr double kC2b = 0.31539156525252005;   // sqrt(5/(16 pi))
constexpr double kC2c = 0.54627421529603959;   // sqrt(15/(16 pi))
constexpr double kC3a = 0.59004358992664352;   // sqrt(35/(32 pi))
constexpr double kC3b = 2.8906114426405538;    // sqrt(105/(4 pi))
constexpr double kC3c = 0.45704579946446572;   // sqrt(21/(32 pi))
constexpr double kC3d = 0.37317633259011540;   // sqrt(7/(16 pi))
constexpr double kC3e = 1.4453057213202769;    // sqrt(105/(16 pi))

}  // namespace

template <typename T>
void sh_eval(const Vec3<T>& d, int l_max, std::span<T> out) {
  if (l_max < 0 || l_max > kMaxShDegree)
    throw DomainError("sh: degree " + std::to_string(l_max) + " not supported (0..3)");
  if (out.size() < static_cast<std::size_t>(sh_coefficient_count(l_max)))
    throw ShapeError("sh: output span too small");
  const T x = d.x, y = d.y, z = d.z;
  out[0] = T(kC0);
  if (l_max < 1) return;
  out[1] = T(kC1) * y;
  out[2] = T(kC1) * z;
  out[3] = T(kC1) * x;
  if (l_max < 2) return;
  const T xx = x * x, yy = y * y, zz = z * z;
  out[4] = T(kC2a) * x * y;
  out[5] = T(kC2a) * y * z;
  out[6] = T(kC2b) * (T(3) * zz - T(1));
  out[7] = T(kC2a) * x * z;
  out[8] = T(kC2c) * (xx - yy);
  if (l_max < 3) return;
  out[9] = T(kC3a) * y * (T(3) * xx - yy);
  out[10] = T(kC3b) * x * y * z;
  out[11] = T(kC3c) * y * (T(5) * zz - T(1));
  out[12] = T(kC3d) * z * (T(5) * zz - T(3));
  out[13] = T(kC3c) * x * (T(5) * zz - T(1));
  out[14] = T(kC3e) * z * (xx - yy);
  out[15] = T(kC3a) * x * (xx - T(3) * yy);
}

template <typename T>
std::vector<T> sh_basis(const Vec3<T>& d, int l_max) {
  const double n = std::sqrt(static_cast<double>(d.x) * d.x + static_cast<double>(d.y) * d.y +
                             static_cast<double>(d.z) * d.z);
  Vec3<T> u = d;
  const double dev = std::abs(n - 1.0);
  if (!(dev <= 1e-6)) {
    if (dev <= 1e-3) {
      spdlog::warn("sh_basis: direction norm {} off by {:.2e}, normalizing", n, dev);
      u = d / static_cast<T>(n);
    } else {
      throw DomainError("sh_basis: direction is not unit length (norm " + std::to_string(n) + ")");
    }
  }
  std::vector<T> out(sh_coefficient_count(l_max));
  sh_eval<T>(u, l_max, out);
  return out;
}

template void sh_eval(const Vec3<float>&, int, std::span<float>);
template void sh_eval(const Vec3<double>&, int, std::span<double>);
template std::vector<float> sh_basis(const Vec3<float>&, int);
template std::vector<double> sh_basis(const Vec3<double>&, int);

}  // namespace nslf
