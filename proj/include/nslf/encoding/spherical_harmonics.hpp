#pragma once

#include <span>
#include <vector>

#include "nslf/core/vec.hpp"

namespace nslf {

/// Highest supported degree; closed forms are hard-coded up to l = 3.
inline constexpr int kMaxShDegree = 3;

constexpr int sh_coefficient_count(int l_max) { return (l_max + 1) * (l_max + 1); }

/// Real spherical harmonics (no Condon-Shortley phase) at a unit direction, ordered
/// (0,0), (1,-1), (1,0), (1,1), (2,-2), ... Writes sh_coefficient_count(l_max) values.
/// The direction is assumed normalized; see sh_basis for the checked entry point.
template <typename T>
void sh_eval(const Vec3<T>& d, int l_max, std::span<T> out);

/// Checked evaluation: |d| within 1e-6 of one is used as is, within 1e-3 it is normalized with a
/// warning, anything else is a DomainError.
template <typename T>
std::vector<T> sh_basis(const Vec3<T>& d, int l_max);

extern template void sh_eval(const Vec3<float>&, int, std::span<float>);
extern template void sh_eval(const Vec3<double>&, int, std::span<double>);
extern template std::vector<float> sh_basis(const Vec3<float>&, int);
extern template std::vector<double> sh_basis(const Vec3<double>&, int);

}  // namespace nslf
