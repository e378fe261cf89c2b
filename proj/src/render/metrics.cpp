#include "nslf/render/metrics.hpp"

#include <cmath>

#include "nslf/core/errors.hpp"

namespace nslf {

namespace {

void check_same_size(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) throw ShapeError("metric: image dimensions differ");
  if (a.rgb.size() != a.pixel_count() * 3 || b.rgb.size() != b.pixel_count() * 3)
    throw ShapeError("metric: malformed image buffer");
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(size);
  const int r = size / 2;
  double sum = 0;
  for (int i = 0; i < size; ++i) {
    k[i] = std::exp(-0.5 * (i - r) * (i - r) / (sigma * sigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

struct SsimPlanes {
  int out_w = 0, out_h = 0;
  // horizontally filtered x, y, x^2, y^2, xy (height rows x out_w columns)
  std::vector<double> hx, hy, hxx, hyy, hxy;
};

SsimPlanes prepare(const Image& a, const Image& b, const SsimOptions& o) {
  check_same_size(a, b);
  if (o.window < 1 || o.window % 2 == 0) throw DomainError("ssim: window must be odd and positive");
  if (a.width < o.window || a.height < o.window) throw ShapeError("ssim: image smaller than the window");
  SsimPlanes p;
  p.out_w = a.width - o.window + 1;
  p.out_h = a.height - o.window + 1;
  const std::size_t n = static_cast<std::size_t>(a.height) * p.out_w;
  p.hx.resize(n);
  p.hy.resize(n);
  p.hxx.resize(n);
  p.hyy.resize(n);
  p.hxy.resize(n);
  return p;
}

void filter_row(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& k, int width,
                int row, SsimPlanes& p) {
  const int w = static_cast<int>(k.size());
  for (int c = 0; c < p.out_w; ++c) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int j = 0; j < w; ++j) {
      const double xv = x[static_cast<std::size_t>(row) * width + c + j];
      const double yv = y[static_cast<std::size_t>(row) * width + c + j];
      sx += k[j] * xv;
      sy += k[j] * yv;
      sxx += k[j] * xv * xv;
      syy += k[j] * yv * yv;
      sxy += k[j] * xv * yv;
    }
    const std::size_t i = static_cast<std::size_t>(row) * p.out_w + c;
    p.hx[i] = sx;
    p.hy[i] = sy;
    p.hxx[i] = sxx;
    p.hyy[i] = syy;
    p.hxy[i] = sxy;
  }
}

// Sum of SSIM over the valid windows of one output row, plus the count.
void ssim_row(const SsimPlanes& p, const std::vector<double>& k, const Image& a, const Image& b, int row, double c1,
              double c2, double& sum, std::size_t& count) {
  const int w = static_cast<int>(k.size());
  const int r = w / 2;
  const bool masked = a.has_mask() || b.has_mask();
  sum = 0;
  count = 0;
  for (int c = 0; c < p.out_w; ++c) {
    if (masked) {
      const std::size_t center = a.index(c + r, row + r);
      if (!a.valid(center) || !b.valid(center)) continue;
    }
    double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
    for (int j = 0; j < w; ++j) {
      const std::size_t i = static_cast<std::size_t>(row + j) * p.out_w + c;
      mx += k[j] * p.hx[i];
      my += k[j] * p.hy[i];
      mxx += k[j] * p.hxx[i];
      myy += k[j] * p.hyy[i];
      mxy += k[j] * p.hxy[i];
    }
    const double vx = mxx - mx * mx;
    const double vy = myy - my * my;
    const double cov = mxy - mx * my;
    sum += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    ++count;
  }
}

double finish(const std::vector<double>& row_sums, const std::vector<std::size_t>& row_counts) {
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < row_sums.size(); ++i) {
    sum += row_sums[i];
    count += row_counts[i];
  }
  if (count == 0) throw DomainError("ssim: no window has a valid center pixel in both images");
  return sum / static_cast<double>(count);
}

}  // namespace

double mse(const Image& a, const Image& b) {
  check_same_size(a, b);
  double se = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    if (!a.valid(i) || !b.valid(i)) continue;
    for (int c = 0; c < 3; ++c) {
      const double d = static_cast<double>(a.rgb[3 * i + c]) - static_cast<double>(b.rgb[3 * i + c]);
      se += d * d;
    }
    n += 3;
  }
  if (n == 0) throw DomainError("metric: no pixel is valid in both images");
  return se / static_cast<double>(n);
}

double psnr_from_mse(double m) {
  if (m <= 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

double psnr(const Image& a, const Image& b) { return psnr_from_mse(mse(a, b)); }

std::vector<double> luma(const Image& img) {
  std::vector<double> y(img.pixel_count());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = 0.299 * img.rgb[3 * i] + 0.587 * img.rgb[3 * i + 1] + 0.114 * img.rgb[3 * i + 2];
  return y;
}

double ssim(const Image& a, const Image& b, const SsimOptions& o) {
  SsimPlanes p = prepare(a, b, o);
  const auto k = gaussian_kernel(o.window, o.sigma);
  const auto x = luma(a);
  const auto y = luma(b);
  const double c1 = (o.k1) * (o.k1), c2 = (o.k2) * (o.k2);
  std::vector<double> sums(p.out_h);
  std::vector<std::size_t> counts(p.out_h);
#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (int row = 0; row < a.height; ++row) filter_row(x, y, k, a.width, row, p);
#pragma omp for schedule(static)
    for (int row = 0; row < p.out_h; ++row) ssim_row(p, k, a, b, row, c1, c2, sums[row], counts[row]);
  }
  return finish(sums, counts);
}

double ssim_serial(const Image& a, const Image& b, const SsimOptions& o) {
  SsimPlanes p = prepare(a, b, o);
  const auto k = gaussian_kernel(o.window, o.sigma);
  const auto x = luma(a);
  const auto y = luma(b);
  const double c1 = (o.k1) * (o.k1), c2 = (o.k2) * (o.k2);
  std::vector<double> sums(p.out_h);
  std::vector<std::size_t> counts(p.out_h);
  for (int row = 0; row < a.height; ++row) filter_row(x, y, k, a.width, row, p);
  for (int row = 0; row < p.out_h; ++row) ssim_row(p, k, a, b, row, c1, c2, sums[row], counts[row]);
  return finish(sums, counts);
}

}  // namespace nslf
