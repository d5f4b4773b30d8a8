#include <algorithm>
#include <cmath>

#include "biomeval/simd.hpp"

namespace biomeval::simd {
namespace {

DotNorms dot_norms_scalar(const double* a, const double* b, std::size_t n) {
  DotNorms r;
  for (std::size_t i = 0; i < n; ++i) {
    r.dot += a[i] * b[i];
    r.norm_a_sq += a[i] * a[i];
    r.norm_b_sq += b[i] * b[i];
  }
  return r;
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void running_mean_update_scalar(double* mean, const double* x, std::size_t n,
                                double count) {
  for (std::size_t i = 0; i < n; ++i) mean[i] += (x[i] - mean[i]) / count;
}

std::size_t count_at_least_scalar(const double* v, std::size_t n, double threshold) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += v[i] >= threshold ? 1 : 0;
  return c;
}

std::size_t count_below_scalar(const double* v, std::size_t n, double threshold) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += v[i] < threshold ? 1 : 0;
  return c;
}

void bilinear_row_scalar(const WarpRow& row) {
  const double max_y = static_cast<double>(row.source_height) - 1.0;
  const double max_x = static_cast<double>(row.source_width) - 1.0;
  const std::size_t w = row.source_width;
  for (std::size_t j = 0; j < row.out_width; ++j) {
    const double jd = static_cast<double>(j);
    const double y = row.row_y + row.step_y * jd;
    const double x = row.row_x + row.step_x * jd;
    if (!(y >= 0.0 && y <= max_y && x >= 0.0 && x <= max_x)) {
      row.out[j] = 0.0;
      continue;
    }
    const double yf = std::floor(y);
    const double xf = std::floor(x);
    const double fy = y - yf;
    const double fx = x - xf;
    const auto y0 = static_cast<std::size_t>(yf);
    const auto x0 = static_cast<std::size_t>(xf);
    const std::size_t y1 = std::min(y0 + 1, row.source_height - 1);
    const std::size_t x1 = std::min(x0 + 1, row.source_width - 1);
    const double a = row.source[y0 * w + x0];
    const double b = row.source[y0 * w + x1];
    const double c = row.source[y1 * w + x0];
    const double d = row.source[y1 * w + x1];
    const double top = a + fx * (b - a);
    const double bottom = c + fx * (d - c);
    row.out[j] = top + fy * (bottom - top);
  }
}

constexpr KernelTable kScalar{
    Isa::scalar,          dot_norms_scalar,      squared_distance_scalar,
    running_mean_update_scalar, count_at_least_scalar, count_below_scalar,
    bilinear_row_scalar,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace biomeval::simd
