// Compiled with -mavx2 (and deliberately without -mfma: every kernel issues the
// same multiply/add sequence as the scalar reference so the bit-exact ones stay
// bit-exact). Only entered after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <bit>
#include <cmath>

#include "biomeval/simd.hpp"

namespace biomeval::simd {
namespace {

double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

DotNorms dot_norms_avx2(const double* a, const double* b, std::size_t n) {
  __m256d dot = _mm256_setzero_pd();
  __m256d na = _mm256_setzero_pd();
  __m256d nb = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    dot = _mm256_add_pd(dot, _mm256_mul_pd(va, vb));
    na = _mm256_add_pd(na, _mm256_mul_pd(va, va));
    nb = _mm256_add_pd(nb, _mm256_mul_pd(vb, vb));
  }
  DotNorms r{hsum(dot), hsum(na), hsum(nb)};
  for (; i < n; ++i) {
    r.dot += a[i] * b[i];
    r.norm_a_sq += a[i] * a[i];
    r.norm_b_sq += b[i] * b[i];
  }
  return r;
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double r = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    r += d * d;
  }
  return r;
}

void running_mean_update_avx2(double* mean, const double* x, std::size_t n,
                              double count) {
  const __m256d c = _mm256_set1_pd(count);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d m = _mm256_loadu_pd(mean + i);
    const __m256d delta = _mm256_div_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), m), c);
    _mm256_storeu_pd(mean + i, _mm256_add_pd(m, delta));
  }
  for (; i < n; ++i) mean[i] += (x[i] - mean[i]) / count;
}

template <int Predicate>
std::size_t count_cmp_avx2(const double* v, std::size_t n, double threshold) {
  const __m256d t = _mm256_set1_pd(threshold);
  std::size_t c = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(v + i), t, Predicate));
    c += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(mask)));
  }
  for (; i < n; ++i) {
    if constexpr (Predicate == _CMP_GE_OQ) {
      c += v[i] >= threshold ? 1 : 0;
    } else {
      c += v[i] < threshold ? 1 : 0;
    }
  }
  return c;
}

std::size_t count_at_least_avx2(const double* v, std::size_t n, double threshold) {
  return count_cmp_avx2<_CMP_GE_OQ>(v, n, threshold);
}

std::size_t count_below_avx2(const double* v, std::size_t n, double threshold) {
  return count_cmp_avx2<_CMP_LT_OQ>(v, n, threshold);
}

double bilinear_pixel(const WarpRow& row, double y, double x, double max_y, double max_x) {
  if (!(y >= 0.0 && y <= max_y && x >= 0.0 && x <= max_x)) return 0.0;
  const double yf = std::floor(y);
  const double xf = std::floor(x);
  const double fy = y - yf;
  const double fx = x - xf;
  const auto y0 = static_cast<std::size_t>(yf);
  const auto x0 = static_cast<std::size_t>(xf);
  const std::size_t y1 = std::min(y0 + 1, row.source_height - 1);
  const std::size_t x1 = std::min(x0 + 1, row.source_width - 1);
  const std::size_t w = row.source_width;
  const double a = row.source[y0 * w + x0];
  const double b = row.source[y0 * w + x1];
  const double c = row.source[y1 * w + x0];
  const double d = row.source[y1 * w + x1];
  const double top = a + fx * (b - a);
  const double bottom = c + fx * (d - c);
  return top + fy * (bottom - top);
}

void bilinear_row_avx2(const WarpRow& row) {
  const double max_y = static_cast<double>(row.source_height) - 1.0;
  const double max_x = static_cast<double>(row.source_width) - 1.0;
  const __m256d vmax_y = _mm256_set1_pd(max_y);
  const __m256d vmax_x = _mm256_set1_pd(max_x);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d row_y = _mm256_set1_pd(row.row_y);
  const __m256d row_x = _mm256_set1_pd(row.row_x);
  const __m256d step_y = _mm256_set1_pd(row.step_y);
  const __m256d step_x = _mm256_set1_pd(row.step_x);
  const __m256i width = _mm256_set1_epi64x(static_cast<long long>(row.source_width));

  std::size_t j = 0;
  for (; j + 4 <= row.out_width; j += 4) {
    const double jd = static_cast<double>(j);
    const __m256d cols = _mm256_set_pd(jd + 3.0, jd + 2.0, jd + 1.0, jd);
    const __m256d y = _mm256_add_pd(row_y, _mm256_mul_pd(step_y, cols));
    const __m256d x = _mm256_add_pd(row_x, _mm256_mul_pd(step_x, cols));
    const __m256d inside = _mm256_and_pd(
        _mm256_and_pd(_mm256_cmp_pd(y, zero, _CMP_GE_OQ), _mm256_cmp_pd(y, vmax_y, _CMP_LE_OQ)),
        _mm256_and_pd(_mm256_cmp_pd(x, zero, _CMP_GE_OQ), _mm256_cmp_pd(x, vmax_x, _CMP_LE_OQ)));
    if (_mm256_movemask_pd(inside) == 0) {
      _mm256_storeu_pd(row.out + j, zero);
      continue;
    }
    // Outside lanes are parked at (0,0) so the gathers stay in bounds.
    const __m256d ys = _mm256_blendv_pd(zero, y, inside);
    const __m256d xs = _mm256_blendv_pd(zero, x, inside);
    const __m256d yf = _mm256_floor_pd(ys);
    const __m256d xf = _mm256_floor_pd(xs);
    const __m256d fy = _mm256_sub_pd(ys, yf);
    const __m256d fx = _mm256_sub_pd(xs, xf);
    const __m256d y1f = _mm256_min_pd(_mm256_add_pd(yf, one), vmax_y);
    const __m256d x1f = _mm256_min_pd(_mm256_add_pd(xf, one), vmax_x);

    const __m256i y0 = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(yf));
    const __m256i x0 = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(xf));
    const __m256i y1 = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(y1f));
    const __m256i x1 = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(x1f));
    const __m256i r0 = _mm256_mul_epu32(y0, width);
    const __m256i r1 = _mm256_mul_epu32(y1, width);

    const __m256d a = _mm256_i64gather_pd(row.source, _mm256_add_epi64(r0, x0), 8);
    const __m256d b = _mm256_i64gather_pd(row.source, _mm256_add_epi64(r0, x1), 8);
    const __m256d c = _mm256_i64gather_pd(row.source, _mm256_add_epi64(r1, x0), 8);
    const __m256d d = _mm256_i64gather_pd(row.source, _mm256_add_epi64(r1, x1), 8);
    const __m256d top = _mm256_add_pd(a, _mm256_mul_pd(fx, _mm256_sub_pd(b, a)));
    const __m256d bottom = _mm256_add_pd(c, _mm256_mul_pd(fx, _mm256_sub_pd(d, c)));
    const __m256d value = _mm256_add_pd(top, _mm256_mul_pd(fy, _mm256_sub_pd(bottom, top)));
    _mm256_storeu_pd(row.out + j, _mm256_blendv_pd(zero, value, inside));
  }
  for (; j < row.out_width; ++j) {
    const double jd = static_cast<double>(j);
    row.out[j] = bilinear_pixel(row, row.row_y + row.step_y * jd,
                                row.row_x + row.step_x * jd, max_y, max_x);
  }
}

constexpr KernelTable kAvx2{
    Isa::avx2,          dot_norms_avx2,      squared_distance_avx2,
    running_mean_update_avx2, count_at_least_avx2, count_below_avx2,
    bilinear_row_avx2,
};

}  // namespace

namespace detail {
const KernelTable* avx2_table() { return &kAvx2; }
}  // namespace detail

}  // namespace biomeval::simd
