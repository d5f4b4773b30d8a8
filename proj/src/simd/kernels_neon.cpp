// AArch64 variants. NEON is architecturally mandatory on AArch64, so no
// runtime probe is needed beyond the compile-time target check.

#include "biomeval/simd.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace biomeval::simd {
namespace {

DotNorms dot_norms_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t dot = vdupq_n_f64(0.0);
  float64x2_t na = vdupq_n_f64(0.0);
  float64x2_t nb = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t va = vld1q_f64(a + i);
    const float64x2_t vb = vld1q_f64(b + i);
    dot = vaddq_f64(dot, vmulq_f64(va, vb));
    na = vaddq_f64(na, vmulq_f64(va, va));
    nb = vaddq_f64(nb, vmulq_f64(vb, vb));
  }
  DotNorms r{vgetq_lane_f64(dot, 0) + vgetq_lane_f64(dot, 1),
             vgetq_lane_f64(na, 0) + vgetq_lane_f64(na, 1),
             vgetq_lane_f64(nb, 0) + vgetq_lane_f64(nb, 1)};
  for (; i < n; ++i) {
    r.dot += a[i] * b[i];
    r.norm_a_sq += a[i] * a[i];
    r.norm_b_sq += b[i] * b[i];
  }
  return r;
}

double squared_distance_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vaddq_f64(acc, vmulq_f64(d, d));
  }
  double r = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    r += d * d;
  }
  return r;
}

void running_mean_update_neon(double* mean, const double* x, std::size_t n,
                              double count) {
  const float64x2_t c = vdupq_n_f64(count);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t m = vld1q_f64(mean + i);
    vst1q_f64(mean + i, vaddq_f64(m, vdivq_f64(vsubq_f64(vld1q_f64(x + i), m), c)));
  }
  for (; i < n; ++i) mean[i] += (x[i] - mean[i]) / count;
}

std::size_t count_at_least_neon(const double* v, std::size_t n, double threshold) {
  const float64x2_t t = vdupq_n_f64(threshold);
  uint64x2_t acc = vdupq_n_u64(0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    // all-ones lanes are -1 as signed; subtracting accumulates +1
    acc = vsubq_u64(acc, vcgeq_f64(vld1q_f64(v + i), t));
  }
  std::size_t c = vgetq_lane_u64(acc, 0) + vgetq_lane_u64(acc, 1);
  for (; i < n; ++i) c += v[i] >= threshold ? 1 : 0;
  return c;
}

std::size_t count_below_neon(const double* v, std::size_t n, double threshold) {
  const float64x2_t t = vdupq_n_f64(threshold);
  uint64x2_t acc = vdupq_n_u64(0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    acc = vsubq_u64(acc, vcltq_f64(vld1q_f64(v + i), t));
  }
  std::size_t c = vgetq_lane_u64(acc, 0) + vgetq_lane_u64(acc, 1);
  for (; i < n; ++i) c += v[i] < threshold ? 1 : 0;
  return c;
}

void bilinear_row_neon(const WarpRow& row) { scalar_table().bilinear_row(row); }

const KernelTable kNeon{
    Isa::neon,          dot_norms_neon,      squared_distance_neon,
    running_mean_update_neon, count_at_least_neon, count_below_neon,
    bilinear_row_neon,
};

}  // namespace

namespace detail {
const KernelTable* neon_table() { return &kNeon; }
}  // namespace detail

}  // namespace biomeval::simd

#else

namespace biomeval::simd::detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace biomeval::simd::detail

#endif
