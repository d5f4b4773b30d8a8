#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "biomeval/simd.hpp"

using namespace biomeval;
namespace simd = biomeval::simd;

namespace {

std::vector<const simd::KernelTable*> vector_tables() {
  std::vector<const simd::KernelTable*> out;
  for (auto isa : {simd::Isa::avx2, simd::Isa::neon}) {
    if (const auto* t = simd::table_for(isa)) out.push_back(t);
  }
  return out;
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST(Simd, ScalarTableIsAlwaysAvailable) {
  EXPECT_EQ(simd::scalar_table().isa, simd::Isa::scalar);
  EXPECT_EQ(simd::table_for(simd::Isa::scalar), &simd::scalar_table());
  const auto& active = simd::active();
  EXPECT_NE(active.dot_norms, nullptr);
}

TEST(Simd, ScalarDotNormsSmallCase) {
  const double a[] = {1, 2, 3};
  const double b[] = {4, -5, 6};
  const auto r = simd::scalar_table().dot_norms(a, b, 3);
  EXPECT_EQ(r.dot, 12.0);
  EXPECT_EQ(r.norm_a_sq, 14.0);
  EXPECT_EQ(r.norm_b_sq, 77.0);
  EXPECT_EQ(simd::scalar_table().squared_distance(a, b, 3), 9.0 + 49.0 + 9.0);
}

TEST(Simd, DotProductsAgreeWithScalar) {
  std::mt19937_64 rng(11);
  for (const auto* t : vector_tables()) {
    for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 64, 127, 512, 1001}) {
      const auto a = random_vector(rng, n);
      const auto b = random_vector(rng, n);
      const auto ref = simd::scalar_table().dot_norms(a.data(), b.data(), n);
      const auto got = t->dot_norms(a.data(), b.data(), n);
      const double scale = std::max(1.0, ref.norm_a_sq + ref.norm_b_sq);
      EXPECT_NEAR(got.dot, ref.dot, 1e-12 * scale) << "n=" << n;
      EXPECT_NEAR(got.norm_a_sq, ref.norm_a_sq, 1e-12 * scale);
      EXPECT_NEAR(got.norm_b_sq, ref.norm_b_sq, 1e-12 * scale);
      EXPECT_NEAR(t->squared_distance(a.data(), b.data(), n),
                  simd::scalar_table().squared_distance(a.data(), b.data(), n), 1e-12 * 4 * scale);
    }
  }
}

TEST(Simd, IntegerValuedDotIsExact) {
  // Small integers sum exactly in any order.
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(-20, 20);
  for (const auto* t : vector_tables()) {
    std::vector<double> a(333), b(333);
    for (auto& x : a) x = d(rng);
    for (auto& x : b) x = d(rng);
    const auto ref = simd::scalar_table().dot_norms(a.data(), b.data(), a.size());
    const auto got = t->dot_norms(a.data(), b.data(), a.size());
    EXPECT_EQ(got.dot, ref.dot);
    EXPECT_EQ(got.norm_a_sq, ref.norm_a_sq);
    EXPECT_EQ(got.norm_b_sq, ref.norm_b_sq);
  }
}

TEST(Simd, RunningMeanIsBitIdentical) {
  std::mt19937_64 rng(5);
  for (const auto* t : vector_tables()) {
    for (std::size_t n : {1, 3, 4, 9, 16, 33, 250}) {
      std::vector<double> m1(n, 0.0), m2(n, 0.0);
      for (int k = 1; k <= 7; ++k) {
        const auto x = random_vector(rng, n, -5, 5);
        simd::scalar_table().running_mean_update(m1.data(), x.data(), n, k);
        t->running_mean_update(m2.data(), x.data(), n, k);
      }
      EXPECT_EQ(m1, m2) << "n=" << n;
    }
  }
}

TEST(Simd, CountsAreExact) {
  std::mt19937_64 rng(9);
  for (const auto* t : vector_tables()) {
    for (std::size_t n : {0, 1, 3, 4, 5, 8, 13, 100, 1027}) {
      auto v = random_vector(rng, n);
      if (n > 4) v[2] = v[3] = 0.25;
      for (double th : {-2.0, -0.5, 0.0, 0.25, 0.7, 2.0}) {
        EXPECT_EQ(t->count_at_least(v.data(), n, th),
                  simd::scalar_table().count_at_least(v.data(), n, th));
        EXPECT_EQ(t->count_below(v.data(), n, th), simd::scalar_table().count_below(v.data(), n, th));
      }
    }
  }
}

TEST(Simd, ScalarCountsUseMatchConvention) {
  const double v[] = {0.1, 0.2, 0.2, 0.3};
  EXPECT_EQ(simd::scalar_table().count_at_least(v, 4, 0.2), 3u);
  EXPECT_EQ(simd::scalar_table().count_below(v, 4, 0.2), 1u);
  EXPECT_EQ(simd::count_at_least(v, 0.2), 3u);
  EXPECT_EQ(simd::count_below(v, 0.2), 1u);
}

TEST(Simd, BilinearRowIsBitIdentical) {
  std::mt19937_64 rng(21);
  const std::size_t h = 37, w = 29;
  const auto src = random_vector(rng, h * w, 0, 255);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  for (const auto* t : vector_tables()) {
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t out_w = 1 + static_cast<std::size_t>(trial % 41);
      simd::WarpRow row{src.data(), h, w, u(rng) * h, u(rng) * w, u(rng) - 0.5, u(rng), nullptr, out_w};
      std::vector<double> ref(out_w, -1), got(out_w, -2);
      row.out = ref.data();
      simd::scalar_table().bilinear_row(row);
      row.out = got.data();
      t->bilinear_row(row);
      ASSERT_EQ(ref, got) << "trial " << trial;
    }
  }
}

TEST(Simd, BilinearRowEdgesAndOutside) {
  const std::vector<double> src = {1, 2, 3, 4};  // 2x2
  std::vector<double> out(4);
  // Samples along y = 1 (last row) at x = -0.5, 0, 1, 1.5.
  simd::WarpRow row{src.data(), 2, 2, 1.0, -0.5, 0.0, 0.5, out.data(), 4};
  simd::scalar_table().bilinear_row(row);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[1], 3.0);
  EXPECT_EQ(out[2], 3.5);
  EXPECT_EQ(out[3], 4.0);
}
