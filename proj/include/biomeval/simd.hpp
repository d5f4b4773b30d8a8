#pragma once

// Data-parallel inner loops used by scoring, enrollment, metrics and warping.
//
// Every kernel has a scalar reference implementation. Vector variants (AVX2 on
// x86-64, NEON on AArch64) are compiled into separate translation units and
// picked at runtime from CPU feature detection. Setting BIOMEVAL_SIMD=scalar in
// the environment forces the reference path.
//
// Equivalence contract with the scalar reference:
//   - count_at_least, count_below, running_mean_update, bilinear_row:
//     bit-identical results.
//   - dot_norms, squared_distance: lane-split accumulation, so results agree
//     with the reference to within a few ulp of the accumulated magnitude.

#include <cstddef>
#include <span>
#include <string_view>

namespace biomeval::simd {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);

struct DotNorms {
  double dot = 0.0;
  double norm_a_sq = 0.0;
  double norm_b_sq = 0.0;
};

// One output row of an inverse-mapped bilinear warp over a single plane.
// Output column j samples the source at
//   y = row_y + step_y * j,  x = row_x + step_x * j
// Points outside [0, height-1] x [0, width-1] produce 0.
struct WarpRow {
  const double* source = nullptr;
  std::size_t source_height = 0;
  std::size_t source_width = 0;
  double row_y = 0.0;
  double row_x = 0.0;
  double step_y = 0.0;
  double step_x = 0.0;
  double* out = nullptr;
  std::size_t out_width = 0;
};

struct KernelTable {
  Isa isa;
  DotNorms (*dot_norms)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // mean[k] += (x[k] - mean[k]) / count
  void (*running_mean_update)(double* mean, const double* x, std::size_t n,
                              double count);
  std::size_t (*count_at_least)(const double* v, std::size_t n, double threshold);
  std::size_t (*count_below)(const double* v, std::size_t n, double threshold);
  void (*bilinear_row)(const WarpRow& row);
};

/// Kernels for the best ISA available on this CPU (or the scalar table when
/// BIOMEVAL_SIMD=scalar). Resolved once, on first use.
const KernelTable& active();

/// Table for a specific ISA, or nullptr when it is not compiled in or not
/// supported by the running CPU.
const KernelTable* table_for(Isa isa);

const KernelTable& scalar_table();

// Convenience wrappers over the active table.
DotNorms dot_norms(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
void running_mean_update(std::span<double> mean, std::span<const double> x,
                         double count);
std::size_t count_at_least(std::span<const double> v, double threshold);
std::size_t count_below(std::span<const double> v, double threshold);

namespace detail {
const KernelTable* avx2_table();
const KernelTable* neon_table();
}  // namespace detail

}  // namespace biomeval::simd
