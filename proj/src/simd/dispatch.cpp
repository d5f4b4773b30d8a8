#include <cstdlib>
#include <string_view>

#include "biomeval/simd.hpp"

namespace biomeval::simd {

#if !defined(BIOMEVAL_HAVE_AVX2)
namespace detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace detail
#endif

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return &scalar_table();
    case Isa::avx2:
#if defined(BIOMEVAL_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
      if (__builtin_cpu_supports("avx2")) return detail::avx2_table();
#endif
      return nullptr;
    case Isa::neon:
      return detail::neon_table();
  }
  return nullptr;
}

namespace {

const KernelTable& resolve() {
  if (const char* env = std::getenv("BIOMEVAL_SIMD"); env != nullptr) {
    if (std::string_view(env) == "scalar") return scalar_table();
  }
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (const KernelTable* t = table_for(isa)) return *t;
  }
  return scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = resolve();
  return table;
}

DotNorms dot_norms(std::span<const double> a, std::span<const double> b) {
  return active().dot_norms(a.data(), b.data(), a.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

void running_mean_update(std::span<double> mean, std::span<const double> x,
                         double count) {
  active().running_mean_update(mean.data(), x.data(), mean.size(), count);
}

std::size_t count_at_least(std::span<const double> v, double threshold) {
  return active().count_at_least(v.data(), v.size(), threshold);
}

std::size_t count_below(std::span<const double> v, double threshold) {
  return active().count_below(v.data(), v.size(), threshold);
}

}  // namespace biomeval::simd
