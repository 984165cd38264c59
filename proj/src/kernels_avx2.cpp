// Built with -mavx2 and without -mfma: a fused multiply-add would round
// differently from the scalar reference.
#include "icbo/kernels.hpp"

#include <algorithm>

#if defined(__AVX2__)
#include <immintrin.h>
#endif

namespace icbo::kernels::avx2 {

#if defined(__AVX2__)

bool compiled() { return true; }

void scaled_sq_distances(const PointsSoA &points, std::span<const double> query,
                         std::span<const double> inv_scale, std::span<double> out) {
  const std::size_t n = points.n;
  const std::size_t n4 = n & ~std::size_t{3};
  double *dst = out.data();
  std::fill(out.begin(), out.end(), 0.0);

  for (std::size_t j = 0; j < points.d; ++j) {
    const double *col = points.data.data() + j * n;
    const __m256d q = _mm256_set1_pd(query[j]);
    const __m256d s = _mm256_set1_pd(inv_scale[j]);
    std::size_t i = 0;
    for (; i < n4; i += 4) {
      const __m256d x = _mm256_loadu_pd(col + i);
      const __m256d z = _mm256_mul_pd(_mm256_sub_pd(x, q), s);
      const __m256d acc = _mm256_loadu_pd(dst + i);
      _mm256_storeu_pd(dst + i, _mm256_add_pd(acc, _mm256_mul_pd(z, z)));
    }
    for (; i < n; ++i) {
      const double z = (col[i] - query[j]) * inv_scale[j];
      dst[i] = dst[i] + z * z;
    }
  }
}

#else

bool compiled() { return false; }

void scaled_sq_distances(const PointsSoA &, std::span<const double>, std::span<const double>,
                         std::span<double>) {}

#endif

} // namespace icbo::kernels::avx2
