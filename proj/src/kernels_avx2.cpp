#include "msm/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#define MSM_X86 1
#include <immintrin.h>
#else
#define MSM_X86 0
#endif

namespace msm::kernels::avx2 {

#if MSM_X86

#define MSM_AVX2 __attribute__((target("avx2,fma")))

namespace {

MSM_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

MSM_AVX2 double dot_impl(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

MSM_AVX2 void axpy_impl(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

MSM_AVX2 double wdot_impl(const double* w, const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d wa = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    acc = _mm256_fmadd_pd(wa, _mm256_loadu_pd(b + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

}  // namespace

bool available() {
  static const bool ok = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return ok;
}

double dot(std::span<const double> a, std::span<const double> b) { return dot_impl(a.data(), b.data(), a.size()); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) { axpy_impl(alpha, x.data(), y.data(), x.size()); }

void gemv(std::span<const double> x, std::size_t n, std::span<const double> beta, std::span<double> out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
  for (std::size_t k = 0; k < beta.size(); ++k) axpy_impl(beta[k], x.data() + k * n, out.data(), n);
}

void xt_w(std::span<const double> x, std::size_t n, std::span<const double> w, std::span<double> out) {
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = dot_impl(x.data() + k * n, w.data(), n);
}

void xt_diag_x(std::span<const double> x, std::size_t n, std::span<const double> w, std::span<double> out) {
  const std::size_t p = n ? x.size() / n : 0;
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      const double s = wdot_impl(w.data(), x.data() + a * n, x.data() + b * n, n);
      out[a * p + b] = s;
      out[b * p + a] = s;
    }
  }
}

#else

bool available() { return false; }
double dot(std::span<const double> a, std::span<const double> b) { return scalar::dot(a, b); }
void axpy(double alpha, std::span<const double> x, std::span<double> y) { scalar::axpy(alpha, x, y); }
void gemv(std::span<const double> x, std::size_t n, std::span<const double> beta, std::span<double> out) {
  scalar::gemv(x, n, beta, out);
}
void xt_w(std::span<const double> x, std::size_t n, std::span<const double> w, std::span<double> out) {
  scalar::xt_w(x, n, w, out);
}
void xt_diag_x(std::span<const double> x, std::size_t n, std::span<const double> w, std::span<double> out) {
  scalar::xt_diag_x(x, n, w, out);
}

#endif

}  // namespace msm::kernels::avx2
