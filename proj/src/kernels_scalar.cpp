#include "msm/kernels.hpp"

namespace msm::kernels::scalar {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void gemv(std::span<const double> x, std::size_t n, std::span<const double> beta, std::span<double> out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
  for (std::size_t k = 0; k < beta.size(); ++k) {
    axpy(beta[k], x.subspan(k * n, n), out.first(n));
  }
}

void xt_w(std::span<const double> x, std::size_t n, std::span<const double> w, std::span<double> out) {
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = dot(x.subspan(k * n, n), w.first(n));
}

void xt_diag_x(std::span<const double> x, std::size_t n, std::span<const double> w, std::span<double> out) {
  const std::size_t p = n ? x.size() / n : 0;
  for (std::size_t a = 0; a < p; ++a) {
    const double* xa = x.data() + a * n;
    for (std::size_t b = 0; b <= a; ++b) {
      const double* xb = x.data() + b * n;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += w[i] * xa[i] * xb[i];
      out[a * p + b] = s;
      out[b * p + a] = s;
    }
  }
}

}  // namespace msm::kernels::scalar
