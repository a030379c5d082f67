#pragma once

// Dense inner loops shared by the likelihood fitters. Each kernel has a
// scalar reference implementation and an AVX2/FMA variant; the dispatching
// entry points pick one at runtime from CPUID. Designs are column-major:
// column k of an n-row matrix X occupies X[k*n, (k+1)*n).

#include <cstddef>
#include <span>

namespace msm::kernels {

enum class Isa { scalar, avx2 };

const char* to_string(Isa isa);

// The variant used by the dispatching entry points.
Isa active_isa();
// Overrides CPU detection (tests and benchmarks). Requesting avx2 on a CPU
// without it falls back to scalar.
void force_isa(Isa isa);
void reset_isa();

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
// out = X * beta
void gemv(std::span<const double> x, std::size_t n, std::span<const double> beta, std::span<double> out);
// out[k] = sum_i w[i] * X[i, k]
void xt_w(std::span<const double> x, std::size_t n, std::span<const double> w, std::span<double> out);
// out = X' diag(w) X, p x p row-major
void xt_diag_x(std::span<const double> x, std::size_t n, std::span<const double> w, std::span<double> out);

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(std::span<const double> x, std::size_t n, std::span<const double> beta, std::span<double> out);
void xt_w(std::span<const double> x, std::size_t n, std::span<const double> w, std::span<double> out);
void xt_diag_x(std::span<const double> x, std::size_t n, std::span<const double> w, std::span<double> out);
}  // namespace scalar

namespace avx2 {
bool available();
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(std::span<const double> x, std::size_t n, std::span<const double> beta, std::span<double> out);
void xt_w(std::span<const double> x, std::size_t n, std::span<const double> w, std::span<double> out);
void xt_diag_x(std::span<const double> x, std::size_t n, std::span<const double> w, std::span<double> out);
}  // namespace avx2

}  // namespace msm::kernels
