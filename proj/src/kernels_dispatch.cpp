#include <atomic>
#include <cstdlib>
#include <cstring>

#include "msm/kernels.hpp"

namespace msm::kernels {

namespace {

Isa detect() {
  // MSM_FORCE_SCALAR=1 pins the reference path for a whole process.
  if (const char* env = std::getenv("MSM_FORCE_SCALAR"); env && std::strcmp(env, "1") == 0) return Isa::scalar;
  return avx2::available() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

const char* to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (isa == Isa::avx2 && !avx2::available()) isa = Isa::scalar;
  current().store(isa, std::memory_order_relaxed);
}

void reset_isa() { current().store(detect(), std::memory_order_relaxed); }

double dot(std::span<const double> a, std::span<const double> b) {
  return active_isa() == Isa::avx2 ? avx2::dot(a, b) : scalar::dot(a, b);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active_isa() == Isa::avx2 ? avx2::axpy(alpha, x, y) : scalar::axpy(alpha, x, y);
}

void gemv(std::span<const double> x, std::size_t n, std::span<const double> beta, std::span<double> out) {
  active_isa() == Isa::avx2 ? avx2::gemv(x, n, beta, out) : scalar::gemv(x, n, beta, out);
}

void xt_w(std::span<const double> x, std::size_t n, std::span<const double> w, std::span<double> out) {
  active_isa() == Isa::avx2 ? avx2::xt_w(x, n, w, out) : scalar::xt_w(x, n, w, out);
}

void xt_diag_x(std::span<const double> x, std::size_t n, std::span<const double> w, std::span<double> out) {
  active_isa() == Isa::avx2 ? avx2::xt_diag_x(x, n, w, out) : scalar::xt_diag_x(x, n, w, out);
}

}  // namespace msm::kernels
