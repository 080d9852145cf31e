#include "thetaskew/kernels.hpp"

#include <cassert>
#include <cmath>
#include <cstdint>

#include <omp.h>

namespace thetaskew::kernels {

namespace {

bool use_parallel(Exec exec, std::size_t n) {
  if (exec == Exec::serial) return false;
  if (exec == Exec::parallel) return true;
  return n >= kParallelThreshold;
}

inline double deformed_point(cplx psi, double phase, double theta) {
  return std::norm(psi) * std::exp(-2.0 * theta * phase);
}

inline cplx packet_point(double r1, double r2, double s1, double s2, cplx i_over_kappa) {
  return r1 * std::exp(s1 * i_over_kappa) + r2 * std::exp(s2 * i_over_kappa);
}

inline double convolve_point(std::span<const double> in, std::span<const double> kernel,
                             std::ptrdiff_t k) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  double acc = 0.0;
  for (std::ptrdiff_t j = -half; j <= half; ++j) {
    const std::ptrdiff_t src = k - j;
    if (src < 0 || src >= n) continue;
    acc += kernel[static_cast<std::size_t>(j + half)] * in[static_cast<std::size_t>(src)];
  }
  return acc;
}

}  // namespace

void deformed_intensity_serial(std::span<const cplx> psi, std::span<const double> phase,
                               double theta, std::span<double> out) {
  assert(psi.size() == phase.size() && psi.size() == out.size());
  for (std::size_t k = 0; k < psi.size(); ++k) out[k] = deformed_point(psi[k], phase[k], theta);
}

void deformed_intensity_parallel(std::span<const cplx> psi, std::span<const double> phase,
                                 double theta, std::span<double> out) {
  assert(psi.size() == phase.size() && psi.size() == out.size());
  const auto n = static_cast<std::int64_t>(psi.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < n; ++k) out[k] = deformed_point(psi[k], phase[k], theta);
}

void deformed_intensity(std::span<const cplx> psi, std::span<const double> phase, double theta,
                        std::span<double> out, Exec exec) {
  if (use_parallel(exec, psi.size()))
    deformed_intensity_parallel(psi, phase, theta, out);
  else
    deformed_intensity_serial(psi, phase, theta, out);
}

void two_packet_field_serial(std::span<const double> r1, std::span<const double> r2,
                             std::span<const double> s1, std::span<const double> s2, cplx kappa,
                             std::span<cplx> out) {
  const cplx i_over_kappa = cplx{0.0, 1.0} / kappa;
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = packet_point(r1[k], r2[k], s1[k], s2[k], i_over_kappa);
}

void two_packet_field_parallel(std::span<const double> r1, std::span<const double> r2,
                               std::span<const double> s1, std::span<const double> s2,
                               cplx kappa, std::span<cplx> out) {
  const cplx i_over_kappa = cplx{0.0, 1.0} / kappa;
  const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < n; ++k)
    out[k] = packet_point(r1[k], r2[k], s1[k], s2[k], i_over_kappa);
}

void two_packet_field(std::span<const double> r1, std::span<const double> r2,
                      std::span<const double> s1, std::span<const double> s2, cplx kappa,
                      std::span<cplx> out, Exec exec) {
  if (use_parallel(exec, out.size()))
    two_packet_field_parallel(r1, r2, s1, s2, kappa, out);
  else
    two_packet_field_serial(r1, r2, s1, s2, kappa, out);
}

void convolve_serial(std::span<const double> in, std::span<const double> kernel,
                     std::span<double> out) {
  assert(kernel.size() % 2 == 1 && in.size() == out.size());
  for (std::size_t k = 0; k < in.size(); ++k)
    out[k] = convolve_point(in, kernel, static_cast<std::ptrdiff_t>(k));
}

void convolve_parallel(std::span<const double> in, std::span<const double> kernel,
                       std::span<double> out) {
  assert(kernel.size() % 2 == 1 && in.size() == out.size());
  const auto n = static_cast<std::int64_t>(in.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < n; ++k) out[k] = convolve_point(in, kernel, k);
}

void convolve(std::span<const double> in, std::span<const double> kernel, std::span<double> out,
              Exec exec) {
  if (use_parallel(exec, in.size() * kernel.size() / 16))
    convolve_parallel(in, kernel, out);
  else
    convolve_serial(in, kernel, out);
}

void multiply_inplace_serial(std::span<cplx> a, std::span<const cplx> b) {
  for (std::size_t k = 0; k < a.size(); ++k) a[k] *= b[k];
}

void multiply_inplace_parallel(std::span<cplx> a, std::span<const cplx> b) {
  const auto n = static_cast<std::int64_t>(a.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < n; ++k) a[k] *= b[k];
}

void multiply_inplace(std::span<cplx> a, std::span<const cplx> b, Exec exec) {
  if (use_parallel(exec, a.size()))
    multiply_inplace_parallel(a, b);
  else
    multiply_inplace_serial(a, b);
}

void accumulate_serial(std::span<double> acc, std::span<const double> x) {
  for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += x[k];
}

void accumulate_parallel(std::span<double> acc, std::span<const double> x) {
  const auto n = static_cast<std::int64_t>(acc.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < n; ++k) acc[k] += x[k];
}

void accumulate(std::span<double> acc, std::span<const double> x, Exec exec) {
  if (use_parallel(exec, acc.size()))
    accumulate_parallel(acc, x);
  else
    accumulate_serial(acc, x);
}

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

}  // namespace thetaskew::kernels
