#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an OpenMP
// version; both produce bit-identical output (pointwise work, no reductions).
// The dispatching overloads pick the OpenMP path above kParallelThreshold.

#include <complex>
#include <cstddef>
#include <span>

namespace thetaskew::kernels {

using cplx = std::complex<double>;

inline constexpr std::size_t kParallelThreshold = 4096;

enum class Exec { serial, parallel, automatic };

// out[k] = |psi[k]|^2 exp(-2 theta phase[k])
void deformed_intensity_serial(std::span<const cplx> psi, std::span<const double> phase,
                               double theta, std::span<double> out);
void deformed_intensity_parallel(std::span<const cplx> psi, std::span<const double> phase,
                                 double theta, std::span<double> out);
void deformed_intensity(std::span<const cplx> psi, std::span<const double> phase, double theta,
                        std::span<double> out, Exec exec = Exec::automatic);

// out[k] = r1 exp(i s1 / kappa) + r2 exp(i s2 / kappa)
void two_packet_field_serial(std::span<const double> r1, std::span<const double> r2,
                             std::span<const double> s1, std::span<const double> s2, cplx kappa,
                             std::span<cplx> out);
void two_packet_field_parallel(std::span<const double> r1, std::span<const double> r2,
                               std::span<const double> s1, std::span<const double> s2,
                               cplx kappa, std::span<cplx> out);
void two_packet_field(std::span<const double> r1, std::span<const double> r2,
                      std::span<const double> s1, std::span<const double> s2, cplx kappa,
                      std::span<cplx> out, Exec exec = Exec::automatic);

// Discrete convolution with an odd-length kernel centered on its middle tap.
// Samples outside [0, n) are treated as zero.
void convolve_serial(std::span<const double> in, std::span<const double> kernel,
                     std::span<double> out);
void convolve_parallel(std::span<const double> in, std::span<const double> kernel,
                       std::span<double> out);
void convolve(std::span<const double> in, std::span<const double> kernel, std::span<double> out,
              Exec exec = Exec::automatic);

// a[k] *= b[k]
void multiply_inplace_serial(std::span<cplx> a, std::span<const cplx> b);
void multiply_inplace_parallel(std::span<cplx> a, std::span<const cplx> b);
void multiply_inplace(std::span<cplx> a, std::span<const cplx> b, Exec exec = Exec::automatic);

// acc[k] += x[k]
void accumulate_serial(std::span<double> acc, std::span<const double> x);
void accumulate_parallel(std::span<double> acc, std::span<const double> x);
void accumulate(std::span<double> acc, std::span<const double> x, Exec exec = Exec::automatic);

/// Number of OpenMP threads the parallel kernels will use.
int max_threads();
void set_threads(int n);

}  // namespace thetaskew::kernels
