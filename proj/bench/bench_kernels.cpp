// Serial reference vs OpenMP kernels over a range of grid sizes.
//   build/bench/bench_kernels --benchmark_filter=convolve

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "thetaskew/kernels.hpp"

namespace k = thetaskew::kernels;

namespace {

struct Data {
  std::vector<k::cplx> psi, psi2;
  std::vector<double> a, b, c, d, out;
  std::vector<k::cplx> cout;

  explicit Data(std::size_t n) : psi(n), psi2(n), a(n), b(n), c(n), d(n), out(n), cout(n) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      psi[i] = {u(rng), u(rng)};
      psi2[i] = std::polar(1.0, u(rng));
      a[i] = 1.0 + 0.5 * u(rng);
      b[i] = 1.0 + 0.5 * u(rng);
      c[i] = 10.0 * u(rng);
      d[i] = 10.0 * u(rng);
    }
  }
};

std::vector<double> gauss_kernel(int half) {
  std::vector<double> g(2 * half + 1);
  double s = 0.0;
  for (int i = -half; i <= half; ++i) s += g[i + half] = std::exp(-0.5 * i * i / (0.25 * half * half));
  for (auto& v : g) v /= s;
  return g;
}

template <bool Parallel>
void BM_deformed_intensity(benchmark::State& st) {
  Data x(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) {
    if constexpr (Parallel) k::deformed_intensity_parallel(x.psi, x.c, 0.05, x.out);
    else k::deformed_intensity_serial(x.psi, x.c, 0.05, x.out);
    benchmark::DoNotOptimize(x.out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_two_packet_field(benchmark::State& st) {
  Data x(static_cast<std::size_t>(st.range(0)));
  const k::cplx kappa(1.0, 0.05);
  for (auto _ : st) {
    if constexpr (Parallel) k::two_packet_field_parallel(x.a, x.b, x.c, x.d, kappa, x.cout);
    else k::two_packet_field_serial(x.a, x.b, x.c, x.d, kappa, x.cout);
    benchmark::DoNotOptimize(x.cout.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_convolve(benchmark::State& st) {
  Data x(static_cast<std::size_t>(st.range(0)));
  const auto g = gauss_kernel(32);
  for (auto _ : st) {
    if constexpr (Parallel) k::convolve_parallel(x.a, g, x.out);
    else k::convolve_serial(x.a, g, x.out);
    benchmark::DoNotOptimize(x.out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_multiply_inplace(benchmark::State& st) {
  Data x(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) {
    if constexpr (Parallel) k::multiply_inplace_parallel(x.psi, x.psi2);
    else k::multiply_inplace_serial(x.psi, x.psi2);
    benchmark::DoNotOptimize(x.psi.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_accumulate(benchmark::State& st) {
  Data x(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) {
    if constexpr (Parallel) k::accumulate_parallel(x.out, x.a);
    else k::accumulate_serial(x.out, x.a);
    benchmark::DoNotOptimize(x.out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

#define SIZES RangeMultiplier(8)->Range(1 << 10, 1 << 22)

BENCHMARK(BM_deformed_intensity<false>)->SIZES;
BENCHMARK(BM_deformed_intensity<true>)->SIZES;
BENCHMARK(BM_two_packet_field<false>)->SIZES;
BENCHMARK(BM_two_packet_field<true>)->SIZES;
BENCHMARK(BM_convolve<false>)->SIZES;
BENCHMARK(BM_convolve<true>)->SIZES;
BENCHMARK(BM_multiply_inplace<false>)->SIZES;
BENCHMARK(BM_multiply_inplace<true>)->SIZES;
BENCHMARK(BM_accumulate<false>)->SIZES;
BENCHMARK(BM_accumulate<true>)->SIZES;

}  // namespace

BENCHMARK_MAIN();
