#include <benchmark/benchmark.h>

#include "fredholm/estimate.hpp"
#include "fredholm/psf.hpp"
#include "fredholm/sampling.hpp"
#include "fredholm/simulate.hpp"

using namespace fredholm;

namespace {

ThetaVector bench_theta() {
  ThetaVector theta;
  theta.theta = {0e-6, -2e-6, 0e-6, 2e-6, 1e-6, 2e-6,
                 0e-6, 1e-6,  0e-6, 3e-6, 1e-6, -1e-6};
  return theta;
}

ScalarField gaussian_spot(int n, double sigma) {
  ScalarField field(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      field.at(r, c) =
          gaussian_psf_eval(sigma, field.u_of_col(c), field.v_of_row(r));
    }
  }
  return field;
}

void BM_BuildSamplingMatrix(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(SamplingMatrix::build(n));
  }
}
BENCHMARK(BM_BuildSamplingMatrix)->Arg(64)->Arg(256)->Arg(512);

void BM_SensorSample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ScalarField spot = gaussian_spot(n, 3.0);
  const SamplingMatrix r = SamplingMatrix::build(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sensor_sample(spot, r));
  }
}
BENCHMARK(BM_SensorSample)->Arg(64)->Arg(256);

void BM_CorrectSampling(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SamplingMatrix r = SamplingMatrix::build(n);
  const ScalarField sensed = sensor_sample(gaussian_spot(n, 3.0), r);
  for (auto _ : state) {
    benchmark::DoNotOptimize(correct_sampling(sensed, r));
  }
}
BENCHMARK(BM_CorrectSampling)->Arg(64)->Arg(256);

void BM_RenderFredholm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const PointSourceScene scene = make_grid_scene(n, n, 5, 5, n / 6.0, 1e5);
  const DistortionSpec spec = theta_to_polynomial(bench_theta());
  const ReferencePsf psf = GaussianPsf{10.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_fredholm(scene, psf, spec));
  }
}
BENCHMARK(BM_RenderFredholm)->Arg(255)->Arg(505);

void BM_ValueFunction(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const PointSourceScene scene = make_grid_scene(n, n, 5, 5, n / 6.0, 1e5);
  const ReferencePsf psf = GaussianPsf{10.0};
  const ThetaVector theta = bench_theta();
  const ScalarField observed =
      render_fredholm(scene, psf, theta_to_polynomial(theta));
  for (auto _ : state) {
    benchmark::DoNotOptimize(value_function(observed, scene, psf, theta));
  }
}
BENCHMARK(BM_ValueFunction)->Arg(255);

void BM_ShannonEval(benchmark::State& state) {
  const ScalarField spot = gaussian_spot(64, 3.0);
  double u = 0.37;
  for (auto _ : state) {
    benchmark::DoNotOptimize(shannon_eval(spot, u, -0.7, 32));
    u += 1e-6;
  }
}
BENCHMARK(BM_ShannonEval);

void BM_UpsamplePsf(benchmark::State& state) {
  const ScalarField table = gaussian_spot(51, 5.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(upsample_psf_frequency(table, 8));
  }
}
BENCHMARK(BM_UpsamplePsf);

void BM_PoissonNoise(benchmark::State& state) {
  const ScalarField zero(505, 505);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(add_poisson_noise(zero, {10.0, seed++}));
  }
}
BENCHMARK(BM_PoissonNoise);

}  // namespace

BENCHMARK_MAIN();
