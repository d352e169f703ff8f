#include <benchmark/benchmark.h>

#include <string>

#include "lossres/copula/regression.hpp"
#include "lossres/resample/copula_resample.hpp"
#include "lossres/sim/generate.hpp"
#include "lossres/triangle_io.hpp"

using namespace lossres;

namespace {

struct Fixture {
  PortfolioDataset data = parse_triangle_csv(std::string(LOSSRES_DATA_DIR) + "/appendix_wide.csv", CsvSchema::kWide);
  copula::CopulaRegressionFit fit = [this] {
    copula::FitOptions options;
    options.copula = copula::CopulaFamily::kGaussian;
    return copula::fit(data[0], options);
  }();
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

ParallelOptions mode_of(const benchmark::State& state) {
  return state.range(0) == 0 ? ParallelOptions{Execution::kSerial, 1} : ParallelOptions{Execution::kParallel, 0};
}

void BM_McSimulate(benchmark::State& state) {
  const auto& f = fixture();
  const auto parallel = mode_of(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(resample::mc_simulate(f.fit, f.data[0], 2000, 7, parallel));
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}

void BM_ParametricBootstrap(benchmark::State& state) {
  const auto& f = fixture();
  const auto parallel = mode_of(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(resample::parametric_bootstrap(f.fit, f.data[0], 16, 7, parallel));
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}

void BM_GeneratePortfolio(benchmark::State& state) {
  const auto params = sim::study_params();
  for (auto _ : state) benchmark::DoNotOptimize(sim::generate_portfolio(params, 50, 3));
}

}  // namespace

BENCHMARK(BM_McSimulate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ParametricBootstrap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GeneratePortfolio)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
