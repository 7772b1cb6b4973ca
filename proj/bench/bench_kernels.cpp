// Serial reference paths against their OpenMP counterparts.
#include <random>

#include <benchmark/benchmark.h>

#include "outreg/analysis.hpp"
#include "outreg/kernels.hpp"

namespace {

using outreg::kernels::Exec;

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> d;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = d(rng);
  return m;
}

void BM_AccumulateKron(benchmark::State& state, Exec exec) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd left = gaussian(rng, n, n);
  const Eigen::MatrixXd right = gaussian(rng, n, n);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * n, n * n);
  for (auto _ : state) {
    outreg::kernels::accumulate_kron(out, 0, 0, left, right, 1.0, exec);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK_CAPTURE(BM_AccumulateKron, serial, Exec::kSerial)->Arg(8)->Arg(16)->Arg(32);
BENCHMARK_CAPTURE(BM_AccumulateKron, parallel, Exec::kParallel)->Arg(8)->Arg(16)->Arg(32);

void BM_TimeAverage(benchmark::State& state, Exec exec) {
  Eigen::MatrixXd abar = Eigen::MatrixXd::Zero(4, 4);
  abar(0, 1) = 1.0;
  abar(1, 0) = -1.0;
  abar(2, 3) = 2.5;
  abar(3, 2) = -2.5;
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd M = gaussian(rng, 3, 4);
  const Eigen::MatrixXd S = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        outreg::kernels::time_average_quadratic(abar, x0, M, S, 1e3, state.range(0), exec));
  }
}
BENCHMARK_CAPTURE(BM_TimeAverage, serial, Exec::kSerial)->Arg(20000)->Arg(200000);
BENCHMARK_CAPTURE(BM_TimeAverage, parallel, Exec::kParallel)->Arg(20000)->Arg(200000);

void BM_RhoSweep(benchmark::State& state, Exec exec) {
  outreg::Exosystem exo;
  exo.Abar = Eigen::MatrixXd::Zero(3, 3);
  exo.Abar(0, 1) = 1.5;
  exo.Abar(1, 0) = -1.5;
  std::mt19937_64 rng(3);
  exo.Cbar = gaussian(rng, 1, 3);
  outreg::Plant plant = outreg::Plant::make(gaussian(rng, 4, 4) * 0.5, gaussian(rng, 4, 3),
                                            gaussian(rng, 1, 4));
  const outreg::ProblemSpec spec = outreg::ProblemSpec::make(plant, exo);
  std::vector<double> grid;
  for (int k = 0; k < state.range(0); ++k) grid.push_back(std::pow(10.0, 2.0 + 4.0 * k / (state.range(0) - 1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        outreg::convergence_study(spec, outreg::ConvergenceMode::kRhoToInfinity, grid, exec));
  }
}
BENCHMARK_CAPTURE(BM_RhoSweep, serial, Exec::kSerial)->Arg(16);
BENCHMARK_CAPTURE(BM_RhoSweep, parallel, Exec::kParallel)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
