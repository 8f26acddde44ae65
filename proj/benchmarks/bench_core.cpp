#include <benchmark/benchmark.h>

#include "rotorsim/dynamics.hpp"
#include "rotorsim/observables.hpp"
#include "rotorsim/operators.hpp"
#include "rotorsim/wigner.hpp"

using namespace rotorsim;

namespace {

void BM_ThreeJ(benchmark::State& state) {
  const int j = static_cast<int>(state.range(0));
  for (auto _ : state) {
    double acc = 0.0;
    for (int m = -j; m <= j; ++m) {
      acc += three_j(j, j, 2, m, -m, 0);
    }
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_ThreeJ)->Arg(5)->Arg(20)->Arg(60);

void BM_SmallD(benchmark::State& state) {
  const int j = static_cast<int>(state.range(0));
  for (auto _ : state) {
    double acc = 0.0;
    for (int m = -j; m <= j; ++m) {
      acc += wigner_small_d(j, m, 0, 0.7);
    }
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_SmallD)->Arg(5)->Arg(20)->Arg(60);

void BM_DirectionCosineAssembly(benchmark::State& state) {
  auto basis = BasisSet::build(TopClass::Linear, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Operator op = direction_cosine(basis, SpaceAxis::Z);
    benchmark::DoNotOptimize(op.mat.data());
  }
  state.SetLabel("dim=" + std::to_string(basis->dimension()));
}
BENCHMARK(BM_DirectionCosineAssembly)->Arg(10)->Arg(20)->Arg(40);

void BM_CosProductAssembly(benchmark::State& state) {
  auto basis =
      BasisSet::build(TopClass::ProlateSymmetric, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Operator op = cos_product(basis, SpaceAxis::X, SpaceAxis::Z);
    benchmark::DoNotOptimize(op.mat.data());
  }
  state.SetLabel("dim=" + std::to_string(basis->dimension()));
}
BENCHMARK(BM_CosProductAssembly)->Arg(4)->Arg(8)->Arg(12);

void BM_KickPropagator(benchmark::State& state) {
  auto basis =
      BasisSet::build(TopClass::Linear, static_cast<int>(state.range(0)))
          ->m_restricted(0);
  for (auto _ : state) {
    Unitary u = sudden_propagator(basis, 1.0);
    benchmark::DoNotOptimize(u.mat.data());
  }
  state.SetLabel("dim=" + std::to_string(basis->dimension()));
}
BENCHMARK(BM_KickPropagator)->Arg(20)->Arg(40)->Arg(60);

void BM_UnitaryStep(benchmark::State& state) {
  const int jmax = static_cast<int>(state.range(0));
  auto basis = BasisSet::build(TopClass::Linear, jmax)->m_restricted(0);
  RotorSpec spec;
  spec.B = 1.0;
  spec.alpha_par = 2.0;
  GaussianPulse g;
  g.t0 = 0.0;
  g.fwhm = 1.0;
  g.peak = {0.0, 0.0, 1.0};
  TimeDependentHamiltonian ham(spec, basis, {PulseSpec{g}});
  Eigen::MatrixXcd h(basis->dimension(), basis->dimension());
  QuantumState s = QuantumState::pure(basis, 0);
  const double dt = 1e-4;
  double t = -2.0;
  for (auto _ : state) {
    ham.assemble(t + 0.5 * dt, h);
    benchmark::DoNotOptimize(h.data());
    t += dt;
  }
  state.SetLabel("dim=" + std::to_string(basis->dimension()));
}
BENCHMARK(BM_UnitaryStep)->Arg(20)->Arg(60);

void BM_ThermalState(benchmark::State& state) {
  auto basis = BasisSet::build(TopClass::Linear, static_cast<int>(state.range(0)));
  RotorSpec spec;
  spec.B = 1.0;
  for (auto _ : state) {
    QuantumState th = thermal_state(spec, basis, 30.0);
    benchmark::DoNotOptimize(th.density().data());
  }
}
BENCHMARK(BM_ThermalState)->Arg(20)->Arg(40);

}  // namespace

BENCHMARK_MAIN();
