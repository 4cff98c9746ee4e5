#include <benchmark/benchmark.h>

#include <random>

#include "bdem/config.hpp"
#include "bdem/manifold_solver.hpp"

namespace {

using namespace bdem;

Scene beam(int nx) {
  SceneConfig c = builtin_scene("beam-drape");
  c.box.nx = nx;
  return build_scene(c);
}

void BM_BondPotential(benchmark::State& state) {
  const BondParams p = BondParams::make(1e9, 4e8, 0.1, 0.03, 1e6, 1e6);
  const BondRest rest = BondRest::from_direction(Vec3(1.0, 0.2, 0.1).normalized());
  const Quat qi = normalize(Quat(Vec4(0.1, 0.0, 0.05, 1.0)));
  const Quat qj = normalize(Quat(Vec4(0.0, 0.08, 0.0, 1.0)));
  const Vec3 pj = 0.102 * rest.d0 + Vec3(0.0, 0.003, 0.0);
  const bool hessian = state.range(0) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bond_potential(Vec3::Zero(), qi, pj, qj, rest, p, BondState{}, hessian));
  }
}
BENCHMARK(BM_BondPotential)->Arg(0)->Arg(1);

void BM_EvaluatePotentialHessian(benchmark::State& state) {
  const Scene s = beam(static_cast<int>(state.range(0)));
  const VectorXd x = s.configuration();
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_potential(s, x, {}, EvalLevel::kHessian));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(s.graph.bonds.size()));
}
BENCHMARK(BM_EvaluatePotentialHessian)->Arg(10)->Arg(25);

void BM_ReducedAssembly(benchmark::State& state) {
  const Scene s = beam(static_cast<int>(state.range(0)));
  const VectorXd x = s.configuration();
  const Evaluation ev = evaluate_potential(s, x, {}, EvalLevel::kHessian);
  const TangentOperator h = riemannian_hessian(x, ev.terms);
  const std::vector<bool> fixed(s.element_count(), false);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nullspace_reduce(x, h, ev.grad, fixed));
  }
}
BENCHMARK(BM_ReducedAssembly)->Arg(10)->Arg(25);

void BM_Pcg(benchmark::State& state) {
  const Scene s = beam(25);
  const VectorXd x = s.configuration();
  const Evaluation ev = evaluate_potential(s, x, {}, EvalLevel::kHessian);
  const TangentOperator h = riemannian_hessian(x, ev.terms);
  const std::vector<bool> fixed(s.element_count(), false);
  const ReducedSystem sys = nullspace_reduce(x, h, ev.grad, fixed);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  VectorXd b(sys.matrix.rows());
  for (int i = 0; i < b.size(); ++i) b[i] = n(rng);
  // Mass-like shift so the system is definite, as inside a time step.
  const double shift = 1e-2 * sys.matrix.diagonal_block(0).norm();
  const LinearApply apply = [&](const VectorXd& v, VectorXd& y) {
    sys.matrix.apply(v, y);
    y += shift * v;
  };
  BlockSparseMatrix shifted(sys.matrix.block_rows(), kTangentDim);
  const MatrixXd dense_shift = shift * MatrixXd::Identity(kTangentDim, kTangentDim);
  for (int i = 0; i < sys.matrix.block_rows(); ++i) shifted.add_block(i, i, sys.matrix.diagonal_block(i) + dense_shift);
  shifted.finalize();
  const auto precond = make_preconditioner(PreconditionerKind::kBlockJacobi, shifted);
  PcgOptions o;
  o.relative_tolerance = 1e-6;
  o.max_iterations = 5000;
  for (auto _ : state) {
    const PcgResult r = pcg(apply, b, *precond, o);
    state.counters["iterations"] = r.iterations;
  }
}
BENCHMARK(BM_Pcg)->Unit(benchmark::kMillisecond);

void BM_StableStep(benchmark::State& state) {
  SceneConfig c = builtin_scene("beam-drape");
  c.box.nx = static_cast<int>(state.range(0));
  const Scene start = build_scene(c);
  StableStepOptions o;
  o.solver = solver_options(c, start, c.dt);
  for (auto _ : state) {
    state.PauseTiming();
    Scene s = start;
    state.ResumeTiming();
    benchmark::DoNotOptimize(stable_step(s, c.dt, o));
  }
}
BENCHMARK(BM_StableStep)->Arg(10)->Arg(25)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
