#include "recavg/avgcore.hpp"
#include "recavg/geom3.hpp"
#include "recavg/odeint.hpp"
#include "recavg/seek3d.hpp"
#include "recavg/test_systems.hpp"

#include <benchmark/benchmark.h>

namespace av = recavg::avgcore;
namespace ode = recavg::odeint;
namespace sk = recavg::seek3d;

namespace {

// One second of the full 13-state system, projection on.
void BM_FullSystemIntegration(benchmark::State& state) {
  const sk::SeekParams params;
  const auto field = sk::signal_field("static");
  ode::IntegratorSettings settings;
  settings.steps_per_period = static_cast<int>(state.range(0));
  const auto plan = ode::plan_steps(1.0, sk::fastest_period(params), settings);
  sk::RigidState s0;
  s0.p = sk::Vec3(-2, -2, 6);
  for (auto _ : state) {
    auto traj = sk::simulate_full(params, field, s0, 0.0, 1.0, plan, settings);
    benchmark::DoNotOptimize(traj.states.back());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(plan.steps));
}
BENCHMARK(BM_FullSystemIntegration)->Arg(64)->Arg(256);

void BM_RotExp(benchmark::State& state) {
  const Eigen::Vector3d w(0.3, -1.2, 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(recavg::geom3::rot_exp(w));
}
BENCHMARK(BM_RotExp);

void BM_AveragedSinCos(benchmark::State& state) {
  const auto avg = av::average_fields(av::sincos_system(1.0));
  av::Vector x(2);
  x << 0.4, -1.1;
  for (auto _ : state) benchmark::DoNotOptimize(avg(x, 0.0));
}
BENCHMARK(BM_AveragedSinCos);

// One evaluation of the numerically averaged embedded field.
void BM_AveragedEmbeddedPoint(benchmark::State& state) {
  const sk::SeekParams params;
  const auto field = sk::signal_field("static");
  const auto avg = av::rora_reduce(sk::embedded_system(params, field));
  const av::Vector x = sk::embed(sk::Vec3(-2, -2, 6), sk::Mat3::Identity());
  for (auto _ : state) benchmark::DoNotOptimize(avg(x, 0.0));
}
BENCHMARK(BM_AveragedEmbeddedPoint)->Unit(benchmark::kMillisecond);

void BM_ComputeA(benchmark::State& state) {
  const sk::SeekParams params;
  const int probes = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sk::compute_A_numeric(params, {}, probes).A);
}
BENCHMARK(BM_ComputeA)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
