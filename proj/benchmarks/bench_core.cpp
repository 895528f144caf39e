#include <benchmark/benchmark.h>

#include <random>

#include "sher/config.hpp"
#include "sher/optimizer.hpp"
#include "sher/robot_model.hpp"
#include "sher/sim.hpp"

namespace {

sher::JointVector sample_q(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lin(-80.0, 80.0);
  std::uniform_real_distribution<double> ang(-0.9, 0.9);
  return (sher::JointVector() << lin(rng), lin(rng), lin(rng), ang(rng), ang(rng)).finished();
}

void BM_ForwardKinematics(benchmark::State& state) {
  const auto desc = sher::RobotDescription::sher_default();
  std::mt19937_64 rng(1);
  const sher::JointVector q = sample_q(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sher::forward_kinematics(desc, q));
  }
}
BENCHMARK(BM_ForwardKinematics);

void BM_BodyJacobian(benchmark::State& state) {
  const auto desc = sher::RobotDescription::sher_default();
  std::mt19937_64 rng(2);
  const sher::JointVector q = sample_q(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sher::body_jacobian(desc, q));
  }
}
BENCHMARK(BM_BodyJacobian);

void BM_SolveRates(benchmark::State& state) {
  const auto desc = sher::RobotDescription::sher_default();
  std::mt19937_64 rng(3);
  const sher::JointVector q = sample_q(rng);
  // Small twists stay unconstrained; large ones saturate several joints.
  const double scale = static_cast<double>(state.range(0));
  const sher::Vec6 v = (sher::Vec6() << 1, -2, 0.5, 0.01, -0.02, 0).finished() * scale;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sher::solve_rates(desc, q, v, 1e-3));
  }
}
BENCHMARK(BM_SolveRates)->Arg(1)->Arg(100);

void BM_SimulationStep(benchmark::State& state) {
  sher::SimConfig cfg = sher::default_config();
  cfg.trial.mode = sher::ControlMode::AdaptiveTeleop;
  sher::Simulation sim(cfg);
  sher::OperatorCommand cmd;
  cmd.master_velocity(0) = 0.2;
  for (auto _ : state) {
    sim.step(cmd);
  }
}
BENCHMARK(BM_SimulationStep)->Iterations(20000);

void BM_ScriptedTrial(benchmark::State& state) {
  sher::SimConfig cfg = sher::default_config();
  cfg.trial.mode = sher::ControlMode::AdaptiveCoop;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sher::run_trial(cfg));
  }
}
BENCHMARK(BM_ScriptedTrial)->Unit(benchmark::kMillisecond);

}  // namespace

// The packaged benchmark_main archive is built with a different LTO version.
BENCHMARK_MAIN();
