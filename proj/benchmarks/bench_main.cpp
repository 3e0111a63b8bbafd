#include <benchmark/benchmark.h>

#include "pidrl/baseline.hpp"
#include "pidrl/control.hpp"
#include "pidrl/ppo.hpp"
#include "pidrl/snapshot.hpp"

using namespace pidrl;

namespace {

const SwitchEvent kCornerEvent = extreme_events(Plane{}).front();

void BM_RunSwitch(benchmark::State& state) {
  const ActuatorParams a;
  const PidGains g = PidGains::shared({2.0, 500.0, 0.006});
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_switch(a, kReferenceTemperatureC, g, kCornerEvent, 100.0));
  }
}
BENCHMARK(BM_RunSwitch);

// The grid search and evaluation path: the plant is discretised once.
void BM_RunSwitchPrebuiltPlant(benchmark::State& state) {
  const PlantModel plant(ActuatorParams{}, kReferenceTemperatureC, kLoopDt);
  const PidGains g = PidGains::shared({2.0, 500.0, 0.006});
  const LoopConfig loop;
  for (auto _ : state) benchmark::DoNotOptimize(run_switch(plant, g, kCornerEvent, 100.0, loop));
}
BENCHMARK(BM_RunSwitchPrebuiltPlant);

void BM_Infer(benchmark::State& state) {
  Rng rng(1);
  PolicySnapshot snap;
  snap.networks = ActorCritic::init(4, 6, 16, rng);
  const RawState s{52.0, 1.02, 47.0, 0.97};
  for (auto _ : state) benchmark::DoNotOptimize(infer(snap, s));
}
BENCHMARK(BM_Infer);

void BM_PpoUpdate(benchmark::State& state) {
  Rng rng(2);
  PpoConfig cfg;
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<Experience> batch(static_cast<std::size_t>(cfg.batch_size));
  ActorCritic ac = ActorCritic::init(4, 6, cfg.hidden_units, rng, cfg.initial_log_std);
  for (Experience& e : batch) {
    NormalizedState st;
    for (double& v : st) v = n01(rng);
    const ActionDraw d = sample_and_logprob(ac.policy, st, rng);
    e.state = to_vector(st);
    e.action = Eigen::Map<const Eigen::VectorXd>(d.raw.data(), 6);
    e.log_prob = d.log_prob;
    e.reward = -1.0 - std::abs(n01(rng));
  }
  for (auto _ : state) {
    ActorCritic work = ac;
    Adam opt(work.num_params(), cfg.learning_rate);
    benchmark::DoNotOptimize(ppo_update(batch, work, opt, cfg, rng));
  }
}
BENCHMARK(BM_PpoUpdate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
