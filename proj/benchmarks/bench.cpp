#include "sarbot/exper.hpp"
#include "sarbot/netcore.hpp"
#include "sarbot/signals.hpp"
#include "sarbot/simenv.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

using namespace sarbot;

std::vector<double> random_inputs(std::size_t n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = u(rng);
  return x;
}

net::Network reference_network() {
  net::Vector m(3);
  m << 1, 3, 5;
  return net::Network(net::reference_architecture(), m, 1);
}

void BM_Forward(benchmark::State& state) {
  auto network = reference_network();
  const auto x = random_inputs(240);
  for (auto _ : state) benchmark::DoNotOptimize(network.forward(x));
}
BENCHMARK(BM_Forward);

void BM_ForwardAndUpdate(benchmark::State& state) {
  const auto kind = static_cast<net::RuleKind>(state.range(0));
  auto network = reference_network();
  const auto x = random_inputs(240);
  const auto rule = net::UpdateRule::make(kind, 1e-6);
  const double e = 0.5;
  for (auto _ : state) {
    network.forward(x);
    switch (kind) {
      case net::RuleKind::kGdm:
        network.backprop_delta();
        break;
      case net::RuleKind::kLocalProp:
        network.local_prop(e);
        break;
      case net::RuleKind::kSar:
        network.sign_prop(e);
        network.local_prop(e);
        break;
    }
    network.apply_update(rule, 2.0 * e * -0.2, net::LoopGainSign::kNegative);
  }
  state.SetLabel(std::string(net::to_string(kind)));
}
BENCHMARK(BM_ForwardAndUpdate)->DenseRange(0, 2);

void BM_FilterStep(benchmark::State& state) {
  signals::FilterArray bank;
  signals::DifferenceGrid d;
  const auto x = random_inputs(signals::kDifferenceCount);
  std::copy(x.begin(), x.end(), d.values.begin());
  for (auto _ : state) benchmark::DoNotOptimize(bank.step(d));
}
BENCHMARK(BM_FilterStep);

void BM_CameraSample(benchmark::State& state) {
  const sim::World world = sim::make_track(sim::TrackSpec{});
  const sim::SensorLayout layout;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim::sample_camera(world.canvas, world.start, layout));
    benchmark::DoNotOptimize(sim::sample_ldr(world.canvas, world.start, layout));
  }
}
BENCHMARK(BM_CameraSample);

// Whole closed loop; reported per simulated tick.
void BM_TrialTicks(benchmark::State& state) {
  exper::TrialConfig config;
  config.calibration.enabled = false;
  config.max_duration = 20.0;
  const sim::World world = sim::make_track(config.track);
  std::size_t ticks = 0;
  for (auto _ : state) {
    const auto record = exper::run_trial(config, world);
    ticks += record.ticks.size();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(ticks));
}
BENCHMARK(BM_TrialTicks)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
