#include <benchmark/benchmark.h>

#include <vector>

#include "qgs/analysis.hpp"
#include "qgs/linedata.hpp"
#include "qgs/paths.hpp"
#include "qgs/run.hpp"
#include "qgs/source.hpp"

using namespace qgs;

static void bench_sample_pair(benchmark::State& state) {
  const ApparatusPreset preset = load_preset("ethanol");
  const Experiment experiment(preset);
  PairSource source = experiment.source();
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(sample_pair(source, rng));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bench_sample_pair);

static void bench_frame(benchmark::State& state) {
  ApparatusPreset preset = load_preset("ethanol");
  preset.frames = 1;
  preset.exposure_s = 0.01;
  const Experiment experiment(preset);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(experiment.acquire(true, ++seed));
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(preset.pump.pair_rate_hz * preset.exposure_s));
}
BENCHMARK(bench_frame)->Unit(benchmark::kMillisecond);

static void bench_tabulate_jsi(benchmark::State& state) {
  ApparatusPreset preset = load_preset("ethanol");
  preset.jsi.signal_points = static_cast<std::size_t>(state.range(0));
  preset.jsi.idler_points = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        tabulate_jsi(MaterialLibrary::builtin(), preset.pump, preset.crystal, preset.jsi));
  }
}
BENCHMARK(bench_tabulate_jsi)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

static void bench_absorption_profile(benchmark::State& state) {
  const auto lines = load_linelist(data_dir() / "lines" / "c2h2_nu1nu3.par");
  GasConditions gas;
  gas.temperature_K = 300.0;
  gas.pressure_total_atm = 1.145;
  gas.self_fraction = 1.0;
  gas.molar_mass_amu = 26.04;
  const auto grid = wavelength_grid(1500.0, 1550.0, 0.005);
  for (auto _ : state) benchmark::DoNotOptimize(absorption_profile(lines, gas, grid));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}
BENCHMARK(bench_absorption_profile)->Unit(benchmark::kMillisecond);

static void bench_savgol(benchmark::State& state) {
  Spectrum s;
  for (int i = 0; i < 1024; ++i) {
    s.lambda_nm.push_back(750.0 + 0.12 * i);
    s.values.push_back(1000.0 + (i % 7));
    s.sigma.push_back(30.0);
    s.masked.push_back(0);
  }
  const int window = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(savgol_smooth(s, window, 3));
}
BENCHMARK(bench_savgol)->Arg(11)->Arg(25);

BENCHMARK_MAIN();
