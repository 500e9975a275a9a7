#include <benchmark/benchmark.h>

#include <random>

#include "switchsynth/centralized.hpp"
#include "switchsynth/distributed.hpp"
#include "switchsynth/io.hpp"

using namespace switchsynth;

namespace {

const std::string kConfigs = SWITCHSYNTH_CONFIG_DIR;

void BM_ImageBounds(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n * n; ++i) m.data()[i] = u(rng);
  const AffineMap f(m, Eigen::VectorXd::Ones(n));
  const Box box(std::vector<Interval>(static_cast<std::size_t>(n), {-1.0, 2.0}));
  for (auto _ : state) benchmark::DoNotOptimize(image_bounds(f, box));
}
BENCHMARK(BM_ImageBounds)->Arg(2)->Arg(11)->Arg(32);

void BM_PatternSearch(benchmark::State& state) {
  const Config cfg = load_config(kConfigs + "/two_room_centralized.json");
  const Tile tile = Tiling::trivial(cfg.R).tile(0);
  const int K = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(best_pattern_for_tile(cfg.system, tile, cfg.R, K));
}
BENCHMARK(BM_PatternSearch)->DenseRange(1, 5)->Unit(benchmark::kMicrosecond);

void BM_TwoRoomRing(benchmark::State& state) {
  const Config cfg = load_config(kConfigs + "/two_room_centralized.json");
  SynthesisOptions o = cfg.options;
  o.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(macro_step_synthesis(cfg.system, cfg.R, o));
}
BENCHMARK(BM_TwoRoomRing)->Unit(benchmark::kMillisecond);

void BM_TwoRoomDistributedRing(benchmark::State& state) {
  const Config cfg = load_config(kConfigs + "/two_room_distributed.json");
  SynthesisOptions o = cfg.options;
  o.threads = 1;
  const Box R1 = cfg.R.slice(0, 1), R2 = cfg.R.slice(1, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(macro_step_synthesis_distributed(cfg.system, R1, R2, o, *cfg.epsilon));
  }
}
BENCHMARK(BM_TwoRoomDistributedRing)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
