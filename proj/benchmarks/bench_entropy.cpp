// Microbenchmarks for the hot paths: the mixture density kernel, the Monte
// Carlo entropy loop, the pairwise bound sums and the clustering metrics.

#include <benchmark/benchmark.h>

#include "infoflow/clustering.hpp"
#include "infoflow/entropy.hpp"
#include "infoflow/gaussian_mixture.hpp"
#include "infoflow/rng.hpp"

namespace {

infoflow::GaussianMixture random_mixture(int n, int d, double beta,
                                         std::uint64_t seed) {
  infoflow::rng::Stream stream(seed);
  Eigen::MatrixXd centers(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) centers(i, j) = 2.0 * stream.uniform() - 1.0;
  }
  return infoflow::GaussianMixture::uniform(std::move(centers), beta);
}

void BM_MixtureLogDensity(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int d = static_cast<int>(state.range(1));
  const auto g = random_mixture(n, d, 0.1, 1);
  const infoflow::detail::MixtureDensityKernel kernel(g);
  infoflow::rng::Stream stream(2);
  Eigen::MatrixXd points(256, d);
  for (int i = 0; i < 256; ++i) {
    for (int j = 0; j < d; ++j) points(i, j) = stream.normal();
  }
  Eigen::VectorXd out(256);
  for (auto _ : state) {
    kernel.log_density_anchored(points, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * 256 * n);
}
BENCHMARK(BM_MixtureLogDensity)
    ->Args({64, 3})
    ->Args({512, 3})
    ->Args({4096, 3})
    ->Args({512, 16});

void BM_McEntropy(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto g = random_mixture(n, 4, 0.1, 3);
  infoflow::McOptions opts;
  opts.threads = 1;
  for (auto _ : state) {
    const auto est = infoflow::mc_entropy(g, 64, 7, opts);
    benchmark::DoNotOptimize(est.value);
  }
  state.SetItemsProcessed(state.iterations() * n * 64);
}
BENCHMARK(BM_McEntropy)->Arg(64)->Arg(256)->Arg(1024);

void BM_EntropyBounds(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto g = random_mixture(n, 4, 0.1, 5);
  for (auto _ : state) {
    const auto b = infoflow::entropy_bounds(g);
    benchmark::DoNotOptimize(b.lower[2]);
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_EntropyBounds)->Arg(64)->Arg(512)->Arg(2048);

void BM_BinnedEntropy(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  infoflow::rng::Stream stream(8);
  infoflow::ActivationSet acts;
  acts.values.resize(n, 3);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < 3; ++c) acts.values(r, c) = 2.0 * stream.uniform() - 1;
  }
  const auto spec = infoflow::BinningSpec::for_range(0.05, -1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(infoflow::binned_entropy(acts, spec));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_BinnedEntropy)->Arg(1000)->Arg(100000);

void BM_PairwiseHistogram(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  infoflow::rng::Stream stream(9);
  infoflow::ActivationSet acts;
  acts.values.resize(n, 3);
  Eigen::VectorXd labels(n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < 3; ++c) acts.values(r, c) = stream.normal();
    labels[r] = r % 2;
  }
  acts.labels = labels;
  infoflow::HistogramOptions opts;
  opts.n_bins = 50;
  for (auto _ : state) {
    const auto h = infoflow::pairwise_distance_histogram(acts, opts);
    benchmark::DoNotOptimize(h.within_counts.data());
  }
  state.SetItemsProcessed(state.iterations() * n * (n - 1) / 2);
}
BENCHMARK(BM_PairwiseHistogram)->Arg(200)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
