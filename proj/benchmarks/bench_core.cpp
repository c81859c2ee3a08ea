#include <benchmark/benchmark.h>

#include "lassonet/network.hpp"
#include "lassonet/numeric.hpp"
#include "lassonet/prox.hpp"
#include "lassonet/rng.hpp"
#include "lassonet/svd.hpp"

using namespace lassonet;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.next_uniform(-1, 1);
  return m;
}

void BM_matmul(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix a = random_matrix(rng, n, n);
  const Matrix b = random_matrix(rng, n, n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matmul(a, b));
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_hier_prox_all_features(benchmark::State& state) {
  const std::size_t d = static_cast<std::size_t>(state.range(0));
  const std::size_t k = static_cast<std::size_t>(state.range(1));
  Rng rng(2);
  const Matrix theta = random_matrix(rng, d, 1);
  const Matrix w1 = random_matrix(rng, d, k);
  const ProxParams p(0.1, 10.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(apply_prox_all_features(theta, w1, p, false));
  }
  state.SetItemsProcessed(state.iterations() * d * k);
}
BENCHMARK(BM_hier_prox_all_features)->Args({77, 77})->Args({784, 256})->Args({1000, 100});

void BM_svd_thin(benchmark::State& state) {
  const std::size_t r = static_cast<std::size_t>(state.range(0));
  const std::size_t c = static_cast<std::size_t>(state.range(1));
  Rng rng(3);
  const Matrix a = random_matrix(rng, r, c);
  for (auto _ : state) {
    benchmark::DoNotOptimize(svd_thin(a));
  }
}
BENCHMARK(BM_svd_thin)->Args({200, 40})->Args({1080, 77});

void BM_backward_epoch(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const std::size_t d = static_cast<std::size_t>(state.range(1));
  Rng rng(4);
  ResidualNet net = make_net({d, d, 8}, rng);
  const Matrix x = random_matrix(rng, n, d);
  Matrix y(n, 1);
  for (std::size_t i = 0; i < n; ++i) y(i, 0) = static_cast<double>(i % 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_backward(net, x, y, LossKind::cross_entropy));
  }
  state.SetItemsProcessed(state.iterations() * n * d);
}
BENCHMARK(BM_backward_epoch)->Args({756, 77})->Args({256, 784});

}  // namespace

BENCHMARK_MAIN();
