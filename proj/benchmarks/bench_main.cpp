#include <vector>

#include <benchmark/benchmark.h>

#include "gpstruct/chain.hpp"
#include "gpstruct/kernels.hpp"
#include "gpstruct/random.hpp"
#include "gpstruct/sampler.hpp"

namespace gpstruct {
namespace {

// Chain-structured corpus with dense random features.
Corpus make_corpus(std::size_t n_seqs, std::size_t length, std::size_t labels, std::size_t dim,
                   std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TokenSequence> seqs;
  for (std::size_t n = 0; n < n_seqs; ++n) {
    TokenSequence seq;
    std::vector<Label> y;
    for (std::size_t t = 0; t < length; ++t) {
      const Eigen::VectorXd x = rng.normal_vector(static_cast<Eigen::Index>(dim));
      seq.features.push_back(FeatureVector::from_dense({x.data(), dim}));
      y.push_back(static_cast<Label>(rng.uniform_index(labels)));
    }
    seq.labels = std::move(y);
    seqs.push_back(std::move(seq));
  }
  std::vector<std::string> alphabet;
  for (std::size_t y = 0; y < labels; ++y) {
    alphabet.push_back("L" + std::to_string(y));
  }
  return Corpus(std::move(seqs), std::move(alphabet), dim);
}

void BM_LogPartition(benchmark::State& state) {
  const auto t_len = state.range(0);
  const auto labels = state.range(1);
  Rng rng(1);
  ChainPotentials pots{Eigen::MatrixXd::NullaryExpr(t_len, labels, [&] { return rng.normal(); }),
                       Eigen::MatrixXd::NullaryExpr(labels, labels, [&] { return rng.normal(); })};
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_partition(pots));
  }
  state.SetItemsProcessed(state.iterations() * t_len);
}
BENCHMARK(BM_LogPartition)->Args({10, 2})->Args({50, 10})->Args({200, 45});

void BM_AssembleGram(benchmark::State& state) {
  const Corpus c = make_corpus(static_cast<std::size_t>(state.range(0)), 10, 5, 50, 2);
  KernelConfig cfg;
  cfg.input_kernel = InputKernel::kSquaredExponential;
  for (auto _ : state) {
    benchmark::DoNotOptimize(assemble_gram(c, cfg));
  }
}
BENCHMARK(BM_AssembleGram)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_EssStep(benchmark::State& state) {
  const Corpus c = make_corpus(static_cast<std::size_t>(state.range(0)), 10, 5, 50, 3);
  const GramBlocks g = assemble_gram(c, KernelConfig{});
  SamplerState s;
  s.f = Eigen::VectorXd::Zero(g.dim());
  s.log_lik = total_log_likelihood(s.f, c, g.layout());
  s.config = g.config();
  s.rng = Rng(4);
  for (auto _ : state) {
    s = ess_step(std::move(s), g, c);
  }
}
BENCHMARK(BM_EssStep)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace gpstruct

BENCHMARK_MAIN();
