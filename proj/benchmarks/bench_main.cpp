// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "scvae/evaluation.hpp"
#include "scvae/latent_viz.hpp"
#include "scvae/synth.hpp"

namespace {

using namespace scvae;

ad::Tensor random_tensor(ad::Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  ad::Tensor t(std::move(shape));
  for (double& v : t.data()) v = u(rng);
  return t;
}

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  auto a = ad::Node::variable(random_tensor({32, n}, rng));
  auto b = ad::Node::variable(random_tensor({n, 4 * n}, rng));
  for (auto _ : state) {
    a.zero_grad();
    b.zero_grad();
    ad::backward(ad::sum(ad::matmul(a, b)));
    benchmark::DoNotOptimize(b.grad().data().data());
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(64)->Arg(128)->Arg(256);

std::vector<corpus::Example> bench_corpus() {
  corpus::SynthConfig sc;
  sc.pairs = 256;
  return corpus::synth_corpus(sc);
}

struct Fixture {
  std::vector<corpus::Example> data = bench_corpus();
  corpus::Vocabulary vocab = training::build_vocabulary(data);
  nets::Model model;
  nets::Batch batch;

  explicit Fixture(nets::ModelKind kind)
      : model(kind, training::model_dims({}, vocab, corpus::Inventories::standard()), 1) {
    std::vector<const corpus::Example*> ptrs;
    for (std::size_t i = 0; i < 32; ++i) ptrs.push_back(&data[i]);
    batch = nets::make_batch(ptrs, vocab, corpus::Inventories::standard());
  }
};

void BM_DecoderStep(benchmark::State& state) {
  Fixture f(nets::ModelKind::kScvae);
  ad::NoGradGuard guard;
  const std::vector<int> ids(32, corpus::Vocabulary::kSos);
  for (auto _ : state) {
    auto s = f.model.initial_state(nullptr, f.batch.da);
    benchmark::DoNotOptimize(f.model.decode_step(s, ids).value().data().data());
  }
}
BENCHMARK(BM_DecoderStep);

void BM_TrainStep(benchmark::State& state) {
  const auto kind = state.range(0) ? nets::ModelKind::kScvae : nets::ModelKind::kSclstm;
  Fixture f(kind);
  training::Adam adam(f.model.params(), {});
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  ad::Tensor noise({32, f.model.dims().latent});
  for (double& v : noise.data()) v = normal(rng);
  for (auto _ : state) {
    f.model.params().zero_gradients();
    const auto loss = training::model_loss(f.model, f.batch, noise, 0.5);
    ad::backward(loss.total);
    adam.step();
  }
  state.SetItemsProcessed(state.iterations() * 32);
  state.SetLabel(std::string(nets::model_kind_name(kind)));
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Generate(benchmark::State& state) {
  Fixture f(nets::ModelKind::kScvae);
  const training::Checkpoint ckpt{std::move(f.model), f.vocab, corpus::Inventories::standard(), {}, 0};
  generation::GenerationRequest req;
  req.sr = f.data[0].sr;
  req.max_length = 30;
  for (auto _ : state) benchmark::DoNotOptimize(generation::generate(ckpt, req).size());
}
BENCHMARK(BM_Generate)->Unit(benchmark::kMillisecond);

void BM_Pca(benchmark::State& state) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(state.range(0), 128);
  for (auto _ : state) benchmark::DoNotOptimize(viz::pca_project(x, 2).projected.data());
}
BENCHMARK(BM_Pca)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
