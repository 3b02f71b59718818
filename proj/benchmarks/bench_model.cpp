#include <benchmark/benchmark.h>

#include "kan/basis.hpp"
#include "kan/data.hpp"
#include "kan/loss.hpp"
#include "kan/model.hpp"

namespace {

void BasisJetCubic(benchmark::State& state) {
    const kan::BasisSpec spec = kan::BasisSpec::cubic_bspline(static_cast<int>(state.range(0)));
    double v = -0.97;
    for (auto _ : state) {
        const kan::BasisJet jet = kan::basis_jet_local(spec, v);
        benchmark::DoNotOptimize(jet);
        v += 1e-4;
        if (v > 1.0) v = -1.0;
    }
}
BENCHMARK(BasisJetCubic)->Arg(4)->Arg(8)->Arg(16);

void BatchLossGrad(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    kan::SyntheticConfig cfg;
    cfg.n = 2000;
    cfg.d = 10;
    cfg.seed = 1;
    const kan::SampleSet data = kan::gen_synthetic(cfg);
    const kan::ModelSpec spec = kan::ModelSpec::make(cfg.d, m, 8);
    const kan::ParamVector params = kan::init_params(spec, 1);
    for (auto _ : state) {
        const kan::BatchLoss bl = kan::batch_loss(spec, params, data, true);
        benchmark::DoNotOptimize(bl.risk);
    }
    state.SetItemsProcessed(state.iterations() * cfg.n);
}
BENCHMARK(BatchLossGrad)->Arg(8)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void ForwardSingle(benchmark::State& state) {
    const kan::ModelSpec spec = kan::ModelSpec::make(10, static_cast<int>(state.range(0)), 8);
    const kan::ParamVector params = kan::init_params(spec, 3);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(10, 0.1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(kan::forward(spec, params, x));
    }
}
BENCHMARK(ForwardSingle)->Arg(32)->Arg(256);

} // namespace

BENCHMARK_MAIN();
