#include "diffcd/field.hpp"
#include "diffcd/losses.hpp"
#include "diffcd/mesher.hpp"
#include "diffcd/nearest_neighbor.hpp"
#include "diffcd/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace diffcd;

FieldConfig bench_config(int width) {
    FieldConfig c;
    c.hidden_layers = 4;
    c.hidden_width = width;
    c.skip_layers = {2};
    return c;
}

Points uniform_points(int dim, Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    Points p(dim, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (int i = 0; i < dim; ++i) p(i, j) = rng.uniform(-0.5, 0.5);
    }
    return p;
}

void BM_FieldEvaluateWithGradient(benchmark::State& state) {
    auto f = MlpField::create(init_geometric(bench_config(static_cast<int>(state.range(0))), 0));
    const Points x = uniform_points(3, 4096, 1);
    Vector v;
    Points g;
    for (auto _ : state) {
        f->evaluate(x, v, &g);
        benchmark::DoNotOptimize(v.data());
    }
    state.SetItemsProcessed(state.iterations() * x.cols());
}
BENCHMARK(BM_FieldEvaluateWithGradient)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ParamGradient(benchmark::State& state) {
    auto f = MlpField::create(init_geometric(bench_config(static_cast<int>(state.range(0))), 0));
    const Points x = uniform_points(3, 2048, 2);
    const Vector w = Vector::Constant(x.cols(), 1.0 / double(x.cols()));
    const Points dirs = uniform_points(3, x.cols(), 3);
    Vector out(f->num_params());
    for (auto _ : state) {
        out.setZero();
        f->accumulate_param_grad(x, &w, &dirs, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * x.cols());
}
BENCHMARK(BM_ParamGradient)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_KdTreeBuild(benchmark::State& state) {
    const Points cloud = uniform_points(3, state.range(0), 4);
    for (auto _ : state) {
        NearestNeighborIndex index(cloud);
        benchmark::DoNotOptimize(index.size());
    }
}
BENCHMARK(BM_KdTreeBuild)->Arg(20000)->Arg(200000)->Unit(benchmark::kMillisecond);

void BM_KdTreeNearest(benchmark::State& state) {
    const NearestNeighborIndex index(uniform_points(3, state.range(0), 5));
    const Points queries = uniform_points(3, 10000, 6);
    for (auto _ : state) {
        auto nn = index.nearest_all(queries);
        benchmark::DoNotOptimize(nn.data());
    }
    state.SetItemsProcessed(state.iterations() * queries.cols());
}
BENCHMARK(BM_KdTreeNearest)->Arg(20000)->Arg(200000)->Unit(benchmark::kMillisecond);

void BM_MarchingCubesSphere(benchmark::State& state) {
    const auto sphere = AnalyticSdf::sphere(3, 0.35);
    const int res = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto mesh = marching_cubes(sphere, BoundingBox::unit(3), res);
        benchmark::DoNotOptimize(mesh.faces.data());
    }
}
BENCHMARK(BM_MarchingCubesSphere)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_MarchingCubesMlp(benchmark::State& state) {
    auto f = MlpField::create(init_geometric(bench_config(64), 0));
    for (auto _ : state) {
        auto mesh = marching_cubes(*f, BoundingBox::unit(3), static_cast<int>(state.range(0)));
        benchmark::DoNotOptimize(mesh.faces.data());
    }
}
BENCHMARK(BM_MarchingCubesMlp)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
