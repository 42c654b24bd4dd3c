#include <benchmark/benchmark.h>

#include <random>

#include "rigidlab/directions.hpp"
#include "rigidlab/expr.hpp"
#include "rigidlab/funceq.hpp"
#include "rigidlab/nn_index.hpp"
#include "rigidlab/rigidity.hpp"

using namespace rigidlab;

namespace {

std::vector<Eigen::Vector3d> sphere_points(std::size_t n) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(n);
    while (pts.size() < n) {
        Eigen::Vector3d v{u(rng), u(rng), u(rng)};
        double norm = v.norm();
        if (norm < 1e-3 || norm > 1.0) continue;
        pts.push_back(v / norm);
    }
    return pts;
}

void BM_parse(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(parse("2+3*abs(x-1)^0.5-sin(y)/(1+x^2)"));
}
BENCHMARK(BM_parse);

void BM_eval(benchmark::State& state) {
    Expression e = parse("2+3*abs(x-1)^0.5-sin(y)/(1+x^2)");
    double x = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(e.eval(x, -0.3));
        x += 1e-6;
    }
}
BENCHMARK(BM_eval);

void BM_psi(benchmark::State& state) {
    UnitVec3 v{0.3, -0.4, 0.866};
    for (auto _ : state) benchmark::DoNotOptimize(psi(2.0, v));
}
BENCHMARK(BM_psi);

void BM_sample_direction_set(benchmark::State& state) {
    ScalarField f = make_field("x^2-y", 2);
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(sample_direction_set(f, Box{-2, 2, -2, 2}, n, 1));
}
BENCHMARK(BM_sample_direction_set)->Arg(100)->Arg(400);

void BM_estimate_profile(benchmark::State& state) {
    DirectionSet ds = sample_direction_set(make_field("x^2-y", 2), Box{-2, 2, -2, 2}, 500, 1);
    for (auto _ : state) benchmark::DoNotOptimize(estimate_profile(ds, 360));
}
BENCHMARK(BM_estimate_profile);

void BM_nn_query(benchmark::State& state) {
    auto pts = sphere_points(static_cast<std::size_t>(state.range(0)));
    NearestNeighborIndex index;
    index.build(pts);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto _ : state) {
        Eigen::Vector3d q{u(rng), u(rng), u(rng)};
        benchmark::DoNotOptimize(index.nearest(q));
    }
}
BENCHMARK(BM_nn_query)->Arg(10000)->Arg(1000000);

void BM_funceq_residual(benchmark::State& state) {
    FuncEqSystem sys{{{4.0, 0.5, -3.0, 1.0}}, make_field("2+3*abs(x-1)^0.5", 1),
                     GridSpec{-10, 10, 512}};
    for (auto _ : state) benchmark::DoNotOptimize(residual(sys));
}
BENCHMARK(BM_funceq_residual);

void BM_find_isometry_plane(benchmark::State& state) {
    auto f = std::make_shared<const ScalarField>(make_field("1+2*x+3*y", 2));
    GraphCloud source = sample_graph(f, 1.0, Box{-5, 5, -5, 5}, 400, 1);
    GraphCloud target = sample_graph(f, 2.0, Box{-5, 5, -5, 5}, 400, 2);
    for (auto _ : state) benchmark::DoNotOptimize(find_isometry(source, target));
}
BENCHMARK(BM_find_isometry_plane);

}  // namespace

BENCHMARK_MAIN();
