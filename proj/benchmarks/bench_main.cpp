#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "jmlab/intersect.hpp"
#include "jmlab/jacobi.hpp"
#include "jmlab/orbits.hpp"
#include "jmlab/perturb.hpp"

using namespace jmlab;
using Eigen::VectorXd;

namespace {

OscillatorSpec osc3() { return OscillatorSpec({1.0, std::sqrt(2.0), std::sqrt(3.0)}, 0.5); }

void BM_ExprDual(benchmark::State& st) {
    Expr e = parse("sin(x1*x2) + exp(0.3*cos(x3)) / (2 + x1^2) + sqrt(2 + sin(x2 - x3))", 3);
    std::vector<double> p{0.3, -0.7, 1.1, 0, 0, 0};
    int dirs[] = {0, 1, 2};
    for (auto _ : st) benchmark::DoNotOptimize(eval_dual(e, p, dirs, 1));
}
BENCHMARK(BM_ExprDual);

void BM_IntegrateOscillator(benchmark::State& st) {
    SystemSpec sys = oscillator_system(osc3());
    VectorXd x(3), v(3);
    x << 0.3, 0.2, -0.1;
    v << 0.5, -0.3, 0.4;
    for (auto _ : st) benchmark::DoNotOptimize(integrate(sys, x, v, 0.0, 100.0, {1e-10, 1e-12}));
}
BENCHMARK(BM_IntegrateOscillator)->Unit(benchmark::kMillisecond);

void BM_IntegrateFinsler(benchmark::State& st) {
    SystemSpec sys(MetricModel::finsler(parse("v1^2 + v2^2 + 0.1*sqrt(v1^4 + v2^4)", 2)), parse("0.5*x1^2 + x2^2", 2), 0.5);
    VectorXd x(2), v(2);
    x << 0.5, 0.0;
    v << 0.0, 0.7;
    for (auto _ : st) benchmark::DoNotOptimize(integrate(sys, x, v, 0.0, 20.0, {1e-10, 1e-12}));
}
BENCHMARK(BM_IntegrateFinsler)->Unit(benchmark::kMillisecond);

void BM_FindBrake(benchmark::State& st) {
    auto osc = osc3();
    SystemSpec sys = oscillator_system(osc);
    VectorXd seed = VectorXd::Zero(3);
    seed[1] = 1.03 * brake_amplitude(osc, 1);
    seed[0] = 0.01;
    for (auto _ : st) benchmark::DoNotOptimize(find_brake(sys, seed));
}
BENCHMARK(BM_FindBrake)->Unit(benchmark::kMillisecond);

void BM_Monodromy(benchmark::State& st) {
    auto osc = osc3();
    SystemSpec sys = oscillator_system(osc);
    VectorXd seed = VectorXd::Zero(3);
    seed[0] = brake_amplitude(osc, 0);
    PeriodicOrbit o = find_brake(sys, seed);
    for (auto _ : st) benchmark::DoNotOptimize(monodromy(sys, o));
}
BENCHMARK(BM_Monodromy)->Unit(benchmark::kMillisecond);

void BM_SelfIntersections(benchmark::State& st) {
    OscillatorSpec osc({1.0, 2.0}, 0.5, Resonance{1.0, {1, 2}});
    SystemSpec sys = oscillator_system(osc);
    PeriodicOrbit o = make_periodic_orbit(sys, lissajous_state(osc, std::sqrt(0.5), std::sqrt(0.125), std::numbers::pi / 4, 0.0),
                                          lissajous_period(osc), OrbitKind::Rotation);
    for (auto _ : st) benchmark::DoNotOptimize(self_intersections(o));
}
BENCHMARK(BM_SelfIntersections)->Unit(benchmark::kMillisecond);

void BM_Correspondence(benchmark::State& st) {
    SystemSpec sys = oscillator_system(osc3());
    VectorXd x(3), v(3);
    x << 0.3, 0.2, -0.1;
    v << 0.5, -0.3, 0.4;
    v *= std::sqrt(2.0 * (0.5 - sys.potential_value<double>({x.data(), 3})) / v.squaredNorm());
    for (auto _ : st) benchmark::DoNotOptimize(correspondence_check(sys, x, v, 1.0));
}
BENCHMARK(BM_Correspondence)->Unit(benchmark::kMillisecond);

void BM_PerturbPipeline(benchmark::State& st) {
    for (auto _ : st) {
        auto rc = planar_crossing_case(0.05);
        benchmark::DoNotOptimize(check_perturbation(rc.sys, rc.pert, 1000));
        benchmark::DoNotOptimize(verify_removal(rc.sys, rc.pert, rc.other));
    }
}
BENCHMARK(BM_PerturbPipeline)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
