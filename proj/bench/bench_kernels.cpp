// Parallel kernels against the serial reference versions.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "qcm/harness/build.hpp"
#include "qcm/harness/random.hpp"
#include "qcm/ops/kernels.hpp"
#include "qcm/sim/simulator.hpp"

using namespace qcm;

namespace {

struct Case {
    std::vector<std::size_t> dims;
    Matrix rho;
    Matrix op;
};

// S, B and `n` ancilla-sized factors; the operator acts on S and the last factor
Case make_case(std::size_t n) {
    random::Rng rng(17);
    Case c;
    c.dims = {2, 4};
    for (std::size_t i = 0; i < n; ++i) c.dims.push_back(3);
    std::size_t d = 1;
    for (auto x : c.dims) d *= x;
    c.rho = random::density(d, rng);
    c.op = random::unitary(2 * 3, rng);
    return c;
}

const std::vector<std::size_t> kKeep{0, 1};

template <bool Parallel>
void BM_PartialTrace(benchmark::State& st) {
    const auto c = make_case(std::size_t(st.range(0)));
    for (auto _ : st) {
        Matrix r = Parallel ? kernels::partial_trace(c.rho, c.dims, kKeep) : kernels::serial::partial_trace(c.rho, c.dims, kKeep);
        benchmark::DoNotOptimize(r.data());
    }
    st.counters["dim"] = double(c.rho.rows());
}

template <bool Parallel>
void BM_Sandwich(benchmark::State& st) {
    const auto c = make_case(std::size_t(st.range(0)));
    const std::vector<std::size_t> pos{0, c.dims.size() - 1};
    for (auto _ : st) {
        Matrix r = Parallel ? kernels::sandwich(c.rho, c.dims, pos, c.op, c.op)
                            : kernels::serial::sandwich(c.rho, c.dims, pos, c.op, c.op);
        benchmark::DoNotOptimize(r.data());
    }
    st.counters["dim"] = double(c.rho.rows());
}

template <bool Parallel>
void BM_Permute(benchmark::State& st) {
    const auto c = make_case(std::size_t(st.range(0)));
    std::vector<std::size_t> order(c.dims.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
    for (auto _ : st) {
        Matrix r = Parallel ? kernels::permute(c.rho, c.dims, order) : kernels::serial::permute(c.rho, c.dims, order);
        benchmark::DoNotOptimize(r.data());
    }
    st.counters["dim"] = double(c.rho.rows());
}

// whole run of a random three-step scenario
void BM_Simulate(benchmark::State& st) {
    harness::RandomScenarioOptions opt;
    opt.max_steps = 3;
    const auto s = harness::random_scenario(7, opt);
    const auto model = harness::build_model(s);
    for (auto _ : st) {
        auto res = sim::simulate(model, s.report_times);
        benchmark::DoNotOptimize(res.snapshots.data());
    }
    st.counters["threads"] = omp_get_max_threads();
}

}  // namespace

BENCHMARK(BM_PartialTrace<false>)->Name("partial_trace/serial")->DenseRange(1, 4);
BENCHMARK(BM_PartialTrace<true>)->Name("partial_trace/parallel")->DenseRange(1, 4);
BENCHMARK(BM_Sandwich<false>)->Name("sandwich/serial")->DenseRange(1, 4);
BENCHMARK(BM_Sandwich<true>)->Name("sandwich/parallel")->DenseRange(1, 4);
BENCHMARK(BM_Permute<false>)->Name("permute/serial")->DenseRange(1, 4);
BENCHMARK(BM_Permute<true>)->Name("permute/parallel")->DenseRange(1, 4);
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
