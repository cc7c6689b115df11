// Parallel kernels against their serial references. Run with
// OMP_NUM_THREADS set to compare thread counts.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "symmap/expr.hpp"
#include "symmap/parallel.hpp"
#include "symmap/problems.hpp"
#include "symmap/sparse.hpp"

using namespace symmap;

namespace {

std::vector<double> ones(std::size_t n) { return std::vector<double>(n, 1.0); }

void BM_spmv_serial(benchmark::State& st) {
    const CsrMatrix a = laplacian_5pt(static_cast<int>(st.range(0)));
    const auto x = ones(static_cast<std::size_t>(a.ncols()));
    std::vector<double> y(static_cast<std::size_t>(a.nrows()));
    for (auto _ : st) {
        spmv_serial(a, x, y);
        benchmark::DoNotOptimize(y.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<long>(a.nnz()));
}

void BM_spmv_parallel(benchmark::State& st) {
    const CsrMatrix a = laplacian_5pt(static_cast<int>(st.range(0)));
    const auto x = ones(static_cast<std::size_t>(a.ncols()));
    std::vector<double> y(static_cast<std::size_t>(a.nrows()));
    for (auto _ : st) {
        spmv(a, x, y);
        benchmark::DoNotOptimize(y.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<long>(a.nnz()));
    st.counters["threads"] = max_threads();
}

struct ScoreFixture {
    std::vector<Expression> exprs;
    FitData data;

    ScoreFixture() {
        std::mt19937_64 rng(1);
        const Library lib = Library::standard(2);
        for (int k = 0; k < 64; ++k) exprs.push_back(sample_uniform_expression(lib, rng));
        std::uniform_real_distribution<double> u(0.0, 2.0);
        std::vector<std::vector<double>> rows;
        std::vector<double> y;
        for (int i = 0; i < 200; ++i) {
            const double a = u(rng), b = u(rng);
            rows.push_back({a, b});
            y.push_back(1.0 + 1.0 / (a + 1.2) + 0.1 * b);
        }
        data = make_fit_data(rows, y);
    }
};

void BM_score_batch_serial(benchmark::State& st) {
    const ScoreFixture f;
    for (auto _ : st) benchmark::DoNotOptimize(score_batch_serial(f.exprs, f.data));
    st.SetItemsProcessed(st.iterations() * static_cast<long>(f.exprs.size()));
}

void BM_score_batch_parallel(benchmark::State& st) {
    const ScoreFixture f;
    for (auto _ : st) benchmark::DoNotOptimize(score_batch(f.exprs, f.data));
    st.SetItemsProcessed(st.iterations() * static_cast<long>(f.exprs.size()));
    st.counters["threads"] = max_threads();
}

} // namespace

BENCHMARK(BM_spmv_serial)->Arg(64)->Arg(200);
BENCHMARK(BM_spmv_parallel)->Arg(64)->Arg(200);
BENCHMARK(BM_score_batch_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_score_batch_parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
