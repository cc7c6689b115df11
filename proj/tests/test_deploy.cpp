#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "symmap/deploy.hpp"
#include "symmap/problems.hpp"

using namespace symmap;

namespace {

BenchConfig sor_bench() {
    BenchConfig c;
    c.precond.kind = PrecondKind::Sor;
    c.solver.method = SolverMethod::Gmres;
    c.solver.tolerance = 1e-7;
    c.optimal_step = 0.1;
    return c;
}

} // namespace

TEST_CASE("predict_param") {
    const std::vector<double> f{0.0, 0.0};
    CHECK(predict_param(ParamPolicy::fixed(1.0), PrecondKind::Sor, f) == 1.0);
    CHECK(predict_param(ParamPolicy::default_param(), PrecondKind::Sor, f) == 1.0);
    CHECK(predict_param(ParamPolicy::default_param(), PrecondKind::Amg, f) == 0.0);
    const ParamPolicy learned = ParamPolicy::symbolic(parse_infix("(1.0 + (1.0 / (x2 + 1.2)))"));
    CHECK(predict_param(learned, PrecondKind::Sor, f) == doctest::Approx(1.0 + 1.0 / 1.2));
    CHECK(predict_param(ParamPolicy::symbolic(parse_infix("(x1 + 2.3)")), PrecondKind::Sor, f) == 1.95);
    CHECK(predict_param(ParamPolicy::symbolic(parse_infix("(x1 - 2.3)")), PrecondKind::Sor, f) == 0.05);
    CHECK(predict_param(ParamPolicy::symbolic(parse_infix("(x1 + 2.3)")), PrecondKind::Amg, f) == 0.95);
    // invalid output falls back to the default
    CHECK(predict_param(ParamPolicy::symbolic(parse_infix("log(x1)")), PrecondKind::Sor, f) == 1.0);
    CHECK(predict_param(ParamPolicy::symbolic(parse_infix("log(x1)")), PrecondKind::Amg, f) == 0.0);
    // missing feature also falls back
    CHECK(predict_param(ParamPolicy::symbolic(parse_infix("(x3 + 1.0)")), PrecondKind::Sor, f) == 1.0);
    const ParamPolicy table = ParamPolicy::per_instance_optimal({1.3, 1.7});
    CHECK(predict_param(table, PrecondKind::Sor, f, 1) == 1.7);
    CHECK_THROWS_AS(predict_param(table, PrecondKind::Sor, f, 2), std::out_of_range);
}

TEST_CASE("predict_param never leaves the clamp range") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    const Library lib = Library::standard(3);
    std::vector<ParamPolicy> pols;
    for (int k = 0; k < 50; ++k) {
        Expression e = sample_uniform_expression(lib, rng);
        for (double& c : e.constants) c = u(rng);
        pols.push_back(ParamPolicy::symbolic(e));
    }
    for (int k = 0; k < 100000; ++k) {
        const std::vector<double> x{u(rng), u(rng), u(rng)};
        const ParamPolicy& p = pols[static_cast<std::size_t>(k) % pols.size()];
        for (PrecondKind kind : {PrecondKind::Sor, PrecondKind::Ssor, PrecondKind::Amg}) {
            const double v = predict_param(p, kind, x);
            const ClampRange r = clamp_range(kind);
            REQUIRE(v >= r.lo);
            REQUIRE(v <= r.hi);
        }
    }
}

TEST_CASE("bench rows: shape, aliasing and the per-instance lower bound") {
    const auto problems = generate_problems(Family::Elliptic, 10, 6, 3);
    BenchConfig cfg = sor_bench();
    std::vector<double> best;
    EvalSettings s;
    s.precond = cfg.precond;
    s.solver = cfg.solver;
    s.repeats = 1;
    SearchConfig sc;
    sc.lo = 0.05;
    sc.hi = 1.95;
    sc.coarse_step = 0.1;
    sc.fine_step = 0.01;
    for (const auto& p : problems) best.push_back(search_instance(p, s, sc).param);

    const std::vector<ParamPolicy> pols{ParamPolicy::none(),          ParamPolicy::default_param(),
                                        ParamPolicy::fixed(1.0),       ParamPolicy::fixed(1.6),
                                        ParamPolicy::optimal_constant(), ParamPolicy::per_instance_optimal(best)};
    const BenchReport rep = bench_compare(problems, pols, cfg);
    REQUIRE(rep.rows.size() == pols.size());
    CHECK(rep.cells.size() == pols.size() * problems.size());
    for (const BenchRow& r : rep.rows) CHECK(r.n == problems.size());
    CHECK(rep.rows[1].mean_iters == rep.rows[2].mean_iters);
    CHECK(rep.rows[0].policy == "none");
    const double lower = rep.rows[5].mean_iters;
    for (std::size_t k = 1; k < 5; ++k) CHECK(lower <= rep.rows[k].mean_iters);
    CHECK(rep.optimal_constant > 0.0);
    CHECK(rep.rows[4].mean_iters <= rep.rows[3].mean_iters);
    CHECK(rep.rows[4].mean_iters <= rep.rows[1].mean_iters);
    for (const BenchRow& r : rep.rows) {
        CHECK(r.q1 <= r.median_time);
        CHECK(r.median_time <= r.q3);
    }

    const auto path = (std::filesystem::temp_directory_path() / "symmap_bench.csv").string();
    write_bench_csv(path, rep);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "policy,n,mean_time_s,median_time_s,q1,q3,var,mean_iters,mean_cond,n_failed");
    int lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    CHECK(lines == 6);
}

TEST_CASE("failed cells are counted and kept out of time statistics") {
    const auto problems = generate_problems(Family::Elliptic, 12, 3, 5);
    BenchConfig cfg = sor_bench();
    cfg.solver.max_iters = 2;
    const BenchReport rep = bench_compare(problems, {ParamPolicy::default_param()}, cfg);
    CHECK(rep.rows[0].n_failed == 3);
    CHECK(rep.rows[0].mean_time == 0.0);
    CHECK(rep.rows[0].mean_iters == 2.0);
}

TEST_CASE("bench input validation") {
    const auto problems = generate_problems(Family::Poisson, 4, 2, 1);
    CHECK_THROWS_AS(bench_compare({}, {ParamPolicy::none()}, sor_bench()), std::invalid_argument);
    CHECK_THROWS_AS(bench_compare(problems, {}, sor_bench()), std::invalid_argument);
    CHECK_THROWS_AS(bench_compare(problems, {ParamPolicy::per_instance_optimal({1.0})}, sor_bench()),
                    std::invalid_argument);
    BenchConfig jac = sor_bench();
    jac.precond.kind = PrecondKind::Jacobi;
    CHECK_THROWS_AS(bench_compare(problems, {ParamPolicy::default_param()}, jac), std::invalid_argument);
}
