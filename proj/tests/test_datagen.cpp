#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "symmap/datagen.hpp"
#include "symmap/problems.hpp"

using namespace symmap;
namespace fs = std::filesystem;

namespace {

const ParamRange kOmega{0.0, 2.0, true, true};

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "symmap_test_datagen";
    fs::create_directories(d);
    return d / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_CASE("objective and search names round trip") {
    for (ObjectiveKind k : {ObjectiveKind::Time, ObjectiveKind::Iterations, ObjectiveKind::ConditionNumber,
                            ObjectiveKind::Hybrid})
        CHECK(parse_objective_kind(to_string(k)) == k);
    CHECK(parse_objective_kind("iterations") == ObjectiveKind::Iterations);
    CHECK(parse_search_method("binary") == SearchMethod::Binary);
    CHECK_THROWS_AS(parse_objective_kind("speed"), std::invalid_argument);
    Objective h;
    h.kind = ObjectiveKind::Hybrid;
    h.w_time = 0.0;
    CHECK_THROWS_AS(h.validate(), std::invalid_argument);
    h.w_cond = 1.0;
    CHECK(h.deterministic());
    CHECK_FALSE(Objective{ObjectiveKind::Time}.deterministic());
}

TEST_CASE("adaptive grid search locates a smooth minimum to the fine step") {
    const ScalarObjective f = [](double w) -> std::optional<double> { return (w - 1.2345) * (w - 1.2345); };
    const SearchResult r = adaptive_grid_search(f, kOmega, 0.05, 0.001);
    CHECK(std::abs(r.param - 1.2345) <= 0.0005 + 1e-12);
    CHECK_FALSE(r.used_fallback);
    for (std::size_t i = 1; i < r.evaluated.size(); ++i) CHECK(r.evaluated[i - 1].param < r.evaluated[i].param);
    for (const SearchPoint& p : r.evaluated) CHECK(kOmega.contains(p.param));
}

TEST_CASE("grid search breaks ties toward the smaller parameter") {
    const ScalarObjective flat = [](double w) -> std::optional<double> { return w < 0.5 ? 2.0 : 1.0; };
    const SearchResult r = adaptive_grid_search(flat, kOmega, 0.05, 0.01);
    CHECK(r.param == doctest::Approx(0.5));
}

TEST_CASE("infeasible points are penalized and all-infeasible throws") {
    const ScalarObjective f = [](double w) -> std::optional<double> {
        if (w > 1.5) return std::nullopt;
        return std::abs(w - 1.0);
    };
    const SearchResult r = adaptive_grid_search(f, kOmega, 0.1, 0.01);
    CHECK(r.param == doctest::Approx(1.0));
    bool saw_penalty = false;
    for (const SearchPoint& p : r.evaluated)
        if (!p.feasible) {
            saw_penalty = true;
            CHECK(std::isfinite(p.value));
            CHECK(p.value >= kPenaltyFactor * 0.5 - 1e-12);
        }
    CHECK(saw_penalty);
    const ScalarObjective none = [](double) -> std::optional<double> { return std::nullopt; };
    CHECK_THROWS_AS(adaptive_grid_search(none, kOmega), NoFeasibleParameter);
}

TEST_CASE("binary search brackets a unimodal minimum") {
    int calls = 0;
    const ScalarObjective f = [&](double w) -> std::optional<double> {
        ++calls;
        return std::abs(w - 1.61);
    };
    const SearchResult r = binary_search_min(f, kOmega, 0.001);
    CHECK(std::abs(r.param - 1.61) < 0.002);
    CHECK_FALSE(r.used_fallback);
    CHECK(calls < 60);
}

TEST_CASE("binary search falls back to the grid when both ends win") {
    const ScalarObjective f = [](double w) -> std::optional<double> { return -std::abs(w - 1.0) + (w > 1 ? 0.1 : 0.0); };
    const SearchResult r = binary_search_min(f, kOmega, 0.001);
    CHECK(r.used_fallback);
    CHECK(r.param < 0.1);
}

TEST_CASE("product grid search in two parameters") {
    const PairObjective f = [](double a, double b) -> std::optional<double> {
        return (a - 0.33) * (a - 0.33) + (b - 1.47) * (b - 1.47);
    };
    const SearchResult r = product_grid_search(f, {0.0, 1.0, false, true}, kOmega, 0.05, 0.001);
    CHECK(std::abs(r.param - 0.33) <= 0.001);
    CHECK(std::abs(r.param2 - 1.47) <= 0.001);
}

TEST_CASE("search range is clipped to the legal range") {
    const ParamRange r = search_range(PrecondKind::Sor, -1.0, 3.0);
    CHECK(r.lo == 0.0);
    CHECK(r.hi == 2.0);
    CHECK(r.lo_open);
    CHECK(r.hi_open);
    const ParamRange s = search_range(PrecondKind::Sor, 0.5, 1.5);
    CHECK_FALSE(s.lo_open);
    CHECK_THROWS_AS(search_range(PrecondKind::Jacobi, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("search_instance on a model problem finds the iteration optimum near 1.69") {
    ProblemInstance p;
    p.a = laplacian_5pt(16);
    p.b.assign(256, 1.0);
    EvalSettings s;
    s.precond.kind = PrecondKind::Sor;
    s.solver.method = SolverMethod::Richardson;
    s.solver.tolerance = 1e-6;
    s.solver.max_iters = 2000;
    SearchConfig c;
    const SearchResult r = search_instance(p, s, c);
    CHECK(std::abs(r.param - 2.0 / (1.0 + std::sin(3.14159265358979 / 17.0))) < 0.05);
}

TEST_CASE("default split ratio and seeded assignment") {
    CHECK(default_train_count(6) == 5);
    CHECK(default_train_count(250) == 208);
    CHECK(default_train_count(1) == 1);
    ParamDataset ds;
    ds.rows.resize(30, DatasetRow{{0.0}, {1.0}, 0.0});
    assign_split(ds, 3);
    CHECK(ds.train.size() == 25);
    CHECK(ds.test.size() == 5);
    ParamDataset again = ds;
    assign_split(again, 3);
    CHECK(again.train == ds.train);
    std::set<std::size_t> all(ds.train.begin(), ds.train.end());
    all.insert(ds.test.begin(), ds.test.end());
    CHECK(all.size() == 30);
    CHECK(std::is_sorted(ds.train.begin(), ds.train.end()));
    assign_split(ds, 3, 10);
    CHECK(ds.test.size() == 10);
    assign_split(ds, 3, 0);
    CHECK(ds.test.empty());
}

TEST_CASE("dataset build, CSV and sidecar round trip") {
    const auto problems = generate_problems(Family::Poisson, 6, 6, 12);
    DatasetConfig cfg;
    cfg.eval.precond.kind = PrecondKind::Sor;
    cfg.eval.solver.method = SolverMethod::Gmres;
    cfg.search.coarse_step = 0.1;
    cfg.search.fine_step = 0.01;
    cfg.seed = 4;
    const ParamDataset ds = build_dataset(problems, cfg);
    REQUIRE(ds.rows.size() == 6);
    CHECK(ds.feature_names.size() == 8);
    CHECK(ds.train.size() + ds.test.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(ds.rows[i].features == problems[i].features);

    const fs::path csv = scratch("d.csv");
    write_dataset(csv.string(), ds);
    CHECK(fs::exists(dataset_meta_path(csv.string())));
    const std::string text = slurp(csv);
    CHECK(text.rfind("x1,x2,x3,x4,x5,x6,x7,x8,y,objective_value\n", 0) == 0);
    const ParamDataset back = read_dataset(csv.string());
    REQUIRE(back.rows.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(back.rows[i].features == ds.rows[i].features);
        CHECK(back.rows[i].targets == ds.rows[i].targets);
        CHECK(back.rows[i].objective_value == ds.rows[i].objective_value);
    }
    CHECK(back.train == ds.train);
    CHECK(back.test == ds.test);
    CHECK(back.precond == "sor");

    // serial and parallel builds agree
    DatasetConfig serial = cfg;
    serial.jobs = 1;
    const fs::path csv2 = scratch("d_serial.csv");
    write_dataset(csv2.string(), build_dataset(problems, serial));
    CHECK(slurp(csv2) == text);

    // no sidecar: everything is training data
    fs::remove(dataset_meta_path(csv.string()));
    const ParamDataset bare = read_dataset(csv.string());
    CHECK(bare.train.size() == 6);
    CHECK(bare.test.empty());
}

TEST_CASE("malformed dataset files are rejected") {
    const fs::path p = scratch("bad.csv");
    {
        std::ofstream(p) << "a,b,c\n1,2,3\n";
    }
    CHECK_THROWS(read_dataset_csv(p.string()));
    {
        std::ofstream(p) << "x1,y,objective_value\n1,2\n";
    }
    CHECK_THROWS(read_dataset_csv(p.string()));
    {
        std::ofstream(p) << "x1,y,objective_value\n1,abc,3\n";
    }
    CHECK_THROWS(read_dataset_csv(p.string()));
    CHECK_THROWS(read_dataset_csv((fs::temp_directory_path() / "symmap_missing.csv").string()));
}
