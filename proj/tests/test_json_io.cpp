#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "symmap/json_io.hpp"

using namespace symmap;
namespace fs = std::filesystem;

TEST_CASE("matrix JSON uses triplets") {
    const std::vector<Triplet> t{{0, 0, 2.0}, {0, 2, -1.5}, {1, 1, 1e-300}, {2, 0, 0.1}};
    const CsrMatrix a = csr_from_triplets(3, 3, t);
    const json j = matrix_to_json(a);
    CHECK(j["nrows"] == 3);
    CHECK(j["triplets"].size() == 4);
    CHECK(j["triplets"][1] == json::array({0, 2, -1.5}));
    CHECK(matrix_from_json(j) == a);
    CHECK(matrix_from_json(json::parse(j.dump())) == a);
    CHECK_THROWS(matrix_from_json(json::parse(R"({"nrows":2,"ncols":2,"triplets":[[0,5,1.0]]})")));
    CHECK_THROWS(matrix_from_json(json::parse(R"({"nrows":2,"ncols":2,"triplets":[[0,1]]})")));
}

TEST_CASE("problem JSONL round trips bit for bit") {
    const auto problems = generate_problems(Family::Darcy, 5, 3, 8);
    const auto path = (fs::temp_directory_path() / "symmap_problems.jsonl").string();
    write_problems_jsonl(path, problems);
    const auto back = read_problems_jsonl(path);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].family == Family::Darcy);
        CHECK(back[i].features == problems[i].features);
        CHECK(back[i].a == problems[i].a);
        CHECK(back[i].b == problems[i].b);
        CHECK(back[i].grid_n == 5);
        CHECK(back[i].seed == problems[i].seed);
    }
    std::ifstream in(path);
    int lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    CHECK(lines == 3);

    {
        std::ofstream bad(path);
        bad << problem_to_json(problems[0]).dump() << "\n{\"family\":\"darcy\"}\n";
    }
    try {
        read_problems_jsonl(path);
        FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
}

TEST_CASE("preconditioner JSON") {
    PrecondConfig sor;
    sor.kind = PrecondKind::Sor;
    sor.omega = 1.37;
    sor.sweeps = 2;
    const json j = precond_to_json(sor);
    CHECK(j.dump() == R"({"kind":"sor","omega":1.37,"sweeps":2})");
    const PrecondConfig back = precond_from_json(j);
    CHECK(back.kind == PrecondKind::Sor);
    CHECK(back.omega == 1.37);
    CHECK(back.sweeps == 2);

    PrecondConfig amg;
    amg.kind = PrecondKind::Amg;
    amg.theta = 0.25;
    CHECK(precond_to_json(amg).dump() == R"({"kind":"amg","theta":0.25,"smoother":"jacobi"})");
    CHECK(precond_from_json(precond_to_json(amg)).theta == 0.25);
    CHECK(precond_to_json(PrecondConfig{}).dump() == R"({"kind":"none"})");
    CHECK_THROWS_AS(precond_from_json(json::parse(R"({"kind":"sor","omega":2.5})")), std::invalid_argument);
}

TEST_CASE("expression JSON") {
    const Expression e = parse_infix("(1.0 + (1.0 / (x2 + 1.2)))");
    const json j = expression_to_json(e);
    CHECK(j["tokens"] == json::array({0, 8, 3, 8, 0, 11, 9}));
    CHECK(j["constants"] == json::array({1.2}));
    CHECK(j["infix"] == "(1.0 + (1.0 / (x2 + 1.2)))");
    CHECK(expression_from_json(json::parse(j.dump())) == e);
    CHECK_THROWS(expression_from_json(json::parse(R"({"tokens":[0,10],"constants":[]})")));
    CHECK_THROWS(expression_from_json(json::parse(R"({"tokens":[0,10,9],"constants":[]})")));
}
