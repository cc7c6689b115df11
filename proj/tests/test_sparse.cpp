#include <doctest.h>

#include "symmap/dense.hpp"
#include "symmap/sparse.hpp"
#include "test_util.hpp"

using namespace symmap;
using symmap::test::to_eigen;

TEST_CASE("csr_from_triplets sums duplicates and keeps explicit zeros") {
    const std::vector<Triplet> t{{0, 1, 2.0}, {1, 0, 3.0}, {0, 1, 0.5}, {1, 1, 0.0}, {0, 0, 1.0}};
    const CsrMatrix a = csr_from_triplets(2, 2, t);
    CHECK(a.nnz() == 4);
    CHECK(a.at(0, 1) == 2.5);
    CHECK(a.at(1, 1) == 0.0);
    CHECK(a.row_cols(0)[0] == 0);
    CHECK(a.row_cols(0)[1] == 1);
    CHECK(a.diagonal() == std::vector<double>{1.0, 0.0});
}

TEST_CASE("invalid CSR arrays are rejected") {
    CHECK_THROWS_AS(CsrMatrix(2, 2, {0, 1}, {0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(CsrMatrix(2, 2, {0, 2, 2}, {1, 0}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(CsrMatrix(1, 2, {0, 1}, {2}, {1.0}), std::invalid_argument);
    const std::vector<Triplet> bad{{0, 3, 1.0}};
    CHECK_THROWS(csr_from_triplets(2, 2, bad));
}

TEST_CASE("spmv matches a dense product and the serial kernel bit for bit") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd m = symmap::test::random_sparse(rng, 37, 0.2);
        const CsrMatrix a = symmap::test::from_eigen(m);
        const auto x = symmap::test::random_vector(rng, 37);
        const auto y = spmv(a, x);
        std::vector<double> ys(37);
        spmv_serial(a, x, ys);
        CHECK(y == ys);
        CHECK(symmap::test::rel_err(to_eigen(y), m * to_eigen(x)) < 1e-14);
    }
}

TEST_CASE("transpose and multiply agree with dense algebra") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd m1 = symmap::test::random_sparse(rng, 20, 0.15);
    const Eigen::MatrixXd m2 = symmap::test::random_sparse(rng, 20, 0.15);
    const CsrMatrix a = symmap::test::from_eigen(m1), b = symmap::test::from_eigen(m2);
    CHECK((to_eigen(transpose(a)) - m1.transpose()).norm() == 0.0);
    CHECK((to_eigen(multiply(a, b)) - m1 * m2).norm() < 1e-12 * (m1 * m2).norm());
}

TEST_CASE("symmetry checks") {
    std::mt19937_64 rng(3);
    const CsrMatrix s = symmap::test::from_eigen(symmap::test::random_sparse(rng, 15, 0.3, true));
    CHECK(is_structurally_symmetric(s));
    CHECK(is_symmetric(s));
    const std::vector<Triplet> t{{0, 0, 1.0}, {0, 1, 2.0}, {1, 1, 1.0}};
    const CsrMatrix u = csr_from_triplets(2, 2, t);
    CHECK_FALSE(is_structurally_symmetric(u));
    CHECK_FALSE(is_symmetric(u));
}

TEST_CASE("to_dense respects the entry cap") {
    const CsrMatrix i = identity_csr(10);
    const DenseMatrix d = to_dense(i);
    CHECK(d == dense_identity(10));
    CHECK_THROWS_AS(to_dense(i, 99), std::length_error);
}

TEST_CASE("vector helpers") {
    const std::vector<double> x{3.0, 4.0}, y{1.0, 2.0};
    CHECK(dot(x, y) == 11.0);
    CHECK(norm2(x) == 5.0);
    std::vector<double> z = y;
    axpy(2.0, x, z);
    CHECK(z == std::vector<double>{7.0, 10.0});
}

TEST_CASE("LU solve and singular values match Eigen") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd m(12, 12);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) m(i, j) = u(rng);
    DenseMatrix d(12, 12);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) d(i, j) = m(i, j);
    const auto b = symmap::test::random_vector(rng, 12);
    const LuFactorization lu(d);
    const auto x = lu.solve(b);
    const Eigen::VectorXd want = m.partialPivLu().solve(to_eigen(b));
    CHECK(symmap::test::rel_err(to_eigen(x), want) < 1e-12);

    const auto sv = singular_values(d);
    const Eigen::VectorXd ref = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
    REQUIRE(sv.size() == 12);
    for (int k = 0; k < 12; ++k) CHECK(sv[k] == doctest::Approx(ref(k)).epsilon(1e-11));

    CHECK_THROWS_AS(LuFactorization(DenseMatrix(3, 3)), std::runtime_error);
}
