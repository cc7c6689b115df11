#include <doctest.h>

#include "symmap/krylov.hpp"
#include "symmap/precond.hpp"
#include "symmap/problems.hpp"
#include "test_util.hpp"

using namespace symmap;
using symmap::test::from_eigen;
using symmap::test::rel_err;
using symmap::test::to_eigen;

namespace {

// z = M^{-1} r for one SOR sweep from zero, M = (D + wL) / w
Eigen::VectorXd sor_oracle(const Eigen::MatrixXd& a, const Eigen::VectorXd& r, double w) {
    const Eigen::MatrixXd d = a.diagonal().asDiagonal();
    const Eigen::MatrixXd l = a.triangularView<Eigen::StrictlyLower>();
    const Eigen::MatrixXd m = (d + w * l) / w;
    return m.partialPivLu().solve(r);
}

Eigen::VectorXd ssor_oracle(const Eigen::MatrixXd& a, const Eigen::VectorXd& r, double w) {
    const Eigen::MatrixXd d = a.diagonal().asDiagonal();
    const Eigen::MatrixXd l = a.triangularView<Eigen::StrictlyLower>();
    const Eigen::MatrixXd u = a.triangularView<Eigen::StrictlyUpper>();
    const Eigen::MatrixXd m = (d + w * l) * d.inverse() * (d + w * u) / (w * (2.0 - w));
    return m.partialPivLu().solve(r);
}

CsrMatrix path_laplacian(int n) {
    std::vector<Triplet> t;
    for (int i = 0; i < n; ++i) {
        double deg = 0.0;
        if (i > 0) {
            t.push_back({i, i - 1, -1.0});
            deg += 1.0;
        }
        if (i + 1 < n) {
            t.push_back({i, i + 1, -1.0});
            deg += 1.0;
        }
        t.push_back({i, i, deg});
    }
    return csr_from_triplets(n, n, t);
}

} // namespace

TEST_CASE("SOR and SSOR applications match dense oracles") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> wdist(0.1, 1.9);
    for (int trial = 0; trial < 25; ++trial) {
        const Eigen::MatrixXd m = symmap::test::random_sparse(rng, 10, 0.4, trial % 2 == 0);
        const Eigen::MatrixXd sym = (0.5 * (m + m.transpose())).eval();
        const auto r = symmap::test::random_vector(rng, 10);
        const double w = wdist(rng);
        CHECK(rel_err(to_eigen(sor_precond_apply(from_eigen(m), r, w)), sor_oracle(m, to_eigen(r), w)) < 1e-12);
        CHECK(rel_err(to_eigen(ssor_precond_apply(from_eigen(sym), r, w)), ssor_oracle(sym, to_eigen(r), w)) < 1e-12);
    }
}

TEST_CASE("repeated SOR sweeps are the stationary iteration") {
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd m = symmap::test::random_sparse(rng, 12, 0.3);
    const CsrMatrix a = from_eigen(m);
    const auto r = symmap::test::random_vector(rng, 12);
    std::vector<double> x(12, 0.0);
    for (int k = 0; k < 3; ++k) x = sor_iterate(a, r, x, 1.3);
    CHECK(sor_precond_apply(a, r, 1.3, 3) == x);
    // converges to A^{-1} r for a diagonally dominant matrix
    CHECK(rel_err(to_eigen(sor_precond_apply(a, r, 1.0, 200)), m.partialPivLu().solve(to_eigen(r))) < 1e-10);
}

TEST_CASE("relaxation preconditioners validate their inputs") {
    const CsrMatrix a = laplacian_5pt(3);
    const std::vector<double> r(9, 1.0);
    CHECK_THROWS_AS(sor_precond_apply(a, r, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(sor_precond_apply(a, r, 0.0), std::invalid_argument);
    const std::vector<Triplet> t{{0, 0, 0.0}, {1, 1, 1.0}};
    CHECK_THROWS(sor_precond_apply(csr_from_triplets(2, 2, t), std::vector<double>{1, 1}, 1.0));
    const std::vector<Triplet> u{{0, 0, 1.0}, {0, 1, 1.0}, {1, 1, 1.0}};
    CHECK_THROWS_AS(ssor_precond_apply(csr_from_triplets(2, 2, u), std::vector<double>{1, 1}, 1.0),
                    std::invalid_argument);
    PrecondConfig c;
    c.kind = PrecondKind::Amg;
    c.theta = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK(legal_param_range(PrecondKind::Sor).contains(1.999));
    CHECK_FALSE(legal_param_range(PrecondKind::Sor).contains(2.0));
    CHECK(legal_param_range(PrecondKind::Amg).contains(0.0));
    CHECK_FALSE(legal_param_range(PrecondKind::Amg).contains(1.0));
}

TEST_CASE("strength of connection") {
    // row 0 couples strongly to 1 (-4) and weakly to 2 (-1)
    const std::vector<Triplet> t{{0, 0, 6.0},  {0, 1, -4.0}, {0, 2, -1.0}, {1, 0, -4.0}, {1, 1, 5.0},
                                 {2, 0, -1.0}, {2, 2, 2.0},  {1, 2, 0.5},  {2, 1, 0.5}};
    const CsrMatrix a = csr_from_triplets(3, 3, t);
    const StrengthGraph s0 = amg_strength(a, 0.0);
    CHECK(s0.row(0).size() == 2);
    CHECK(s0.row(1).size() == 1); // positive coupling is never strong
    const StrengthGraph s5 = amg_strength(a, 0.5);
    REQUIRE(s5.row(0).size() == 1);
    CHECK(s5.row(0)[0] == 1);
    // a negative diagonal flips the sign convention
    std::vector<Triplet> neg;
    for (Triplet e : t) neg.push_back({e.row, e.col, -e.value});
    const StrengthGraph sn = amg_strength(csr_from_triplets(3, 3, neg), 0.5);
    CHECK(sn.row(0).size() == 1);
    CHECK(sn.edge_count() == s5.edge_count());
}

TEST_CASE("Ruge-Stuben splitting leaves every F point a strong C neighbour") {
    const CsrMatrix a = laplacian_5pt(12);
    for (double theta : {0.0, 0.25, 0.5}) {
        const StrengthGraph s = amg_strength(a, theta);
        const auto c = rs_coarsen(s);
        std::size_t nc = 0;
        for (index_t i = 0; i < s.nrows(); ++i) {
            if (c[i]) {
                ++nc;
                continue;
            }
            bool has = false;
            for (index_t j : s.row(i)) has = has || c[j];
            CHECK(has);
        }
        CHECK(nc > 0);
        CHECK(nc < static_cast<std::size_t>(a.nrows()));
    }
}

TEST_CASE("direct interpolation reproduces constants on zero row-sum rows") {
    const CsrMatrix a = path_laplacian(21);
    const StrengthGraph s = amg_strength(a, 0.25);
    const auto c = rs_coarsen(s);
    const CsrMatrix p = direct_interpolation(a, s, c);
    std::size_t nc = 0;
    for (char v : c) nc += v ? 1 : 0;
    REQUIRE(static_cast<std::size_t>(p.ncols()) == nc);
    const auto one = spmv(p, std::vector<double>(nc, 1.0));
    for (double v : one) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("AMG hierarchy and V-cycle") {
    const CsrMatrix a = laplacian_5pt(24);
    const AmgHierarchy h = amg_setup(a, 0.25);
    CHECK(h.num_levels() >= 2);
    CHECK(h.levels.back().a.nrows() <= 64);
    CHECK_FALSE(h.stagnated);
    for (std::size_t l = 0; l + 1 < h.num_levels(); ++l) {
        // Galerkin: A_c = R A P
        const CsrMatrix ac = multiply(h.levels[l].r, multiply(h.levels[l].a, h.levels[l].p));
        CHECK((to_eigen(ac) - to_eigen(h.levels[l + 1].a)).norm() < 1e-10 * to_eigen(ac).norm());
    }
    // V-cycle as a stationary iteration contracts the error
    std::mt19937_64 rng(8);
    const auto b = symmap::test::random_vector(rng, static_cast<std::size_t>(a.nrows()));
    std::vector<double> x(b.size(), 0.0);
    for (int k = 0; k < 15; ++k) {
        auto r = b;
        const auto ax = spmv(a, x);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= ax[i];
        const auto z = amg_vcycle_apply(h, r);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += z[i];
    }
    CHECK(relative_residual(a, b, x) < 1e-4);
}

TEST_CASE("Preconditioner reports symmetry") {
    const CsrMatrix a = laplacian_5pt(6);
    PrecondConfig c;
    c.kind = PrecondKind::Ssor;
    c.omega = 1.2;
    CHECK(Preconditioner(a, c).is_symmetric());
    c.kind = PrecondKind::Sor;
    CHECK_FALSE(Preconditioner(a, c).is_symmetric());
    c.kind = PrecondKind::Jacobi;
    const Preconditioner j(a, c);
    CHECK(j.is_symmetric());
    const auto z = j.apply(std::vector<double>(36, 1.0));
    CHECK(z[0] == doctest::Approx(1.0 / a.at(0, 0)));
    c.kind = PrecondKind::Amg;
    CHECK(Preconditioner(a, c).hierarchy() != nullptr);
}
