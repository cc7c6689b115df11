#include "symmap/dense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace symmap {

DenseMatrix dense_identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix dense_multiply(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.ncols() != b.nrows()) throw std::invalid_argument("dense_multiply: dimension mismatch");
    DenseMatrix c(a.nrows(), b.ncols());
    for (std::size_t i = 0; i < a.nrows(); ++i)
        for (std::size_t k = 0; k < a.ncols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.ncols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

DenseMatrix dense_transpose(const DenseMatrix& a) {
    DenseMatrix t(a.ncols(), a.nrows());
    for (std::size_t i = 0; i < a.nrows(); ++i)
        for (std::size_t j = 0; j < a.ncols(); ++j) t(j, i) = a(i, j);
    return t;
}

std::vector<double> dense_matvec(const DenseMatrix& a, std::span<const double> x) {
    if (x.size() != a.ncols()) throw std::invalid_argument("dense_matvec: dimension mismatch");
    std::vector<double> y(a.nrows(), 0.0);
    for (std::size_t i = 0; i < a.nrows(); ++i)
        for (std::size_t j = 0; j < a.ncols(); ++j) y[i] += a(i, j) * x[j];
    return y;
}

LuFactorization::LuFactorization(DenseMatrix a) : lu_(std::move(a)) {
    const std::size_t n = lu_.nrows();
    if (lu_.ncols() != n) throw std::invalid_argument("LuFactorization: matrix not square");
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), 0);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
        if (lu_(p, k) == 0.0) throw std::runtime_error("LuFactorization: singular matrix");
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
            std::swap(perm_[k], perm_[p]);
        }
        const double pivot = lu_(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu_(i, k) / pivot;
            lu_(i, k) = f;
            if (f == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
        }
    }
}

void LuFactorization::solve_in_place(std::span<double> b) const {
    const std::size_t n = lu_.nrows();
    if (b.size() != n) throw std::invalid_argument("LuFactorization::solve: wrong rhs length");
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = b[perm_[i]];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) y[i] -= lu_(i, j) * y[j];
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) y[i] -= lu_(i, j) * y[j];
        y[i] /= lu_(i, i);
    }
    std::copy(y.begin(), y.end(), b.begin());
}

std::vector<double> LuFactorization::solve(std::span<const double> b) const {
    std::vector<double> x(b.begin(), b.end());
    solve_in_place(x);
    return x;
}

std::vector<double> singular_values(const DenseMatrix& a) {
    // work on the orientation with more rows so column rotations suffice
    const bool tall = a.nrows() >= a.ncols();
    DenseMatrix u = tall ? a : dense_transpose(a);
    const std::size_t m = u.nrows();
    const std::size_t n = u.ncols();

    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += u(i, p) * u(i, p);
                    beta += u(i, q) * u(i, q);
                    gamma += u(i, p) * u(i, q);
                }
                if (gamma == 0.0) continue;
                const double denom = std::sqrt(alpha * beta);
                if (denom == 0.0) continue;
                off = std::max(off, std::abs(gamma) / denom);
                if (std::abs(gamma) <= 1e-15 * denom) continue;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double up = u(i, p);
                    const double uq = u(i, q);
                    u(i, p) = c * up - s * uq;
                    u(i, q) = s * up + c * uq;
                }
            }
        }
        if (off <= 1e-15) break;
    }

    std::vector<double> sv(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += u(i, j) * u(i, j);
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

} // namespace symmap
