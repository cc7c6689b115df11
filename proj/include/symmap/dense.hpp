#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace symmap {

/// Row-major dense matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t nrows, std::size_t ncols, double fill = 0.0)
        : nrows_(nrows), ncols_(ncols), data_(nrows * ncols, fill) {}

    std::size_t nrows() const { return nrows_; }
    std::size_t ncols() const { return ncols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * ncols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * ncols_ + j]; }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t nrows_ = 0;
    std::size_t ncols_ = 0;
    std::vector<double> data_;
};

DenseMatrix dense_identity(std::size_t n);
DenseMatrix dense_multiply(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix dense_transpose(const DenseMatrix& a);
std::vector<double> dense_matvec(const DenseMatrix& a, std::span<const double> x);

/// LU with partial pivoting; used for coarsest-level AMG solves.
class LuFactorization {
public:
    LuFactorization() = default;
    /// Throws std::runtime_error when a pivot is exactly zero.
    explicit LuFactorization(DenseMatrix a);

    std::size_t size() const { return lu_.nrows(); }
    void solve_in_place(std::span<double> b) const;
    std::vector<double> solve(std::span<const double> b) const;

private:
    DenseMatrix lu_;
    std::vector<std::size_t> perm_;
};

/// Singular values (descending) by one-sided Jacobi rotations.
std::vector<double> singular_values(const DenseMatrix& a);

} // namespace symmap
