#pragma once

// Compressed sparse row storage and the kernels the solvers need.

#include <cstdint>
#include <span>
#include <vector>

#include "symmap/dense.hpp"

namespace symmap {

using index_t = std::int32_t;

struct Triplet {
    index_t row = 0;
    index_t col = 0;
    double value = 0.0;
};

/// Immutable CSR matrix. Column indices are strictly increasing within a row;
/// explicitly stored zeros are kept as structural nonzeros.
class CsrMatrix {
public:
    CsrMatrix() = default;

    /// Takes ownership of the three arrays; throws std::invalid_argument if
    /// they do not form a valid CSR matrix.
    CsrMatrix(index_t nrows, index_t ncols, std::vector<index_t> row_offsets,
              std::vector<index_t> col_indices, std::vector<double> values);

    index_t nrows() const { return nrows_; }
    index_t ncols() const { return ncols_; }
    std::size_t nnz() const { return values_.size(); }
    bool is_square() const { return nrows_ == ncols_; }

    std::span<const index_t> row_offsets() const { return row_offsets_; }
    std::span<const index_t> col_indices() const { return col_indices_; }
    std::span<const double> values() const { return values_; }

    std::span<const index_t> row_cols(index_t i) const {
        return {col_indices_.data() + row_offsets_[i],
                static_cast<std::size_t>(row_offsets_[i + 1] - row_offsets_[i])};
    }
    std::span<const double> row_values(index_t i) const {
        return {values_.data() + row_offsets_[i],
                static_cast<std::size_t>(row_offsets_[i + 1] - row_offsets_[i])};
    }

    /// Stored value at (i, j), 0 if absent.
    double at(index_t i, index_t j) const;

    /// Main diagonal (0 where not stored).
    std::vector<double> diagonal() const;

    friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;

private:
    index_t nrows_ = 0;
    index_t ncols_ = 0;
    std::vector<index_t> row_offsets_{0};
    std::vector<index_t> col_indices_;
    std::vector<double> values_;
};

/// Builds a CSR matrix; duplicate (i, j) entries are summed, zeros retained.
CsrMatrix csr_from_triplets(index_t nrows, index_t ncols, std::span<const Triplet> triplets);

std::vector<Triplet> to_triplets(const CsrMatrix& a);

/// y = A x, rows distributed over OpenMP threads. Each row is accumulated in
/// the same order as spmv_serial, so the result is bit-identical.
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x);

/// Reference single-threaded product.
void spmv_serial(const CsrMatrix& a, std::span<const double> x, std::span<double> y);

CsrMatrix transpose(const CsrMatrix& a);

/// Sparse product A B (row-by-row Gustavson).
CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b);

/// Same sparsity pattern as the transpose (values not compared).
bool is_structurally_symmetric(const CsrMatrix& a);
bool is_symmetric(const CsrMatrix& a, double rel_tol = 0.0);

inline constexpr std::size_t kDenseEntryCap = 1'000'000;

/// Dense copy for tests and small direct solves; throws std::length_error
/// above `cap` entries.
DenseMatrix to_dense(const CsrMatrix& a, std::size_t cap = kDenseEntryCap);

CsrMatrix identity_csr(index_t n);

// Small vector helpers used by the solvers. Kept serial so reductions are
// reproducible run to run.
double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

} // namespace symmap
