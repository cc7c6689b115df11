#include "symmap/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace symmap {

CsrMatrix::CsrMatrix(index_t nrows, index_t ncols, std::vector<index_t> row_offsets,
                     std::vector<index_t> col_indices, std::vector<double> values)
    : nrows_(nrows), ncols_(ncols), row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)), values_(std::move(values)) {
    if (nrows_ < 0 || ncols_ < 0) throw std::invalid_argument("CsrMatrix: negative dimension");
    if (row_offsets_.size() != static_cast<std::size_t>(nrows_) + 1)
        throw std::invalid_argument("CsrMatrix: row_offsets must have nrows+1 entries");
    if (col_indices_.size() != values_.size())
        throw std::invalid_argument("CsrMatrix: col_indices and values differ in length");
    if (row_offsets_.front() != 0 ||
        row_offsets_.back() != static_cast<index_t>(values_.size()))
        throw std::invalid_argument("CsrMatrix: row_offsets must span [0, nnz]");
    for (index_t i = 0; i < nrows_; ++i) {
        if (row_offsets_[i + 1] < row_offsets_[i])
            throw std::invalid_argument("CsrMatrix: row_offsets not nondecreasing at row " +
                                        std::to_string(i));
        for (index_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            const index_t j = col_indices_[k];
            if (j < 0 || j >= ncols_)
                throw std::invalid_argument("CsrMatrix: column index out of range in row " +
                                            std::to_string(i));
            if (k > row_offsets_[i] && col_indices_[k - 1] >= j)
                throw std::invalid_argument("CsrMatrix: columns not strictly increasing in row " +
                                            std::to_string(i));
        }
    }
}

double CsrMatrix::at(index_t i, index_t j) const {
    const auto cols = row_cols(i);
    const auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) return 0.0;
    return values_[row_offsets_[i] + (it - cols.begin())];
}

std::vector<double> CsrMatrix::diagonal() const {
    std::vector<double> d(std::min(nrows_, ncols_), 0.0);
    for (index_t i = 0; i < static_cast<index_t>(d.size()); ++i) d[i] = at(i, i);
    return d;
}

CsrMatrix csr_from_triplets(index_t nrows, index_t ncols, std::span<const Triplet> triplets) {
    if (nrows < 0 || ncols < 0) throw std::invalid_argument("csr_from_triplets: negative dimension");
    std::vector<index_t> counts(static_cast<std::size_t>(nrows) + 1, 0);
    for (const auto& t : triplets) {
        if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols)
            throw std::out_of_range("csr_from_triplets: index (" + std::to_string(t.row) + ", " +
                                    std::to_string(t.col) + ") out of range");
        ++counts[t.row + 1];
    }
    std::partial_sum(counts.begin(), counts.end(), counts.begin());

    // bucket by row, then sort and merge duplicates within each row
    std::vector<std::pair<index_t, double>> bucket(triplets.size());
    std::vector<index_t> cursor(counts.begin(), counts.end() - 1);
    for (const auto& t : triplets) bucket[cursor[t.row]++] = {t.col, t.value};

    std::vector<index_t> offsets(static_cast<std::size_t>(nrows) + 1, 0);
    std::vector<index_t> cols;
    std::vector<double> vals;
    cols.reserve(triplets.size());
    vals.reserve(triplets.size());
    for (index_t i = 0; i < nrows; ++i) {
        auto first = bucket.begin() + counts[i];
        auto last = bucket.begin() + counts[i + 1];
        // stable so duplicates are summed in input order
        std::stable_sort(first, last, [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto it = first; it != last; ++it) {
            if (!cols.empty() && static_cast<index_t>(cols.size()) > offsets[i] &&
                cols.back() == it->first) {
                vals.back() += it->second;
            } else {
                cols.push_back(it->first);
                vals.push_back(it->second);
            }
        }
        offsets[i + 1] = static_cast<index_t>(cols.size());
    }
    return CsrMatrix(nrows, ncols, std::move(offsets), std::move(cols), std::move(vals));
}

std::vector<Triplet> to_triplets(const CsrMatrix& a) {
    std::vector<Triplet> out;
    out.reserve(a.nnz());
    for (index_t i = 0; i < a.nrows(); ++i) {
        const auto cols = a.row_cols(i);
        const auto vals = a.row_values(i);
        for (std::size_t k = 0; k < cols.size(); ++k) out.push_back({i, cols[k], vals[k]});
    }
    return out;
}

namespace {

void check_spmv_dims(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    if (x.size() != static_cast<std::size_t>(a.ncols()))
        throw std::invalid_argument("spmv: x has length " + std::to_string(x.size()) +
                                    ", expected " + std::to_string(a.ncols()));
    if (y.size() != static_cast<std::size_t>(a.nrows()))
        throw std::invalid_argument("spmv: y has wrong length");
}

inline double row_dot(const index_t* cols, const double* vals, index_t begin, index_t end,
                      const double* x) {
    double sum = 0.0;
    for (index_t k = begin; k < end; ++k) sum += vals[k] * x[cols[k]];
    return sum;
}

} // namespace

void spmv_serial(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    check_spmv_dims(a, x, y);
    const auto off = a.row_offsets();
    const index_t* cols = a.col_indices().data();
    const double* vals = a.values().data();
    for (index_t i = 0; i < a.nrows(); ++i) y[i] = row_dot(cols, vals, off[i], off[i + 1], x.data());
}

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    check_spmv_dims(a, x, y);
    const index_t n = a.nrows();
    const index_t* off = a.row_offsets().data();
    const index_t* cols = a.col_indices().data();
    const double* vals = a.values().data();
    const double* xp = x.data();
    double* yp = y.data();
    // small systems are not worth a parallel region
#pragma omp parallel for schedule(static) if (n > 20000)
    for (index_t i = 0; i < n; ++i) yp[i] = row_dot(cols, vals, off[i], off[i + 1], xp);
}

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x) {
    std::vector<double> y(a.nrows());
    spmv(a, x, y);
    return y;
}

CsrMatrix transpose(const CsrMatrix& a) {
    std::vector<index_t> offsets(static_cast<std::size_t>(a.ncols()) + 1, 0);
    for (index_t j : a.col_indices()) ++offsets[j + 1];
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    std::vector<index_t> cols(a.nnz());
    std::vector<double> vals(a.nnz());
    std::vector<index_t> cursor(offsets.begin(), offsets.end() - 1);
    for (index_t i = 0; i < a.nrows(); ++i) {
        const auto rc = a.row_cols(i);
        const auto rv = a.row_values(i);
        for (std::size_t k = 0; k < rc.size(); ++k) {
            const index_t dst = cursor[rc[k]]++;
            cols[dst] = i;
            vals[dst] = rv[k];
        }
    }
    return CsrMatrix(a.ncols(), a.nrows(), std::move(offsets), std::move(cols), std::move(vals));
}

CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b) {
    if (a.ncols() != b.nrows()) throw std::invalid_argument("multiply: inner dimensions differ");
    std::vector<index_t> offsets(static_cast<std::size_t>(a.nrows()) + 1, 0);
    std::vector<index_t> cols;
    std::vector<double> vals;
    std::vector<index_t> marker(b.ncols(), -1);
    std::vector<double> accum(b.ncols(), 0.0);
    std::vector<index_t> row_pattern;
    for (index_t i = 0; i < a.nrows(); ++i) {
        row_pattern.clear();
        const auto ac = a.row_cols(i);
        const auto av = a.row_values(i);
        for (std::size_t ka = 0; ka < ac.size(); ++ka) {
            const auto bc = b.row_cols(ac[ka]);
            const auto bv = b.row_values(ac[ka]);
            for (std::size_t kb = 0; kb < bc.size(); ++kb) {
                const index_t j = bc[kb];
                if (marker[j] != i) {
                    marker[j] = i;
                    accum[j] = 0.0;
                    row_pattern.push_back(j);
                }
                accum[j] += av[ka] * bv[kb];
            }
        }
        std::sort(row_pattern.begin(), row_pattern.end());
        for (index_t j : row_pattern) {
            cols.push_back(j);
            vals.push_back(accum[j]);
        }
        offsets[i + 1] = static_cast<index_t>(cols.size());
    }
    return CsrMatrix(a.nrows(), b.ncols(), std::move(offsets), std::move(cols), std::move(vals));
}

bool is_structurally_symmetric(const CsrMatrix& a) {
    if (!a.is_square()) return false;
    const CsrMatrix t = transpose(a);
    return std::equal(a.row_offsets().begin(), a.row_offsets().end(), t.row_offsets().begin()) &&
           std::equal(a.col_indices().begin(), a.col_indices().end(), t.col_indices().begin());
}

bool is_symmetric(const CsrMatrix& a, double rel_tol) {
    if (!is_structurally_symmetric(a)) return false;
    const CsrMatrix t = transpose(a);
    const auto v = a.values();
    const auto w = t.values();
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double scale = std::max(std::abs(v[k]), std::abs(w[k]));
        if (std::abs(v[k] - w[k]) > rel_tol * scale) return false;
    }
    return true;
}

DenseMatrix to_dense(const CsrMatrix& a, std::size_t cap) {
    const std::size_t entries = static_cast<std::size_t>(a.nrows()) * static_cast<std::size_t>(a.ncols());
    if (entries > cap)
        throw std::length_error("to_dense: " + std::to_string(entries) + " entries exceeds cap " +
                                std::to_string(cap));
    DenseMatrix d(a.nrows(), a.ncols());
    for (index_t i = 0; i < a.nrows(); ++i) {
        const auto cols = a.row_cols(i);
        const auto vals = a.row_values(i);
        for (std::size_t k = 0; k < cols.size(); ++k) d(i, cols[k]) = vals[k];
    }
    return d;
}

CsrMatrix identity_csr(index_t n) {
    std::vector<index_t> offsets(static_cast<std::size_t>(n) + 1);
    std::iota(offsets.begin(), offsets.end(), 0);
    std::vector<index_t> cols(n);
    std::iota(cols.begin(), cols.end(), 0);
    return CsrMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
}

double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

} // namespace symmap
