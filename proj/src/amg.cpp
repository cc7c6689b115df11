#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "symmap/precond.hpp"

namespace symmap {

namespace {

constexpr double kJacobiWeight = 2.0 / 3.0;
constexpr int kMaxLevels = 25;
constexpr index_t kDenseCoarseLimit = 2000;

inline double row_sign(double diag) { return diag < 0.0 ? -1.0 : 1.0; }

} // namespace

StrengthGraph amg_strength(const CsrMatrix& a, double theta) {
    if (!(theta >= 0.0 && theta < 1.0))
        throw std::invalid_argument("AMG strength threshold theta must lie in [0, 1)");
    StrengthGraph g;
    g.offsets.assign(static_cast<std::size_t>(a.nrows()) + 1, 0);
    for (index_t i = 0; i < a.nrows(); ++i) {
        const auto cols = a.row_cols(i);
        const auto vals = a.row_values(i);
        const double s = row_sign(a.at(i, i));
        double max_neg = 0.0;
        for (std::size_t k = 0; k < cols.size(); ++k)
            if (cols[k] != i) max_neg = std::max(max_neg, -s * vals[k]);
        if (max_neg > 0.0) {
            const double cut = theta * max_neg;
            for (std::size_t k = 0; k < cols.size(); ++k) {
                if (cols[k] == i) continue;
                const double v = -s * vals[k];
                if (v > 0.0 && v >= cut) g.cols.push_back(cols[k]);
            }
        }
        g.offsets[i + 1] = static_cast<index_t>(g.cols.size());
    }
    return g;
}

std::vector<char> rs_coarsen(const StrengthGraph& s) {
    const index_t n = s.nrows();
    // transpose: who depends on j
    std::vector<index_t> t_off(static_cast<std::size_t>(n) + 1, 0);
    for (index_t j : s.cols) ++t_off[j + 1];
    for (index_t i = 0; i < n; ++i) t_off[i + 1] += t_off[i];
    std::vector<index_t> t_cols(s.cols.size());
    {
        std::vector<index_t> cursor(t_off.begin(), t_off.end() - 1);
        for (index_t i = 0; i < n; ++i)
            for (index_t j : s.row(i)) t_cols[cursor[j]++] = i;
    }
    auto influenced = [&](index_t j) {
        return std::span<const index_t>(t_cols.data() + t_off[j], static_cast<std::size_t>(t_off[j + 1] - t_off[j]));
    };

    enum : char { Undecided = 0, Coarse = 1, Fine = 2 };
    std::vector<char> state(n, Undecided);
    std::vector<index_t> lambda(n, 0);
    std::set<std::pair<index_t, index_t>> queue; // (-lambda, i): max lambda, then smallest index
    for (index_t i = 0; i < n; ++i) {
        lambda[i] = static_cast<index_t>(influenced(i).size());
        if (s.row(i).empty() && lambda[i] == 0)
            state[i] = Fine; // isolated point, nothing to interpolate
        else
            queue.insert({-lambda[i], i});
    }
    auto bump = [&](index_t k, index_t delta) {
        queue.erase({-lambda[k], k});
        lambda[k] += delta;
        queue.insert({-lambda[k], k});
    };

    while (!queue.empty()) {
        const auto [neg_l, i] = *queue.begin();
        if (neg_l == 0) break;
        queue.erase(queue.begin());
        state[i] = Coarse;
        for (index_t j : influenced(i)) {
            if (state[j] != Undecided) continue;
            state[j] = Fine;
            queue.erase({-lambda[j], j});
            for (index_t k : s.row(j))
                if (state[k] == Undecided) bump(k, 1);
        }
        for (index_t k : s.row(i))
            if (state[k] == Undecided) bump(k, -1);
    }
    // leftovers influence nobody undecided: fine if they can interpolate from a C point
    for (const auto& [neg_l, i] : queue) {
        (void)neg_l;
        bool has_c = false;
        for (index_t k : s.row(i)) has_c = has_c || state[k] == Coarse;
        state[i] = has_c ? Fine : Coarse;
    }

    std::vector<char> is_coarse(n);
    for (index_t i = 0; i < n; ++i) is_coarse[i] = state[i] == Coarse ? 1 : 0;
    return is_coarse;
}

CsrMatrix direct_interpolation(const CsrMatrix& a, const StrengthGraph& s, std::span<const char> is_coarse) {
    const index_t n = a.nrows();
    std::vector<index_t> coarse_index(n, -1);
    index_t nc = 0;
    for (index_t i = 0; i < n; ++i)
        if (is_coarse[i]) coarse_index[i] = nc++;

    std::vector<Triplet> t;
    for (index_t i = 0; i < n; ++i) {
        if (is_coarse[i]) {
            t.push_back({i, coarse_index[i], 1.0});
            continue;
        }
        const double diag = a.at(i, i);
        const double sg = row_sign(diag);
        const auto cols = a.row_cols(i);
        const auto vals = a.row_values(i);
        double neg_all = 0.0, pos_all = 0.0;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k] == i) continue;
            const double v = sg * vals[k];
            (v < 0.0 ? neg_all : pos_all) += v;
        }
        double neg_c = 0.0;
        for (index_t j : s.row(i))
            if (is_coarse[j]) neg_c += sg * a.at(i, j);
        // strong C-neighbours are all negative couplings; positive ones are lumped
        const double d = sg * diag + pos_all;
        if (neg_c >= 0.0 || d == 0.0) continue;
        const double alpha = neg_all / neg_c;
        for (index_t j : s.row(i))
            if (is_coarse[j]) t.push_back({i, coarse_index[j], -alpha * sg * a.at(i, j) / d});
    }
    return csr_from_triplets(n, nc, t);
}

namespace {

std::vector<double> inverse_diagonal(const CsrMatrix& a) {
    std::vector<double> d = a.diagonal();
    for (double& v : d) v = v != 0.0 ? 1.0 / v : 0.0;
    return d;
}

void residual(const CsrMatrix& a, std::span<const double> b, std::span<const double> x, std::span<double> r) {
    spmv(a, x, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
}

void jacobi_step(const AmgLevel& lvl, std::span<const double> b, std::span<double> x) {
    std::vector<double> r(b.size());
    residual(lvl.a, b, x, r);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += kJacobiWeight * lvl.inv_diag[i] * r[i];
}

void smooth(const AmgHierarchy& h, const AmgLevel& lvl, std::span<const double> b, std::span<double> x, bool pre) {
    if (h.smoother == AmgSmoother::Jacobi) {
        jacobi_step(lvl, b, x);
    } else if (pre) {
        sor_sweep_in_place(lvl.a, b, x, h.smoother_omega);
    } else {
        sor_backward_sweep_in_place(lvl.a, b, x, h.smoother_omega);
    }
}

void vcycle(const AmgHierarchy& h, std::size_t l, std::span<const double> b, std::span<double> x) {
    const AmgLevel& lvl = h.levels[l];
    std::fill(x.begin(), x.end(), 0.0);
    if (l + 1 == h.levels.size()) {
        if (h.direct_coarse) {
            std::copy(b.begin(), b.end(), x.begin());
            h.coarse_solver.solve_in_place(x);
        } else {
            smooth(h, lvl, b, x, true);
            smooth(h, lvl, b, x, false);
        }
        return;
    }
    smooth(h, lvl, b, x, true);
    std::vector<double> r(b.size());
    residual(lvl.a, b, x, r);
    const std::vector<double> rc = spmv(lvl.r, r);
    std::vector<double> ec(rc.size());
    vcycle(h, l + 1, rc, ec);
    const std::vector<double> correction = spmv(lvl.p, ec);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += correction[i];
    smooth(h, lvl, b, x, false);
}

} // namespace

AmgHierarchy amg_setup(const CsrMatrix& a, double theta, int coarse_cap, AmgSmoother smoother,
                       double smoother_omega) {
    if (!a.is_square()) throw std::invalid_argument("amg_setup: matrix must be square");
    if (!(theta >= 0.0 && theta < 1.0)) throw std::invalid_argument("amg_setup: theta must lie in [0, 1)");
    if (coarse_cap < 1) throw std::invalid_argument("amg_setup: coarse_cap must be >= 1");

    AmgHierarchy h;
    h.theta = theta;
    h.smoother = smoother;
    h.smoother_omega = smoother_omega;
    h.levels.push_back({a, {}, {}, inverse_diagonal(a)});

    while (h.levels.back().a.nrows() > coarse_cap && static_cast<int>(h.levels.size()) < kMaxLevels) {
        const CsrMatrix& fine = h.levels.back().a;
        const StrengthGraph s = amg_strength(fine, theta);
        const std::vector<char> cf = rs_coarsen(s);
        const auto nc = static_cast<index_t>(std::count(cf.begin(), cf.end(), 1));
        if (nc == 0 || nc == fine.nrows()) {
            h.stagnated = true;
            break;
        }
        CsrMatrix p = direct_interpolation(fine, s, cf);
        CsrMatrix r = transpose(p);
        CsrMatrix coarse = multiply(r, multiply(fine, p));
        h.levels.back().p = std::move(p);
        h.levels.back().r = std::move(r);
        std::vector<double> inv_d = inverse_diagonal(coarse);
        h.levels.push_back({std::move(coarse), {}, {}, std::move(inv_d)});
    }

    const CsrMatrix& coarsest = h.levels.back().a;
    h.direct_coarse = false;
    const bool jacobi_fallback = h.stagnated && h.levels.size() == 1;
    if (!jacobi_fallback && coarsest.nrows() <= std::max<index_t>(coarse_cap, kDenseCoarseLimit)) {
        try {
            h.coarse_solver = LuFactorization(to_dense(coarsest));
            h.direct_coarse = true;
        } catch (const std::runtime_error&) {
            h.direct_coarse = false;
        }
    }
    if (jacobi_fallback) h.smoother = AmgSmoother::Jacobi;
    return h;
}

std::vector<double> amg_vcycle_apply(const AmgHierarchy& h, std::span<const double> r) {
    if (h.levels.empty()) throw std::invalid_argument("amg_vcycle_apply: empty hierarchy");
    if (r.size() != static_cast<std::size_t>(h.levels.front().a.nrows()))
        throw std::invalid_argument("amg_vcycle_apply: vector length does not match hierarchy");
    std::vector<double> x(r.size());
    vcycle(h, 0, r, x);
    return x;
}

} // namespace symmap
