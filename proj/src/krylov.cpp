#include "symmap/krylov.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace symmap {

std::string_view to_string(SolverMethod m) {
    switch (m) {
    case SolverMethod::Cg: return "cg";
    case SolverMethod::Gmres: return "gmres";
    case SolverMethod::Richardson: return "richardson";
    }
    return "unknown";
}

SolverMethod parse_solver_method(std::string_view s) {
    if (s == "cg") return SolverMethod::Cg;
    if (s == "gmres") return SolverMethod::Gmres;
    if (s == "richardson" || s == "stationary") return SolverMethod::Richardson;
    throw std::invalid_argument("unknown solver method '" + std::string(s) + "'");
}

void SolverConfig::validate() const {
    if (!(tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be > 0");
    if (restart < 1) throw std::invalid_argument("GMRES restart must be >= 1");
    if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
}

double relative_residual(const CsrMatrix& a, std::span<const double> b, std::span<const double> x) {
    std::vector<double> r = spmv(a, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    const double nb = norm2(b);
    return nb > 0.0 ? norm2(r) / nb : norm2(r);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_system(const CsrMatrix& a, std::span<const double> b) {
    if (!a.is_square()) throw std::invalid_argument("solver requires a square matrix");
    if (b.size() != static_cast<std::size_t>(a.nrows()))
        throw std::invalid_argument("right-hand side length does not match matrix");
}

SolveResult zero_rhs_result(std::size_t n) {
    SolveResult res;
    res.x.assign(n, 0.0);
    res.report.converged = true;
    return res;
}

} // namespace

SolveResult cg_solve(const CsrMatrix& a, std::span<const double> b, const Preconditioner& m,
                     const SolverConfig& cfg) {
    cfg.validate();
    check_system(a, b);
    const auto t0 = Clock::now();
    const std::size_t n = b.size();
    const double nb = norm2(b);
    if (nb == 0.0) return zero_rhs_result(n);

    SolveResult res;
    auto& rep = res.report;
    std::vector<double>& x = res.x;
    x.assign(n, 0.0);
    std::vector<double> r(b.begin(), b.end()), z(n), p(n), q(n);
    m.apply(r, z);
    p = z;
    double rz = dot(r, z);
    const double target = cfg.tolerance * nb;

    int k = 0;
    double rnorm = nb;
    if (cfg.record_history) rep.residual_history.push_back(1.0);
    while (k < cfg.max_iters) {
        spmv(a, p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0) || !(rz > 0.0)) {
            rep.breakdown = true;
            break;
        }
        const double alpha = rz / pq;
        axpy(alpha, p, x);
        axpy(-alpha, q, r);
        ++k;
        rnorm = norm2(r);
        if (cfg.record_history) rep.residual_history.push_back(rnorm / nb);
        if (rnorm <= target) {
            // confirm against the true residual before stopping
            spmv(a, x, q);
            for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
            rnorm = norm2(r);
            if (rnorm <= target) break;
        }
        m.apply(r, z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    rep.iterations = k;
    rep.final_relative_residual = relative_residual(a, b, x);
    rep.converged = !rep.breakdown && rep.final_relative_residual <= cfg.tolerance;
    rep.wall_time = seconds_since(t0);
    return res;
}

SolveResult gmres_solve(const CsrMatrix& a, std::span<const double> b, const Preconditioner& m,
                        const SolverConfig& cfg) {
    cfg.validate();
    check_system(a, b);
    const auto t0 = Clock::now();
    const std::size_t n = b.size();
    const double nb = norm2(b);
    if (nb == 0.0) return zero_rhs_result(n);

    SolveResult res;
    auto& rep = res.report;
    std::vector<double>& x = res.x;
    x.assign(n, 0.0);
    const int mdim = cfg.restart;
    const double target = cfg.tolerance * nb;

    std::vector<std::vector<double>> v(mdim + 1, std::vector<double>(n));
    std::vector<std::vector<double>> av(mdim, std::vector<double>(n)); // A v_j, unpreconditioned
    std::vector<double> h((mdim + 1) * mdim, 0.0);
    auto H = [&](int i, int j) -> double& { return h[static_cast<std::size_t>(j) * (mdim + 1) + i]; };
    std::vector<double> cs(mdim), sn(mdim), g(mdim + 1), y(mdim);
    std::vector<double> r_true(n), r_work(n), w(n);

    int total = 0;
    bool done = false;
    while (!done) {
        // true residual at the start of the cycle
        spmv(a, x, r_work);
        for (std::size_t i = 0; i < n; ++i) r_true[i] = b[i] - r_work[i];
        if (norm2(r_true) <= target || total >= cfg.max_iters) break;
        m.apply(r_true, v[0]);
        const double beta = norm2(v[0]);
        if (beta == 0.0) {
            rep.breakdown = true;
            break;
        }
        for (double& vi : v[0]) vi /= beta;
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;
        if (cfg.record_history) {
            rep.cycle_starts.push_back(static_cast<int>(rep.residual_history.size()));
            rep.residual_history.push_back(beta);
        }

        int j = 0;
        int used = 0;
        bool converged_in_cycle = false;
        for (; j < mdim && total < cfg.max_iters; ++j) {
            spmv(a, v[j], av[j]);
            m.apply(av[j], w);
            const double wnorm0 = norm2(w);
            for (int i = 0; i <= j; ++i) {
                H(i, j) = dot(w, v[i]);
                axpy(-H(i, j), v[i], w);
            }
            // one reorthogonalization pass
            for (int i = 0; i <= j; ++i) {
                const double c = dot(w, v[i]);
                H(i, j) += c;
                axpy(-c, v[i], w);
            }
            const double hn = norm2(w);
            H(j + 1, j) = hn;
            const bool lucky = hn <= 1e-14 * std::max(wnorm0, 1e-300);
            if (!lucky)
                for (std::size_t i = 0; i < n; ++i) v[j + 1][i] = w[i] / hn;

            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
                H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
                H(i, j) = t;
            }
            const double denom = std::hypot(H(j, j), H(j + 1, j));
            cs[j] = denom > 0.0 ? H(j, j) / denom : 1.0;
            sn[j] = denom > 0.0 ? H(j + 1, j) / denom : 0.0;
            H(j, j) = denom;
            H(j + 1, j) = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            ++total;
            used = j + 1;
            if (cfg.record_history) rep.residual_history.push_back(std::abs(g[j + 1]));

            // y from the current least-squares problem, then the true residual r0 - (A V) y
            for (int i = used - 1; i >= 0; --i) {
                double s = g[i];
                for (int k = i + 1; k < used; ++k) s -= H(i, k) * y[k];
                y[i] = H(i, i) != 0.0 ? s / H(i, i) : 0.0;
            }
            std::copy(r_true.begin(), r_true.end(), r_work.begin());
            for (int k = 0; k < used; ++k) axpy(-y[k], av[k], r_work);
            if (norm2(r_work) <= target) {
                converged_in_cycle = true;
                break;
            }
            if (lucky) {
                rep.breakdown = false;
                break;
            }
        }
        for (int k = 0; k < used; ++k) axpy(y[k], v[k], x);
        if (converged_in_cycle) done = true;
        if (used == 0) break;
        if (used < mdim && !converged_in_cycle && total < cfg.max_iters) {
            // lucky breakdown without reaching the tolerance: the Krylov space is exhausted
            spmv(a, x, r_work);
            for (std::size_t i = 0; i < n; ++i) r_work[i] = b[i] - r_work[i];
            if (norm2(r_work) > target) {
                // restart from the improved iterate; guard against spinning forever
                if (norm2(r_work) >= norm2(r_true)) {
                    rep.breakdown = true;
                    done = true;
                }
            }
        }
    }
    rep.iterations = total;
    rep.final_relative_residual = relative_residual(a, b, x);
    rep.converged = rep.final_relative_residual <= cfg.tolerance;
    if (rep.converged) rep.breakdown = false;
    rep.wall_time = seconds_since(t0);
    return res;
}

SolveResult richardson_solve(const CsrMatrix& a, std::span<const double> b, const Preconditioner& m,
                             const SolverConfig& cfg) {
    cfg.validate();
    check_system(a, b);
    const auto t0 = Clock::now();
    const std::size_t n = b.size();
    const double nb = norm2(b);
    if (nb == 0.0) return zero_rhs_result(n);

    SolveResult res;
    auto& rep = res.report;
    res.x.assign(n, 0.0);
    std::vector<double> r(b.begin(), b.end()), z(n), ax(n);
    const double target = cfg.tolerance * nb;
    if (cfg.record_history) rep.residual_history.push_back(1.0);
    int k = 0;
    while (k < cfg.max_iters) {
        m.apply(r, z);
        axpy(1.0, z, res.x);
        ++k;
        spmv(a, res.x, ax);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ax[i];
        const double rn = norm2(r);
        if (cfg.record_history) rep.residual_history.push_back(rn / nb);
        if (!std::isfinite(rn)) {
            rep.breakdown = true;
            break;
        }
        if (rn <= target) break;
    }
    rep.iterations = k;
    rep.final_relative_residual = relative_residual(a, b, res.x);
    rep.converged = std::isfinite(rep.final_relative_residual) && rep.final_relative_residual <= cfg.tolerance;
    rep.wall_time = seconds_since(t0);
    return res;
}

namespace {

template <class Fn>
SolveResult timed_with_setup(const CsrMatrix& a, const PrecondConfig& precond, Fn&& run) {
    const auto t0 = Clock::now();
    const Preconditioner m(a, precond);
    SolveResult res = run(m);
    res.report.wall_time = seconds_since(t0);
    return res;
}

} // namespace

SolveResult cg_solve(const CsrMatrix& a, std::span<const double> b, const PrecondConfig& precond,
                     const SolverConfig& cfg) {
    return timed_with_setup(a, precond, [&](const Preconditioner& m) { return cg_solve(a, b, m, cfg); });
}

SolveResult gmres_solve(const CsrMatrix& a, std::span<const double> b, const PrecondConfig& precond,
                        const SolverConfig& cfg) {
    return timed_with_setup(a, precond, [&](const Preconditioner& m) { return gmres_solve(a, b, m, cfg); });
}

SolveResult richardson_solve(const CsrMatrix& a, std::span<const double> b, const PrecondConfig& precond,
                             const SolverConfig& cfg) {
    return timed_with_setup(a, precond, [&](const Preconditioner& m) { return richardson_solve(a, b, m, cfg); });
}

SolveResult solve(const CsrMatrix& a, std::span<const double> b, const PrecondConfig& precond,
                  const SolverConfig& cfg) {
    switch (cfg.method) {
    case SolverMethod::Cg: return cg_solve(a, b, precond, cfg);
    case SolverMethod::Gmres: return gmres_solve(a, b, precond, cfg);
    case SolverMethod::Richardson: return richardson_solve(a, b, precond, cfg);
    }
    throw std::invalid_argument("unknown solver method");
}

ConditionEstimate estimate_condition(const CsrMatrix& a, const Preconditioner& m, int max_steps) {
    if (!a.is_square()) throw std::invalid_argument("estimate_condition: matrix must be square");
    const std::size_t n = a.nrows();
    ConditionEstimate est;
    if (n == 0) return est;
    const int steps = static_cast<int>(std::min<std::size_t>(n, std::max(1, max_steps)));

    std::vector<std::vector<double>> v;
    v.reserve(steps + 1);
    std::vector<double> start(n);
    std::mt19937_64 rng(0x5eed5eedULL);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& s : start) s = u(rng);
    const double s0 = norm2(start);
    for (double& s : start) s /= s0;
    v.push_back(std::move(start));

    DenseMatrix hess(steps + 1, steps);
    std::vector<double> aw(n), w(n);
    int k = 0;
    bool lucky = false;
    for (; k < steps; ++k) {
        spmv(a, v[k], aw);
        m.apply(aw, w);
        const double wn0 = norm2(w);
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i <= k; ++i) {
                const double c = dot(w, v[i]);
                hess(i, k) += c;
                axpy(-c, v[i], w);
            }
        const double hn = norm2(w);
        hess(k + 1, k) = hn;
        if (hn <= 1e-12 * std::max(wn0, 1e-300)) {
            lucky = true;
            ++k;
            break;
        }
        for (double& wi : w) wi /= hn;
        v.push_back(w);
    }

    // square block on breakdown (exact invariant subspace), else the (k+1) x k matrix
    const std::size_t rows = lucky ? k : k + 1;
    DenseMatrix hk(rows, k);
    for (std::size_t i = 0; i < rows; ++i)
        for (int j = 0; j < k; ++j) hk(i, j) = hess(i, j);
    const std::vector<double> sv = singular_values(hk);
    est.steps = k;
    est.sigma_max = sv.front();
    est.sigma_min = sv.back();
    if (!(est.sigma_min > 1e-14 * est.sigma_max)) {
        est.capped = true;
        est.value = kConditionCap;
    } else {
        est.value = est.sigma_max / est.sigma_min;
    }
    return est;
}

ConditionEstimate estimate_condition(const CsrMatrix& a, const PrecondConfig& precond, int max_steps) {
    const Preconditioner m(a, precond);
    return estimate_condition(a, m, max_steps);
}

std::string solve_report_csv_header() {
    return "problem_id,method,precond,param,iterations,time_s,relres,converged";
}

std::string solve_report_csv_row(std::string_view problem_id, SolverMethod method, const PrecondConfig& precond,
                                 double param, const SolveReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, ",%s,%s,%.17g,%d,%.9g,%.17g,%d", std::string(to_string(method)).c_str(),
                  std::string(to_string(precond.kind)).c_str(), param, r.iterations, r.wall_time,
                  r.final_relative_residual, r.converged ? 1 : 0);
    return std::string(problem_id) + buf;
}

} // namespace symmap
