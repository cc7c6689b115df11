#pragma once

// Preconditioned CG, restarted GMRES, stationary (Richardson)
// iteration and an Arnoldi-based condition number estimate.

#include <string>
#include <string_view>
#include <vector>

#include "symmap/precond.hpp"
#include "symmap/sparse.hpp"

namespace symmap {

enum class SolverMethod { Cg, Gmres, Richardson };

std::string_view to_string(SolverMethod m);
SolverMethod parse_solver_method(std::string_view s);

struct SolverConfig {
    SolverMethod method = SolverMethod::Gmres;
    double tolerance = 1e-7;  ///< on ||b - Ax||_2 / ||b||_2
    int max_iters = 10000;
    int restart = 30;         ///< GMRES only
    bool record_history = false;

    void validate() const;
};

struct SolveReport {
    int iterations = 0;
    double wall_time = 0.0;  ///< seconds, preconditioner setup + iterations
    double final_relative_residual = 0.0;
    bool converged = false;
    bool breakdown = false;
    /// Per-iteration residual norms as seen by the method (preconditioned
    /// residual estimate for GMRES, true residual otherwise); only filled
    /// when SolverConfig::record_history is set.
    std::vector<double> residual_history;
    /// GMRES: index into residual_history where each restart cycle begins.
    std::vector<int> cycle_starts;
};

struct SolveResult {
    std::vector<double> x;
    SolveReport report;
};

/// Relative residual ||b - Ax|| / ||b|| (||r|| when b = 0).
double relative_residual(const CsrMatrix& a, std::span<const double> b, std::span<const double> x);

SolveResult cg_solve(const CsrMatrix& a, std::span<const double> b, const PrecondConfig& precond,
                     const SolverConfig& cfg);
SolveResult gmres_solve(const CsrMatrix& a, std::span<const double> b, const PrecondConfig& precond,
                        const SolverConfig& cfg);
/// x <- x + M^{-1}(b - A x); with an SOR preconditioner this is classical
/// stationary SOR.
SolveResult richardson_solve(const CsrMatrix& a, std::span<const double> b, const PrecondConfig& precond,
                             const SolverConfig& cfg);

/// Dispatches on cfg.method.
SolveResult solve(const CsrMatrix& a, std::span<const double> b, const PrecondConfig& precond,
                  const SolverConfig& cfg);

// Same solvers against an already built preconditioner (no setup time).
SolveResult cg_solve(const CsrMatrix& a, std::span<const double> b, const Preconditioner& m,
                     const SolverConfig& cfg);
SolveResult gmres_solve(const CsrMatrix& a, std::span<const double> b, const Preconditioner& m,
                        const SolverConfig& cfg);
SolveResult richardson_solve(const CsrMatrix& a, std::span<const double> b, const Preconditioner& m,
                             const SolverConfig& cfg);

struct ConditionEstimate {
    double value = 1.0;
    double sigma_max = 1.0;
    double sigma_min = 1.0;
    int steps = 0;
    bool capped = false;  ///< sigma_min fell below 1e-14 sigma_max
};

inline constexpr double kConditionCap = 1e14;

/// Runs min(n, max_steps) Arnoldi steps on M^{-1}A from a fixed pseudorandom
/// start vector and returns sigma_max / sigma_min of the Hessenberg matrix.
ConditionEstimate estimate_condition(const CsrMatrix& a, const PrecondConfig& precond, int max_steps = 60);
ConditionEstimate estimate_condition(const CsrMatrix& a, const Preconditioner& m, int max_steps = 60);

/// CSV row: problem_id,method,precond,param,iterations,time_s,relres,converged
std::string solve_report_csv_header();
std::string solve_report_csv_row(std::string_view problem_id, SolverMethod method, const PrecondConfig& precond,
                                 double param, const SolveReport& r);

} // namespace symmap
