#pragma once

// Parameter policies used at solve time and the baseline benchmark.

#include <span>
#include <string>
#include <vector>

#include "symmap/datagen.hpp"
#include "symmap/expr.hpp"
#include "symmap/krylov.hpp"
#include "symmap/problems.hpp"

namespace symmap {

enum class PolicyKind { None, Default, Fixed, OptimalConstant, Symbolic, PerInstanceOptimal };

std::string_view to_string(PolicyKind k);

struct ParamPolicy {
    PolicyKind kind = PolicyKind::Default;
    std::string name;
    double value = 1.0;             ///< Fixed; filled in for OptimalConstant by bench_compare
    Expression expr;                ///< Symbolic
    std::vector<double> lookup;     ///< PerInstanceOptimal, indexed like the benchmark problems

    static ParamPolicy none();
    static ParamPolicy default_param();
    static ParamPolicy fixed(double v);
    static ParamPolicy optimal_constant();
    static ParamPolicy symbolic(Expression e, std::string name = "symmap");
    static ParamPolicy per_instance_optimal(std::vector<double> values);
};

struct ClampRange {
    double lo;
    double hi;
};

/// SOR/SSOR: [0.05, 1.95]; AMG theta: [0, 0.95].
ClampRange clamp_range(PrecondKind kind);
/// omega = 1 for SOR/SSOR, theta = 0 for AMG.
double default_param(PrecondKind kind);

/// Parameter for one instance, always inside clamp_range(kind). Invalid
/// symbolic output maps to default_param(kind).
double predict_param(const ParamPolicy& p, PrecondKind kind, std::span<const double> features,
                     std::size_t instance = 0);

struct BenchConfig {
    PrecondConfig precond;     ///< kind plus fixed fields; the policy sets omega/theta
    SolverConfig solver;
    bool measure_condition = false;
    int cond_steps = 60;
    double optimal_step = 0.05;                         ///< grid for the optimal-constant baseline
    ObjectiveKind optimal_objective = ObjectiveKind::Iterations;
    int jobs = 0;
};

struct BenchCell {
    std::string policy;
    std::size_t instance = 0;
    double param = 0.0;
    int iterations = 0;
    double time = 0.0;
    double condition = 0.0;
    bool converged = false;
};

struct BenchRow {
    std::string policy;
    std::size_t n = 0;
    double mean_time = 0.0;
    double median_time = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double var = 0.0;
    double mean_iters = 0.0;
    double mean_cond = 0.0;
    std::size_t n_failed = 0;
};

struct BenchReport {
    std::vector<BenchRow> rows;    ///< one per policy, input order
    std::vector<BenchCell> cells;  ///< policy-major
    double optimal_constant = 0.0; ///< value chosen for an OptimalConstant policy, if any
};

/// Same instances for every policy. Time statistics use converged cells only;
/// iteration and condition means use every cell.
BenchReport bench_compare(const std::vector<ProblemInstance>& problems, const std::vector<ParamPolicy>& policies,
                          const BenchConfig& cfg);

/// Shared constant minimizing the mean objective over `problems` on a grid.
double optimal_constant(const std::vector<ProblemInstance>& problems, const BenchConfig& cfg);

std::string bench_csv_header();
std::string bench_csv_row(const BenchRow& r);
void write_bench_csv(const std::string& path, const BenchReport& r);

} // namespace symmap
