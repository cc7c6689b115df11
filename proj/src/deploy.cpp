#include "symmap/deploy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "symmap/parallel.hpp"

namespace symmap {

std::string_view to_string(PolicyKind k) {
    switch (k) {
    case PolicyKind::None: return "none";
    case PolicyKind::Default: return "default";
    case PolicyKind::Fixed: return "fixed";
    case PolicyKind::OptimalConstant: return "optimal_constant";
    case PolicyKind::Symbolic: return "symbolic";
    case PolicyKind::PerInstanceOptimal: return "per_instance_optimal";
    }
    return "unknown";
}

ParamPolicy ParamPolicy::none() { return {PolicyKind::None, "none", 0.0, {}, {}}; }
ParamPolicy ParamPolicy::default_param() { return {PolicyKind::Default, "default", 0.0, {}, {}}; }

ParamPolicy ParamPolicy::fixed(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "fixed(%g)", v);
    return {PolicyKind::Fixed, buf, v, {}, {}};
}

ParamPolicy ParamPolicy::optimal_constant() { return {PolicyKind::OptimalConstant, "optimal_constant", 0.0, {}, {}}; }

ParamPolicy ParamPolicy::symbolic(Expression e, std::string name) {
    return {PolicyKind::Symbolic, std::move(name), 0.0, std::move(e), {}};
}

ParamPolicy ParamPolicy::per_instance_optimal(std::vector<double> values) {
    return {PolicyKind::PerInstanceOptimal, "per_instance_optimal", 0.0, {}, std::move(values)};
}

ClampRange clamp_range(PrecondKind kind) {
    switch (kind) {
    case PrecondKind::Sor:
    case PrecondKind::Ssor: return {0.05, 1.95};
    case PrecondKind::Amg: return {0.0, 0.95};
    default: return {0.0, 0.0};
    }
}

double default_param(PrecondKind kind) { return kind == PrecondKind::Amg ? 0.0 : 1.0; }

double predict_param(const ParamPolicy& p, PrecondKind kind, std::span<const double> features, std::size_t instance) {
    const ClampRange r = clamp_range(kind);
    const double dflt = default_param(kind);
    double v = dflt;
    switch (p.kind) {
    case PolicyKind::None:
    case PolicyKind::Default: v = dflt; break;
    case PolicyKind::Fixed:
    case PolicyKind::OptimalConstant: v = p.value; break;
    case PolicyKind::Symbolic: {
        std::optional<double> out;
        try {
            out = eval_expr(p.expr, features);
        } catch (const std::invalid_argument&) {
            out.reset();
        }
        v = out ? *out : dflt;
        break;
    }
    case PolicyKind::PerInstanceOptimal:
        if (instance >= p.lookup.size()) throw std::out_of_range("per-instance policy has no entry for instance " + std::to_string(instance));
        v = p.lookup[instance];
        break;
    }
    if (!std::isfinite(v)) v = dflt;
    return std::clamp(v, r.lo, r.hi);
}

namespace {

double quantile_sorted(const std::vector<double>& s, double q) {
    if (s.empty()) return 0.0;
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

PrecondConfig config_for(const BenchConfig& cfg, const ParamPolicy& p, double param) {
    if (p.kind == PolicyKind::None) return PrecondConfig{};
    return with_param(cfg.precond, param);
}

BenchCell run_cell(const ProblemInstance& prob, const BenchConfig& cfg, const ParamPolicy& p, std::size_t idx) {
    BenchCell c;
    c.policy = p.name;
    c.instance = idx;
    c.param = p.kind == PolicyKind::None ? 0.0 : predict_param(p, cfg.precond.kind, prob.features, idx);
    const PrecondConfig pc = config_for(cfg, p, c.param);
    try {
        const SolveResult r = solve(prob.a, prob.b, pc, cfg.solver);
        c.iterations = r.report.iterations;
        c.time = r.report.wall_time;
        c.converged = r.report.converged;
        if (cfg.measure_condition) c.condition = estimate_condition(prob.a, pc, cfg.cond_steps).value;
    } catch (const std::exception&) {
        c.converged = false;
        c.iterations = cfg.solver.max_iters;
    }
    return c;
}

BenchRow aggregate(const std::string& name, const std::vector<BenchCell>& cells) {
    BenchRow r;
    r.policy = name;
    r.n = cells.size();
    std::vector<double> times;
    double iters = 0.0, cond = 0.0;
    for (const BenchCell& c : cells) {
        iters += c.iterations;
        cond += c.condition;
        if (c.converged)
            times.push_back(c.time);
        else
            ++r.n_failed;
    }
    if (r.n) {
        r.mean_iters = iters / static_cast<double>(r.n);
        r.mean_cond = cond / static_cast<double>(r.n);
    }
    if (!times.empty()) {
        std::sort(times.begin(), times.end());
        double sum = 0.0;
        for (double t : times) sum += t;
        r.mean_time = sum / static_cast<double>(times.size());
        r.median_time = quantile_sorted(times, 0.5);
        r.q1 = quantile_sorted(times, 0.25);
        r.q3 = quantile_sorted(times, 0.75);
        if (times.size() > 1) {
            double ss = 0.0;
            for (double t : times) ss += (t - r.mean_time) * (t - r.mean_time);
            r.var = ss / static_cast<double>(times.size() - 1);
        }
    }
    return r;
}

} // namespace

double optimal_constant(const std::vector<ProblemInstance>& problems, const BenchConfig& cfg) {
    if (problems.empty()) throw std::invalid_argument("optimal constant needs at least one problem");
    const ClampRange cr = clamp_range(cfg.precond.kind);
    const ParamRange range = search_range(cfg.precond.kind, cr.lo, cr.hi);
    EvalSettings s;
    s.precond = cfg.precond;
    s.solver = cfg.solver;
    s.objective.kind = cfg.optimal_objective;
    s.repeats = 1;
    s.cond_steps = cfg.cond_steps;

    std::vector<double> grid;
    // multiples of the step inside the range
    const auto first = static_cast<long>(std::ceil(range.lo / cfg.optimal_step - 1e-9));
    const auto last = static_cast<long>(std::floor(range.hi / cfg.optimal_step + 1e-9));
    for (long k = first; k <= last; ++k) {
        const double v = std::round(k * cfg.optimal_step * 1e12) / 1e12;
        if (range.contains(v)) grid.push_back(v);
    }
    if (grid.empty()) throw std::invalid_argument("optimal-constant grid step is wider than the parameter range");
    // infeasible cells count as a failed solve at the iteration cap
    const double fail_value = cfg.optimal_objective == ObjectiveKind::Iterations ? cfg.solver.max_iters
                                                                                   : std::numeric_limits<double>::infinity();
    std::vector<double> totals(grid.size(), 0.0);
    const int threads = cfg.optimal_objective == ObjectiveKind::Time ? 1 : (cfg.jobs > 0 ? cfg.jobs : max_threads());
    (void)threads;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (long i = 0; i < static_cast<long>(problems.size()); ++i) {
        std::vector<double> mine(grid.size());
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const auto v = objective_eval(problems[static_cast<std::size_t>(i)], s, grid[g]);
            mine[g] = v ? *v : fail_value;
        }
#pragma omp critical(symmap_optimal_constant)
        for (std::size_t g = 0; g < grid.size(); ++g) totals[g] += mine[g];
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g)
        if (totals[g] < totals[best]) best = g;
    return grid.at(best);
}

BenchReport bench_compare(const std::vector<ProblemInstance>& problems, const std::vector<ParamPolicy>& policies,
                          const BenchConfig& cfg) {
    if (problems.empty()) throw std::invalid_argument("benchmark needs at least one problem");
    if (policies.empty()) throw std::invalid_argument("benchmark needs at least one policy");
    cfg.solver.validate();

    BenchReport rep;
    std::vector<ParamPolicy> pol = policies;
    for (ParamPolicy& p : pol) {
        if (p.kind == PolicyKind::None) continue;
        if (cfg.precond.kind == PrecondKind::None || cfg.precond.kind == PrecondKind::Jacobi)
            throw std::invalid_argument("parameter policies need a SOR, SSOR or AMG preconditioner");
        if (p.kind == PolicyKind::OptimalConstant) {
            rep.optimal_constant = optimal_constant(problems, cfg);
            p.value = rep.optimal_constant;
        }
        if (p.kind == PolicyKind::PerInstanceOptimal && p.lookup.size() != problems.size())
            throw std::invalid_argument("per-instance policy size does not match the problem count");
    }

    const std::size_t np = pol.size(), ni = problems.size();
    std::vector<BenchCell> cells(np * ni);
    // timing objectives run one cell at a time
    const int threads = cfg.optimal_objective == ObjectiveKind::Time ? 1 : (cfg.jobs > 0 ? cfg.jobs : max_threads());
    (void)threads;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (long i = 0; i < static_cast<long>(ni); ++i)
        for (std::size_t k = 0; k < np; ++k) {
            const auto idx = static_cast<std::size_t>(i);
            cells[k * ni + idx] = run_cell(problems[idx], cfg, pol[k], idx);
        }

    for (std::size_t k = 0; k < np; ++k) {
        const std::vector<BenchCell> mine(cells.begin() + static_cast<long>(k * ni),
                                          cells.begin() + static_cast<long>((k + 1) * ni));
        rep.rows.push_back(aggregate(pol[k].name, mine));
    }
    rep.cells = std::move(cells);
    return rep;
}

std::string bench_csv_header() {
    return "policy,n,mean_time_s,median_time_s,q1,q3,var,mean_iters,mean_cond,n_failed";
}

std::string bench_csv_row(const BenchRow& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu", r.policy.c_str(), r.n, r.mean_time,
                  r.median_time, r.q1, r.q3, r.var, r.mean_iters, r.mean_cond, r.n_failed);
    return buf;
}

void write_bench_csv(const std::string& path, const BenchReport& r) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << bench_csv_header() << '\n';
    for (const BenchRow& row : r.rows) out << bench_csv_row(row) << '\n';
}

} // namespace symmap
