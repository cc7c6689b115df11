#include "symmap/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "symmap/parallel.hpp"

namespace symmap {

std::string_view to_string(ObjectiveKind k) {
    switch (k) {
    case ObjectiveKind::Time: return "time";
    case ObjectiveKind::Iterations: return "iters";
    case ObjectiveKind::ConditionNumber: return "cond";
    case ObjectiveKind::Hybrid: return "hybrid";
    }
    return "unknown";
}

ObjectiveKind parse_objective_kind(std::string_view s) {
    if (s == "time") return ObjectiveKind::Time;
    if (s == "iters" || s == "iterations") return ObjectiveKind::Iterations;
    if (s == "cond" || s == "condition") return ObjectiveKind::ConditionNumber;
    if (s == "hybrid") return ObjectiveKind::Hybrid;
    throw std::invalid_argument("unknown objective '" + std::string(s) + "'");
}

void Objective::validate() const {
    if (kind != ObjectiveKind::Hybrid) return;
    if (w_cond < 0.0 || w_time < 0.0 || w_iters < 0.0)
        throw std::invalid_argument("hybrid objective weights must be >= 0");
    if (w_cond == 0.0 && w_time == 0.0 && w_iters == 0.0)
        throw std::invalid_argument("hybrid objective weights must not all be zero");
}

bool Objective::deterministic() const {
    switch (kind) {
    case ObjectiveKind::Time: return false;
    case ObjectiveKind::Hybrid: return w_time == 0.0;
    default: return true;
    }
}

PrecondConfig with_param(PrecondConfig cfg, double param) {
    switch (cfg.kind) {
    case PrecondKind::Sor:
    case PrecondKind::Ssor: cfg.omega = param; break;
    case PrecondKind::Amg: cfg.theta = param; break;
    default: throw std::invalid_argument("preconditioner '" + std::string(to_string(cfg.kind)) + "' has no tunable parameter");
    }
    return cfg;
}

PrecondConfig with_params(PrecondConfig cfg, double theta, double omega) {
    if (cfg.kind != PrecondKind::Amg) throw std::invalid_argument("two-parameter mode requires the AMG preconditioner");
    cfg.smoother = AmgSmoother::Sor;
    cfg.theta = theta;
    cfg.omega = omega;
    return cfg;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

std::optional<double> objective_eval(const ProblemInstance& p, const EvalSettings& s, const PrecondConfig& cfg) {
    s.objective.validate();
    const Objective& obj = s.objective;
    const bool need_cond = obj.kind == ObjectiveKind::ConditionNumber ||
                           (obj.kind == ObjectiveKind::Hybrid && obj.w_cond > 0.0);
    const bool need_time = obj.kind == ObjectiveKind::Time || (obj.kind == ObjectiveKind::Hybrid && obj.w_time > 0.0);
    const bool need_iters = obj.kind == ObjectiveKind::Iterations ||
                            (obj.kind == ObjectiveKind::Hybrid && obj.w_iters > 0.0);
    try {
        double cond = 0.0, time = 0.0, iters = 0.0;
        if (need_cond) cond = estimate_condition(p.a, cfg, s.cond_steps).value;
        if (need_time || need_iters) {
            const int runs = need_time ? std::max(1, s.repeats) : 1;
            std::vector<double> times;
            for (int r = 0; r < runs; ++r) {
                const SolveResult res = solve(p.a, p.b, cfg, s.solver);
                if (!res.report.converged) return std::nullopt;
                times.push_back(res.report.wall_time);
                iters = res.report.iterations;
            }
            time = median(times);
        }
        switch (obj.kind) {
        case ObjectiveKind::Time: return time;
        case ObjectiveKind::Iterations: return iters;
        case ObjectiveKind::ConditionNumber: return cond;
        case ObjectiveKind::Hybrid: return obj.w_cond * cond + obj.w_time * time + obj.w_iters * iters;
        }
    } catch (const std::exception&) {
        return std::nullopt;
    }
    return std::nullopt;
}

std::optional<double> objective_eval(const ProblemInstance& p, const EvalSettings& s, double param) {
    return objective_eval(p, s, with_param(s.precond, param));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double snap(double v) { return std::round(v * 1e12) / 1e12; }

std::vector<double> axis_points(const ParamRange& r, double from, double to, double step) {
    std::vector<double> pts;
    from = std::max(from, r.lo);
    to = std::min(to, r.hi);
    if (to < from) return pts;
    const auto count = static_cast<long>(std::floor((to - from) / step + 1e-9));
    for (long k = 0; k <= count; ++k) {
        const double v = snap(from + k * step);
        if (r.contains(v)) pts.push_back(v);
    }
    return pts;
}

// Points on the lattice lo + k*step inside [from, to].
std::vector<double> lattice_points(const ParamRange& r, double from, double to, double step) {
    const double k0 = std::ceil((std::max(from, r.lo) - r.lo) / step - 1e-9);
    return axis_points(r, r.lo + k0 * step, to, step);
}

class Memo {
public:
    explicit Memo(const ScalarObjective& f) : f_(f) {}

    double operator()(double x) {
        x = snap(x);
        auto it = seen_.find(x);
        if (it == seen_.end()) it = seen_.emplace(x, f_(x)).first;
        return it->second ? *it->second : kInf;
    }

    bool any_feasible() const {
        return std::any_of(seen_.begin(), seen_.end(), [](const auto& kv) { return kv.second.has_value(); });
    }

    SearchResult finish() const {
        if (!any_feasible()) throw NoFeasibleParameter("no feasible parameter: every evaluated point failed");
        double worst = -kInf;
        for (const auto& [x, v] : seen_)
            if (v) worst = std::max(worst, *v);
        const double penalty = worst > 0.0 ? kPenaltyFactor * worst : worst + kPenaltyFactor * (std::abs(worst) + 1.0);
        SearchResult res;
        double best = kInf;
        for (const auto& [x, v] : seen_) {
            res.evaluated.push_back({x, 0.0, v ? *v : penalty, v.has_value()});
            if (v && *v < best) {
                best = *v;
                res.param = x;
            }
        }
        res.value = best;
        return res;
    }

private:
    const ScalarObjective& f_;
    std::map<double, std::optional<double>> seen_;
};

void check_steps(double coarse, double fine) {
    if (!(coarse > 0.0) || !(fine > 0.0)) throw std::invalid_argument("grid steps must be > 0");
    if (!(fine < coarse)) throw std::invalid_argument("fine step must be smaller than the coarse step");
}

void check_range(const ParamRange& r) {
    if (!(r.lo < r.hi)) throw std::invalid_argument("search range requires lo < hi");
}

} // namespace

SearchResult adaptive_grid_search(const ScalarObjective& f, ParamRange range, double coarse_step, double fine_step) {
    check_range(range);
    check_steps(coarse_step, fine_step);
    Memo memo(f);
    std::vector<std::pair<double, double>> coarse;  // (value, param)
    for (double x : axis_points(range, range.lo, range.hi, coarse_step)) coarse.push_back({memo(x), x});
    std::stable_sort(coarse.begin(), coarse.end());
    const std::size_t keep = std::min<std::size_t>(3, coarse.size());
    for (std::size_t k = 0; k < keep; ++k) {
        const double c = coarse[k].second;
        if (coarse[k].first == kInf && k > 0) break;
        for (double x : lattice_points(range, c - coarse_step, c + coarse_step, fine_step)) memo(x);
    }
    return memo.finish();
}

SearchResult binary_search_min(const ScalarObjective& f, ParamRange range, double precision, double fallback_coarse,
                               double fallback_fine) {
    check_range(range);
    if (!(precision > 0.0)) throw std::invalid_argument("precision must be > 0");
    Memo memo(f);
    double a = range.lo_open ? range.lo + precision : range.lo;
    double b = range.hi_open ? range.hi - precision : range.hi;
    double m = 0.5 * (a + b);
    auto fallback = [&] {
        SearchResult res = adaptive_grid_search(f, range, fallback_coarse, fallback_fine);
        res.used_fallback = true;
        return res;
    };
    while (0.5 * (b - a) > precision) {
        const double fa = memo(a), fm = memo(m), fb = memo(b);
        if (fa == kInf && fm == kInf && fb == kInf) return fallback();
        if (fa < fm && fb < fm) return fallback();
        if (fa <= fm && fa <= fb) {
            b = m;
            m = 0.5 * (a + m);
        } else if (fb < fm && fb < fa) {
            a = m;
            m = 0.5 * (m + b);
        } else {
            const double q1 = 0.5 * (a + m), q3 = 0.5 * (m + b);
            const double f1 = memo(q1), f3 = memo(q3);
            if (f1 <= fm && f1 <= f3) {
                b = m;
                m = q1;
            } else if (f3 < fm && f3 < f1) {
                a = m;
                m = q3;
            } else {
                a = q1;
                b = q3;
            }
        }
    }
    memo(a);
    memo(m);
    memo(b);
    return memo.finish();
}

SearchResult product_grid_search(const PairObjective& f, ParamRange r1, ParamRange r2, double coarse_step,
                                 double fine_step) {
    check_steps(coarse_step, fine_step);
    if (r1.lo > r1.hi || r2.lo > r2.hi) throw std::invalid_argument("search range requires lo <= hi");
    std::map<std::pair<double, double>, std::optional<double>> seen;
    auto eval = [&](double x, double y) {
        const auto key = std::make_pair(snap(x), snap(y));
        auto it = seen.find(key);
        if (it == seen.end()) it = seen.emplace(key, f(key.first, key.second)).first;
        return it->second ? *it->second : kInf;
    };
    auto points = [&](const ParamRange& r, double from, double to, double step) {
        if (r.lo == r.hi) return std::vector<double>{r.lo};
        return lattice_points(r, from, to, step);
    };
    double bx = 0.0, by = 0.0, bv = kInf;
    bool have = false;
    auto sweep = [&](double cx, double cy, double radius, double step) {
        for (double x : points(r1, cx - radius, cx + radius, step))
            for (double y : points(r2, cy - radius, cy + radius, step)) {
                const double v = eval(x, y);
                if (!have || v < bv || (v == bv && std::make_pair(x, y) < std::make_pair(bx, by))) {
                    bx = x;
                    by = y;
                    bv = v;
                    have = true;
                }
            }
    };
    const double span = std::max(r1.hi - r1.lo, r2.hi - r2.lo);
    sweep(0.5 * (r1.lo + r1.hi), 0.5 * (r2.lo + r2.hi), span, coarse_step);
    const double mid_step = coarse_step / 10.0;
    if (mid_step > fine_step) {
        sweep(bx, by, coarse_step, mid_step);
        sweep(bx, by, mid_step, fine_step);
    } else {
        sweep(bx, by, coarse_step, fine_step);
    }

    double worst = -kInf;
    for (const auto& [k, v] : seen)
        if (v) worst = std::max(worst, *v);
    if (worst == -kInf) throw NoFeasibleParameter("no feasible parameter: every evaluated point failed");
    const double penalty = worst > 0.0 ? kPenaltyFactor * worst : worst + kPenaltyFactor * (std::abs(worst) + 1.0);
    SearchResult res;
    for (const auto& [k, v] : seen) res.evaluated.push_back({k.first, k.second, v ? *v : penalty, v.has_value()});
    res.param = bx;
    res.param2 = by;
    res.value = bv;
    return res;
}

std::string_view to_string(SearchMethod m) { return m == SearchMethod::Grid ? "grid" : "binary"; }

SearchMethod parse_search_method(std::string_view s) {
    if (s == "grid") return SearchMethod::Grid;
    if (s == "binary") return SearchMethod::Binary;
    throw std::invalid_argument("unknown search method '" + std::string(s) + "'");
}

void SearchConfig::validate() const {
    if (!(lo < hi)) throw std::invalid_argument("search range requires lo < hi");
    if (two_param && !(lo2 <= hi2)) throw std::invalid_argument("second search range requires lo <= hi");
    check_steps(coarse_step, fine_step);
    if (!(precision > 0.0)) throw std::invalid_argument("precision must be > 0");
}

ParamRange search_range(PrecondKind kind, double lo, double hi) {
    const ParamRange legal = legal_param_range(kind);
    if (!legal.lo_open && !legal.hi_open && legal.lo == legal.hi)
        throw std::invalid_argument("preconditioner '" + std::string(to_string(kind)) + "' has no tunable parameter");
    ParamRange r;
    r.lo = std::max(lo, legal.lo);
    r.hi = std::min(hi, legal.hi);
    r.lo_open = r.lo == legal.lo && legal.lo_open;
    r.hi_open = r.hi == legal.hi && legal.hi_open;
    if (r.lo > r.hi) throw std::invalid_argument("search range does not intersect the legal parameter range");
    return r;
}

SearchResult search_instance(const ProblemInstance& p, const EvalSettings& s, const SearchConfig& sc) {
    sc.validate();
    if (sc.two_param) {
        const ParamRange r1 = search_range(PrecondKind::Amg, sc.lo, sc.hi);
        const ParamRange r2 = search_range(PrecondKind::Sor, sc.lo2, sc.hi2);
        const PairObjective f = [&](double theta, double omega) {
            return objective_eval(p, s, with_params(s.precond, theta, omega));
        };
        return product_grid_search(f, r1, r2, sc.coarse_step, sc.fine_step);
    }
    const ParamRange r = search_range(s.precond.kind, sc.lo, sc.hi);
    const ScalarObjective f = [&](double x) { return objective_eval(p, s, x); };
    if (sc.method == SearchMethod::Binary) return binary_search_min(f, r, sc.precision, sc.coarse_step, sc.fine_step);
    return adaptive_grid_search(f, r, sc.coarse_step, sc.fine_step);
}

std::size_t default_train_count(std::size_t n) {
    return static_cast<std::size_t>(std::llround(5.0 * static_cast<double>(n) / 6.0));
}

void assign_split(ParamDataset& ds, std::uint64_t seed, long test_count) {
    const std::size_t n = ds.rows.size();
    std::size_t n_train = default_train_count(n);
    if (test_count >= 0) {
        n_train = n - std::min(n, static_cast<std::size_t>(test_count));
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(seed, 0x5911u));
    for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(perm[i - 1], perm[pick(rng)]);
    }
    ds.train.assign(perm.begin(), perm.begin() + static_cast<long>(n_train));
    ds.test.assign(perm.begin() + static_cast<long>(n_train), perm.end());
    std::sort(ds.train.begin(), ds.train.end());
    std::sort(ds.test.begin(), ds.test.end());
}

namespace {

std::string describe(const Objective& o) {
    if (o.kind != ObjectiveKind::Hybrid) return std::string(to_string(o.kind));
    std::ostringstream os;
    os << "hybrid(w_cond=" << o.w_cond << ",w_time=" << o.w_time << ",w_iters=" << o.w_iters << ")";
    return os.str();
}

std::string describe(const SearchConfig& s) {
    std::ostringstream os;
    os << to_string(s.method) << " range=[" << s.lo << "," << s.hi << "] coarse=" << s.coarse_step
       << " fine=" << s.fine_step;
    if (s.method == SearchMethod::Binary) os << " precision=" << s.precision;
    if (s.two_param) os << " range2=[" << s.lo2 << "," << s.hi2 << "]";
    return os.str();
}

} // namespace

ParamDataset build_dataset(const std::vector<ProblemInstance>& problems, const DatasetConfig& cfg) {
    cfg.eval.objective.validate();
    cfg.search.validate();
    const std::size_t n = problems.size();
    std::vector<std::optional<DatasetRow>> rows(n);
    std::vector<std::string> errors(n);

    auto run_one = [&](std::size_t i) {
        try {
            const SearchResult r = search_instance(problems[i], cfg.eval, cfg.search);
            DatasetRow row;
            row.features = problems[i].features;
            row.targets.push_back(r.param);
            if (cfg.search.two_param) row.targets.push_back(r.param2);
            row.objective_value = r.value;
            rows[i] = std::move(row);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };

    if (cfg.jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) run_one(i);
    } else {
        const int threads = cfg.jobs > 0 ? cfg.jobs : max_threads();
        (void)threads;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
        for (long i = 0; i < static_cast<long>(n); ++i) run_one(static_cast<std::size_t>(i));
    }

    ParamDataset ds;
    if (!problems.empty()) {
        ds.family = std::string(to_string(problems.front().family));
        ds.feature_names = feature_names(problems.front().family);
    }
    ds.precond = std::string(to_string(cfg.eval.precond.kind));
    ds.objective = describe(cfg.eval.objective);
    ds.search = describe(cfg.search);
    ds.seed = cfg.seed;
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i])
            ds.rows.push_back(std::move(*rows[i]));
        else
            ds.log.push_back("instance " + std::to_string(i) + " dropped: " + errors[i]);
    }
    assign_split(ds, cfg.seed, cfg.test_count);
    return ds;
}

} // namespace symmap
