#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "symmap/expr.hpp"

namespace symmap {

RewardResult reward_from_predictions(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size()) throw std::invalid_argument("prediction and target lengths differ");
    RewardResult r;
    const std::size_t n = y.size();
    for (double v : y_hat)
        if (!std::isfinite(v)) {
            r.invalid = true;
            return r;
        }
    if (n == 0) {
        r.degenerate = true;
        return r;
    }
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double var = 0.0, sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        var += (y[i] - mean) * (y[i] - mean);
        sse += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    }
    const double sigma = std::sqrt(var / static_cast<double>(n));
    if (!(sigma > 0.0)) {
        r.degenerate = true;
        return r;
    }
    r.nrmse = std::sqrt(sse / static_cast<double>(n)) / sigma;
    r.reward = 1.0 / (1.0 + r.nrmse);
    return r;
}

RewardResult reward(const Expression& e, const FitData& data) {
    const auto pred = eval_batch(e, data);
    if (!pred) {
        RewardResult r;
        r.invalid = true;
        return r;
    }
    return reward_from_predictions(data.y, *pred);
}

namespace {

double nrmse_of(Expression& e, std::span<const double> xi, const FitData& data) {
    std::copy(xi.begin(), xi.end(), e.constants.begin());
    const RewardResult r = reward(e, data);
    return r.invalid || r.degenerate ? std::numeric_limits<double>::infinity() : r.nrmse;
}

} // namespace

Expression optimize_constants(const Expression& e, const FitData& data, const ConstantFitSettings& s) {
    const std::size_t m = e.placeholder_count();
    if (m == 0) return e;
    Expression work = e;
    work.constants.assign(m, 1.0);

    using Point = std::vector<double>;
    std::vector<Point> simplex(m + 1, Point(m, 1.0));
    for (std::size_t i = 0; i < m; ++i) simplex[i + 1][i] += s.initial_step;
    std::vector<double> f(m + 1);
    for (std::size_t i = 0; i <= m; ++i) f[i] = nrmse_of(work, simplex[i], data);
    const double f_ones = f[0];

    const bool any_finite = std::any_of(f.begin(), f.end(), [](double v) { return std::isfinite(v); });
    if (!any_finite) return e;
    std::vector<std::size_t> order(m + 1);
    Point centroid(m), trial(m), trial2(m);
    int iter = 0;
    bool saw_finite = any_finite;
    for (; iter < s.max_iters; ++iter) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[m - 1];
        if (std::isfinite(f[worst])) {
            double diam = 0.0;
            for (std::size_t i = 0; i <= m; ++i)
                for (std::size_t k = 0; k < m; ++k) diam = std::max(diam, std::abs(simplex[i][k] - simplex[best][k]));
            if (f[worst] - f[best] <= s.f_tol * std::max(f[best], 1e-300) + 1e-300 && diam <= s.x_tol) break;
        }
        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= m; ++i)
            if (i != worst)
                for (std::size_t k = 0; k < m; ++k) centroid[k] += simplex[i][k] / static_cast<double>(m);

        for (std::size_t k = 0; k < m; ++k) trial[k] = centroid[k] + (centroid[k] - simplex[worst][k]);
        const double fr = nrmse_of(work, trial, data);
        saw_finite = saw_finite || std::isfinite(fr);
        if (fr < f[best]) {
            for (std::size_t k = 0; k < m; ++k) trial2[k] = centroid[k] + 2.0 * (centroid[k] - simplex[worst][k]);
            const double fe = nrmse_of(work, trial2, data);
            if (fe < fr) {
                simplex[worst] = trial2;
                f[worst] = fe;
            } else {
                simplex[worst] = trial;
                f[worst] = fr;
            }
            continue;
        }
        if (fr < f[second]) {
            simplex[worst] = trial;
            f[worst] = fr;
            continue;
        }
        const bool outside = fr < f[worst];
        for (std::size_t k = 0; k < m; ++k)
            trial2[k] = outside ? centroid[k] + 0.5 * (trial[k] - centroid[k])
                                : centroid[k] + 0.5 * (simplex[worst][k] - centroid[k]);
        const double fc = nrmse_of(work, trial2, data);
        if (fc < std::min(fr, f[worst])) {
            simplex[worst] = trial2;
            f[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == best) continue;
            for (std::size_t k = 0; k < m; ++k) simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
            f[i] = nrmse_of(work, simplex[i], data);
        }
    }

    Expression out = e;
    if (!saw_finite) return out;
    const auto best = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
    if (f[best] < f_ones) {
        out.constants = simplex[best];
    } else {
        out.constants.assign(m, 1.0);
    }
    return out;
}

std::vector<ScoredExpression> score_batch_serial(const std::vector<Expression>& exprs, const FitData& data,
                                                 bool fit_constants, const ConstantFitSettings& s) {
    std::vector<ScoredExpression> out(exprs.size());
    for (std::size_t i = 0; i < exprs.size(); ++i) {
        out[i].expr = fit_constants ? optimize_constants(exprs[i], data, s) : exprs[i];
        out[i].result = reward(out[i].expr, data);
    }
    return out;
}

std::vector<ScoredExpression> score_batch(const std::vector<Expression>& exprs, const FitData& data,
                                          bool fit_constants, const ConstantFitSettings& s) {
    std::vector<ScoredExpression> out(exprs.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (long i = 0; i < static_cast<long>(exprs.size()); ++i) {
        const auto k = static_cast<std::size_t>(i);
        out[k].expr = fit_constants ? optimize_constants(exprs[k], data, s) : exprs[k];
        out[k].result = reward(out[k].expr, data);
    }
    return out;
}

} // namespace symmap
