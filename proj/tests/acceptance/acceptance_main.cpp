#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symmap/datagen.hpp"
#include "symmap/deploy.hpp"
#include "symmap/krylov.hpp"
#include "symmap/policy.hpp"
#include "symmap/precond.hpp"
#include "symmap/problems.hpp"

using namespace symmap;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kOracleTol = 1e-12;
constexpr double kOmegaTol = 0.05;
constexpr double kCondRelTol = 0.05;
constexpr double kFdStep = 1e-5;
constexpr double kFdRelTol = 1e-5;
constexpr double kToyRelTol = 0.05;
constexpr double kDefaultRatio = 0.90;
constexpr double kOptimalRatio = 1.05;
constexpr double kRecoveryNrmse = 1e-3;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

CsrMatrix sparse(const Eigen::MatrixXd& m) {
    std::vector<Triplet> t;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (m(i, j) != 0.0) t.push_back({static_cast<index_t>(i), static_cast<index_t>(j), m(i, j)});
    return csr_from_triplets(static_cast<index_t>(m.rows()), static_cast<index_t>(m.cols()), t);
}

Eigen::MatrixXd random_dominant(std::mt19937_64& rng, int n, bool symmetric) {
    std::uniform_real_distribution<double> u(-1.0, 1.0), p(0.0, 1.0);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && p(rng) < 0.4) m(i, j) = u(rng);
    if (symmetric) m = (0.5 * (m + m.transpose())).eval();
    for (int i = 0; i < n; ++i) m(i, i) = m.row(i).cwiseAbs().sum() + 1.0 + p(rng);
    return m;
}

// 1. relaxation preconditioners against dense forms
Outcome ac_oracles() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> w(0.05, 1.95), u(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::MatrixXd a = random_dominant(rng, 10, false);
        const Eigen::MatrixXd s = random_dominant(rng, 10, true);
        std::vector<double> r(10);
        for (double& v : r) v = u(rng);
        const Eigen::VectorXd re = Eigen::Map<const Eigen::VectorXd>(r.data(), 10);
        const double om = w(rng);

        const Eigen::MatrixXd d = a.diagonal().asDiagonal();
        const Eigen::MatrixXd l = a.triangularView<Eigen::StrictlyLower>();
        const Eigen::VectorXd want_sor = ((d + om * l) / om).partialPivLu().solve(re);
        const auto got_sor = sor_precond_apply(sparse(a), r, om, 1);

        const Eigen::MatrixXd ds = s.diagonal().asDiagonal();
        const Eigen::MatrixXd ls = s.triangularView<Eigen::StrictlyLower>();
        const Eigen::MatrixXd us = s.triangularView<Eigen::StrictlyUpper>();
        const Eigen::MatrixXd m = (ds + om * ls) * ds.inverse() * (ds + om * us) / (om * (2.0 - om));
        const Eigen::VectorXd want_ssor = m.partialPivLu().solve(re);
        const auto got_ssor = ssor_precond_apply(sparse(s), r, om);

        const Eigen::VectorXd gs = Eigen::Map<const Eigen::VectorXd>(got_sor.data(), 10);
        const Eigen::VectorXd gss = Eigen::Map<const Eigen::VectorXd>(got_ssor.data(), 10);
        worst = std::max(worst, (gs - want_sor).norm() / want_sor.norm());
        worst = std::max(worst, (gss - want_ssor).norm() / want_ssor.norm());
    }
    return {worst <= kOracleTol, fmt("max relative error %.3g over 100 systems", worst)};
}

// 2. classical SOR optimum on the model problem
Outcome ac_sor_optimum() {
    const std::vector<double> feats{0.5, -0.2, 0.3, 0.1, 1.0, 0.4, -0.3, 0.2};
    const ProblemInstance p = gen_poisson(feats, 16);
    EvalSettings s;
    s.precond.kind = PrecondKind::Sor;
    s.solver.method = SolverMethod::Richardson;
    s.solver.tolerance = 1e-6;
    s.solver.max_iters = 5000;
    s.objective.kind = ObjectiveKind::Iterations;
    s.repeats = 1;
    SearchConfig sc;
    sc.method = SearchMethod::Grid;
    const SearchResult r = search_instance(p, s, sc);
    const double want = 2.0 / (1.0 + std::sin(M_PI / 17.0));
    return {std::abs(r.param - want) <= kOmegaTol,
            fmt("omega %.4f vs %.4f (%.0f iterations)", r.param, want, r.value)};
}

// 3. condition estimate against dense SVD
Outcome ac_condition() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0), shift(0.05, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd g(50, 50);
        for (int i = 0; i < 50; ++i)
            for (int j = 0; j < 50; ++j) g(i, j) = u(rng);
        const Eigen::MatrixXd spd = g * g.transpose() + shift(rng) * Eigen::MatrixXd::Identity(50, 50);
        const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(spd).singularValues();
        const double want = sv(0) / sv(49);
        const double got = estimate_condition(sparse(spd), PrecondConfig{}).value;
        worst = std::max(worst, std::abs(got - want) / want);
    }
    const double kid = estimate_condition(identity_csr(50), PrecondConfig{}).value;
    return {worst <= kCondRelTol && kid == 1.0, fmt("max relative error %.3g, kappa(I) = %.17g", worst, kid)};
}

// 4. AMG strength threshold trend
Outcome ac_amg_theta() {
    const std::vector<double> feats{0.5, -0.2, 0.3, 0.1, 1.0, 0.4, -0.3, 0.2};
    const ProblemInstance p = gen_poisson(feats, 32);
    PrecondConfig c;
    c.kind = PrecondKind::Amg;
    c.theta = 0.0;
    const double k0 = estimate_condition(p.a, c).value;
    c.theta = 0.8;
    const double k8 = estimate_condition(p.a, c).value;
    return {k0 < k8, fmt("kappa %.6g at theta 0, %.6g at theta 0.8", k0, k8)};
}

// 5. score-function gradient and the risk-seeking estimator
Outcome ac_gradients() {
    PolicyModel m(Library::standard(3));
    m.init_uniform(5, 0.5);
    std::mt19937_64 rng(9);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Rollout r = sample_rollout(m, rng);
        const auto g = grad_log_prob(m, r);
        const auto actions = r.actions();
        std::uniform_int_distribution<std::size_t> pick(0, m.num_params() - 1);
        double num = 0.0, den = 0.0;
        for (int t = 0; t < 200; ++t) {
            const std::size_t i = pick(rng);
            const double keep = m.params()[i];
            m.params()[i] = keep + kFdStep;
            const double up = rollout_log_prob(m, actions);
            m.params()[i] = keep - kFdStep;
            const double dn = rollout_log_prob(m, actions);
            m.params()[i] = keep;
            const double fd = (up - dn) / (2.0 * kFdStep);
            num += (g[i] - fd) * (g[i] - fd);
            den += fd * fd;
        }
        worst = std::max(worst, std::sqrt(num / std::max(den, 1e-300)));
    }

    // Bernoulli policy p1 = sigmoid(theta), R(1) = 1, R(0) = 0.3. With
    // p1 < eps the tail objective is J = Q + E[(R - Q)^+] / eps, whose
    // gradient is (R1 - R0) p1 (1 - p1) / eps.
    const double eps = 0.05, p1 = 0.04, r1 = 1.0, r0 = 0.3;
    const std::size_t n = 100000;
    std::mt19937_64 toy(13);
    std::bernoulli_distribution draw(p1);
    std::vector<double> rewards(n), score(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool a = draw(toy);
        rewards[i] = a ? r1 : r0;
        score[i] = (a ? 1.0 : 0.0) - p1;  // d log p / d theta
    }
    const double q = empirical_quantile(rewards, eps);
    const auto w = risk_seeking_weights(rewards, q, eps);
    double est = 0.0;
    for (std::size_t i = 0; i < n; ++i) est += w[i] * score[i];
    const double want = (r1 - r0) * p1 * (1.0 - p1) / eps;
    const double toy_err = std::abs(est - want) / want;
    return {worst <= kFdRelTol && toy_err <= kToyRelTol,
            fmt("max FD relative error %.3g; toy gradient %.5g vs %.5g (%.2f%%)", worst, est, want, 100 * toy_err)};
}

struct Node {
    int id;
    std::vector<Node> kids;
};

Node build(const std::vector<Token>& t, std::size_t& pos) {
    Node n{t.at(pos).id(), {}};
    const int ar = t[pos++].arity();
    for (int k = 0; k < ar; ++k) n.kids.push_back(build(t, pos));
    return n;
}

bool is_const(int id) { return id == 8 || id == 9; }

bool sound(const Node& n) {
    if (n.kids.size() == 2 && is_const(n.kids[0].id) && is_const(n.kids[1].id)) return false;
    if (n.kids.size() == 1) {
        const int c = n.kids[0].id;
        if ((n.id == 6 && c == 7) || (n.id == 7 && c == 6)) return false;
    }
    for (const Node& k : n.kids)
        if (!sound(k)) return false;
    return true;
}

// 6. sampled expressions obey the search-space rules
Outcome ac_constraints() {
    std::size_t bad = 0, total = 0, longest = 0;
    for (int chunk = 0; chunk < 10; ++chunk) {
        PolicyModel m(Library::standard(3));
        m.init_uniform(100 + chunk, 0.1 + 0.3 * chunk);
        std::mt19937_64 rng(chunk);
        for (int k = 0; k < 1000; ++k, ++total) {
            const Expression e = sample_rollout(m, rng).expr;
            const std::size_t len = e.tokens.size();
            longest = std::max(longest, len);
            std::size_t pos = 0;
            const Node root = build(e.tokens, pos);
            if (len < 4 || len > 64 || pos != len || !sound(root)) ++bad;
        }
    }
    return {bad == 0, fmt("%zu of %zu expressions break a rule (longest %zu tokens)", bad, total, longest)};
}

FitData one_var(const std::function<double(double)>& f) {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 200; ++i) {
        const double v = 2.0 * i / 199.0;
        x.push_back({v});
        y.push_back(f(v));
    }
    return make_fit_data(x, y);
}

// 7. recovery of planted expressions
Outcome ac_recovery() {
    const FitData lin = one_var([](double x) { return x + 1.0; });
    const FitData rat = one_var([](double x) { return 1.0 + 1.0 / (x + 1.2); });
    const Library lib = Library::standard(1);
    int exact = 0, close = 0;
    std::string shown;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        TrainConfig cfg = train_preset("desk");
        cfg.seed = seed;
        const TrainResult a = train(lin, {}, lib, cfg);
        exact += a.best_train.reward >= 1.0 - 1e-10 ? 1 : 0;
        const TrainResult b = train(rat, {}, lib, cfg);
        close += b.best_train.nrmse < kRecoveryNrmse ? 1 : 0;
        if (seed == 1) shown = to_infix(b.best, true);
    }
    return {exact >= 4 && close >= 3,
            fmt("x1 + 1.0 exact in %d/5 seeds; rational target NRMSE < 1e-3 in %d/5 (seed 1: %s)", exact, close,
                shown.c_str())};
}

DatasetConfig sor_iterations_config() {
    DatasetConfig c;
    c.eval.precond.kind = PrecondKind::Sor;
    c.eval.solver.method = SolverMethod::Gmres;
    c.eval.solver.tolerance = 1e-7;
    c.eval.solver.max_iters = 10000;
    c.eval.objective.kind = ObjectiveKind::Iterations;
    c.eval.repeats = 1;
    c.search.lo = 0.0;
    c.search.hi = 2.0;
    return c;
}

// 8. learned SOR policy on held-out elliptic problems
Outcome ac_pipeline() {
    const auto train_set = generate_problems(Family::Elliptic, 64, 200, 7);
    const auto test_set = generate_problems(Family::Elliptic, 64, 50, 8);
    DatasetConfig dc = sor_iterations_config();
    dc.search.method = SearchMethod::Binary;
    dc.seed = 7;
    dc.test_count = 0;
    const ParamDataset ds = build_dataset(train_set, dc);
    TrainConfig tc = train_preset("desk");
    tc.seed = 1;
    const TrainResult tr = train(ds, tc);

    BenchConfig bc;
    bc.precond = dc.eval.precond;
    bc.solver = dc.eval.solver;
    bc.optimal_step = 0.05;
    const BenchReport rep = bench_compare(
        test_set,
        {ParamPolicy::default_param(), ParamPolicy::optimal_constant(), ParamPolicy::symbolic(tr.best)}, bc);
    const double dflt = rep.rows[0].mean_iters, opt = rep.rows[1].mean_iters, learned = rep.rows[2].mean_iters;
    return {learned <= kDefaultRatio * dflt && learned <= kOptimalRatio * opt,
            fmt("mean iterations: learned %.2f, default %.2f (ratio %.3f), optimal constant %.2f at omega %.2f "
                "(ratio %.3f); policy %s, train R %.4f",
                learned, dflt, learned / dflt, opt, rep.optimal_constant, learned / opt,
                to_infix(tr.best, true).c_str(), tr.best_train.reward)};
}

// 9. reward bounds and worked values
Outcome ac_reward() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0), mag(-300.0, 300.0);
    bool bounded = true;
    for (int k = 0; k < 20000; ++k) {
        const std::size_t n = 2 + static_cast<std::size_t>(k % 50);
        std::vector<double> y(n), yh(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = u(rng) * std::pow(10.0, mag(rng) / 10.0);
            yh[i] = u(rng) * std::pow(10.0, mag(rng) / 10.0);
        }
        if (k % 7 == 0) yh[0] = std::numeric_limits<double>::quiet_NaN();
        if (k % 11 == 0) y.assign(n, 3.0);
        const double r = reward_from_predictions(y, yh).reward;
        bounded = bounded && r >= 0.0 && r <= 1.0;
    }
    const std::vector<double> y{0.0, 2.0}, yh{1.0, 1.0};
    const double worked = reward_from_predictions(y, yh).reward;
    const FitData lin = one_var([](double x) { return x + 1.0; });
    const double exact = reward(parse_infix("(x1 + 1.0)"), lin).reward;
    return {bounded && exact == 1.0 && std::abs(worked - 0.5) <= 1e-15,
            fmt("fuzz bounded: %s; exact fit %.17g; worked example %.17g", bounded ? "yes" : "no", exact, worked)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 10. same seeds, same bytes
Outcome ac_reproducible() {
    const fs::path dir = fs::temp_directory_path() / "symmap_acceptance_repro";
    fs::create_directories(dir);
    std::vector<std::string> csv;
    std::vector<Expression> best;
    for (int run = 0; run < 2; ++run) {
        const auto problems = generate_problems(Family::Elliptic, 16, 40, 11);
        DatasetConfig dc = sor_iterations_config();
        dc.search.coarse_step = 0.05;
        dc.search.fine_step = 0.005;
        dc.seed = 11;
        dc.jobs = run == 0 ? 0 : 1;
        const ParamDataset ds = build_dataset(problems, dc);
        const fs::path path = dir / ("run" + std::to_string(run) + ".csv");
        write_dataset(path.string(), ds);
        csv.push_back(slurp(path));
        const ParamDataset back = read_dataset(path.string());
        TrainConfig tc = train_preset("desk");
        tc.seed = 5;
        best.push_back(train(back, tc).best);
    }
    const bool same_csv = !csv[0].empty() && csv[0] == csv[1];
    const bool same_expr = best[0] == best[1];
    return {same_csv && same_expr, fmt("dataset CSV %s (%zu bytes); best expression %s: %s", same_csv ? "identical" : "differs",
                                       csv[0].size(), same_expr ? "identical" : "differs",
                                       to_infix(best[0], true).c_str())};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::vector<int> only;
    app.add_option("--only", only, "criterion numbers to run")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> all{
        {1, "relaxation preconditioners match dense oracles", 5, ac_oracles},
        {2, "model-problem SOR optimum", 120, ac_sor_optimum},
        {3, "condition estimate", 30, ac_condition},
        {4, "AMG theta sensitivity", 120, ac_amg_theta},
        {5, "gradient correctness", 120, ac_gradients},
        {6, "constraint soundness", 60, ac_constraints},
        {7, "symbolic recovery", 900, ac_recovery},
        {8, "end-to-end desk pipeline", 2700, ac_pipeline},
        {9, "reward function", 5, ac_reward},
        {10, "reproducibility", 600, ac_reproducible},
    };
    int failed = 0;
    for (const Criterion& c : all) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("%s AC%d %s: %s; %.1f s of %.0f s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                    c.budget_s);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
