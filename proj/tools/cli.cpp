#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <sstream>

#include <CLI11.hpp>

#include "symmap/datagen.hpp"
#include "symmap/deploy.hpp"
#include "symmap/json_io.hpp"
#include "symmap/policy.hpp"
#include "symmap/problems.hpp"

#ifndef SYMMAP_VERSION
#define SYMMAP_VERSION "0.0.0"
#endif

namespace symmap::cli {

namespace fs = std::filesystem;

namespace {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Runs `f`, turning std::invalid_argument into a ConfigError.
template <class F>
auto configure(F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

int default_jobs() {
    if (const char* s = std::getenv("SYMMAP_JOBS")) {
        char* end = nullptr;
        const long v = std::strtol(s, &end, 10);
        if (end != s && *end == '\0' && v >= 0) return static_cast<int>(v);
    }
    return 0;
}

std::pair<double, double> parse_range(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ConfigError("range '" + s + "' must look like lo:hi");
    try {
        std::size_t p1 = 0, p2 = 0;
        const double lo = std::stod(s.substr(0, colon), &p1);
        const double hi = std::stod(s.substr(colon + 1), &p2);
        if (p1 != colon || p2 != s.size() - colon - 1) throw std::invalid_argument("");
        if (!(lo < hi)) throw ConfigError("range '" + s + "' needs lo < hi");
        return {lo, hi};
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("range '" + s + "' must look like lo:hi");
    }
}

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

fs::path manifest_path(const std::string& output) {
    fs::path dir = fs::path(output).parent_path();
    if (dir.empty()) dir = ".";
    return dir / "manifest.json";
}

// One manifest per output directory; a record per command, replaced when the
// same outputs are written again.
void record_manifest(const std::string& command, const json& config, const json& seeds, const json& inputs,
                     const std::vector<std::string>& outputs) {
    const fs::path path = manifest_path(outputs.front());
    json m;
    if (fs::exists(path)) {
        try {
            m = read_json_file(path.string());
        } catch (const std::exception&) {
            m = json();
        }
    }
    if (!m.is_object() || !m.contains("records") || !m["records"].is_array())
        m = json{{"tool", "symmap"}, {"records", json::array()}};
    m["tool_version"] = SYMMAP_VERSION;

    json kept = json::array();
    for (const json& r : m["records"]) {
        bool clash = false;
        if (r.contains("outputs"))
            for (const json& o : r["outputs"])
                for (const std::string& mine : outputs)
                    if (o.is_string() && o.get<std::string>() == mine) clash = true;
        if (!clash) kept.push_back(r);
    }
    kept.push_back(json{{"command", command},
                        {"config", config},
                        {"seeds", seeds},
                        {"inputs", inputs},
                        {"outputs", outputs},
                        {"tool_version", SYMMAP_VERSION},
                        {"timestamp", utc_timestamp()}});
    m["records"] = std::move(kept);
    write_json_file(path.string(), m);
}

void ensure_parent(const std::string& path) {
    const fs::path dir = fs::path(path).parent_path();
    if (!dir.empty()) fs::create_directories(dir);
}

// ---- shared solver / preconditioner flags ----

struct SolverFlags {
    std::string solver = "gmres";
    double tol = 1e-7;
    int max_iters = 10000;
    int restart = 30;

    void add(CLI::App* app) {
        app->add_option("--solver", solver, "cg, gmres or richardson")->capture_default_str();
        app->add_option("--tol", tol, "relative residual tolerance")->capture_default_str();
        app->add_option("--max-iters", max_iters, "iteration cap")->capture_default_str();
        app->add_option("--restart", restart, "GMRES restart length")->capture_default_str();
    }
    SolverConfig build() const {
        SolverConfig s;
        s.method = parse_solver_method(solver);
        s.tolerance = tol;
        s.max_iters = max_iters;
        s.restart = restart;
        s.validate();
        return s;
    }
    json to_json() const {
        return json{{"solver", solver}, {"tol", tol}, {"max_iters", max_iters}, {"restart", restart}};
    }
};

struct PrecondFlags {
    std::string kind = "sor";
    int sweeps = 1;
    std::string smoother = "jacobi";
    double omega = 1.0;

    void add(CLI::App* app) {
        app->add_option("--precond", kind, "sor, ssor or amg")->capture_default_str();
        app->add_option("--sweeps", sweeps, "SOR sweeps per application")->capture_default_str();
        app->add_option("--smoother", smoother, "AMG smoother: jacobi or sor")->capture_default_str();
        app->add_option("--smoother-omega", omega, "AMG SOR smoother weight")->capture_default_str();
    }
    PrecondConfig build() const {
        PrecondConfig c;
        c.kind = parse_precond_kind(kind);
        c.sweeps = sweeps;
        c.smoother = parse_amg_smoother(smoother);
        c.omega = omega;
        if (c.kind != PrecondKind::Sor && c.kind != PrecondKind::Ssor && c.kind != PrecondKind::Amg)
            throw ConfigError("--precond must be sor, ssor or amg");
        c.validate();
        return c;
    }
};

// ---- gen-problems ----

struct GenOpts {
    std::string family = "elliptic";
    int grid = 64;
    std::size_t count = 200;
    std::uint64_t seed = 0;
    bool symmetric = false;
    std::string preset;
    std::string out;
};

int run_gen(const GenOpts& o, std::ostream& out) {
    const Family family = configure([&] {
        if (o.grid < 2) throw ConfigError("--grid must be >= 2");
        if (o.count < 1) throw ConfigError("--count must be >= 1");
        return parse_family(o.family);
    });
    const auto problems = generate_problems(family, o.grid, o.count, o.seed, o.symmetric);
    ensure_parent(o.out);
    write_problems_jsonl(o.out, problems);
    record_manifest("gen-problems",
                    json{{"family", o.family}, {"grid_n", o.grid}, {"count", o.count}, {"symmetric", o.symmetric},
                         {"preset", o.preset}},
                    json{{"seed", o.seed}}, json::array(), {o.out});
    out << "wrote " << problems.size() << " problems to " << o.out << '\n';
    return kExitOk;
}

// ---- datagen ----

struct DatagenOpts {
    std::string problems;
    PrecondFlags precond;
    SolverFlags solver;
    std::string objective = "iters";
    double w_cond = 0.0, w_time = 1.0, w_iters = 0.0;
    std::string range = "0:2";
    std::string range2 = "0:2";
    bool two_param = false;
    std::string search = "grid";
    double coarse = 0.05;
    double fine = 0.001;
    double precision = 0.001;
    int repeats = 3;
    int cond_steps = 60;
    std::uint64_t seed = 0;
    long test_count = -1;
    int jobs = 0;
    std::string out;
};

int run_datagen(const DatagenOpts& o, std::ostream& out) {
    const DatasetConfig cfg = configure([&] {
        DatasetConfig c;
        c.eval.precond = o.precond.build();
        c.eval.solver = o.solver.build();
        c.eval.objective.kind = parse_objective_kind(o.objective);
        c.eval.objective.w_cond = o.w_cond;
        c.eval.objective.w_time = o.w_time;
        c.eval.objective.w_iters = o.w_iters;
        c.eval.objective.validate();
        c.eval.repeats = o.repeats;
        c.eval.cond_steps = o.cond_steps;
        if (o.repeats < 1) throw ConfigError("--repeats must be >= 1");
        c.search.method = parse_search_method(o.search);
        std::tie(c.search.lo, c.search.hi) = parse_range(o.range);
        c.search.coarse_step = o.coarse;
        c.search.fine_step = o.fine;
        c.search.precision = o.precision;
        c.search.two_param = o.two_param;
        std::tie(c.search.lo2, c.search.hi2) = parse_range(o.range2);
        c.search.validate();
        c.seed = o.seed;
        c.test_count = o.test_count;
        c.jobs = o.jobs;
        return c;
    });
    const auto problems = read_problems_jsonl(o.problems);
    if (problems.empty()) throw ConfigError("problem file '" + o.problems + "' is empty");
    const ParamDataset ds = build_dataset(problems, cfg);
    ensure_parent(o.out);
    write_dataset(o.out, ds);
    record_manifest("datagen",
                    json{{"precond", o.precond.kind},
                         {"sweeps", o.precond.sweeps},
                         {"smoother", o.precond.smoother},
                         {"solver", o.solver.to_json()},
                         {"objective", o.objective},
                         {"weights", {o.w_cond, o.w_time, o.w_iters}},
                         {"range", o.range},
                         {"two_param", o.two_param},
                         {"range2", o.range2},
                         {"search", o.search},
                         {"coarse", o.coarse},
                         {"fine", o.fine},
                         {"precision", o.precision},
                         {"repeats", o.repeats},
                         {"test_count", o.test_count},
                         {"jobs", o.jobs}},
                    json{{"seed", o.seed}}, json::array({o.problems}), {o.out, dataset_meta_path(o.out)});
    out << "wrote " << ds.rows.size() << " rows (" << ds.train.size() << " train, " << ds.test.size() << " test) to "
        << o.out << '\n';
    for (const std::string& l : ds.log) out << "note: " << l << '\n';
    return kExitOk;
}

// ---- train ----

struct TrainOpts {
    std::string dataset;
    std::string preset = "desk";
    std::uint64_t seed = 0;
    int target = 1;
    std::optional<std::size_t> batch;
    std::optional<std::size_t> samples;
    std::optional<double> lr;
    std::optional<double> epsilon;
    std::optional<double> entropy;
    std::optional<std::string> optimizer;
    bool elite_only = false;
    std::string out;
    std::string trace;
    std::string checkpoint;
};

std::string sibling_path(const std::string& path, const std::string& suffix) {
    fs::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

json reward_json(const RewardResult& r) {
    return json{{"R", r.reward}, {"nrmse", r.nrmse}, {"invalid", r.invalid}, {"degenerate", r.degenerate}};
}

int run_train(const TrainOpts& o, std::ostream& out) {
    const TrainConfig cfg = configure([&] {
        TrainConfig c = train_preset(o.preset);
        c.seed = o.seed;
        if (o.batch) c.batch_size = *o.batch;
        if (o.samples) c.total_samples = *o.samples;
        if (o.lr) c.learning_rate = *o.lr;
        if (o.epsilon) c.epsilon = *o.epsilon;
        if (o.entropy) c.entropy_weight = *o.entropy;
        if (o.optimizer) c.optimizer = parse_optimizer(*o.optimizer);
        c.fit_elite_only = o.elite_only;
        if (o.target < 1 || o.target > 2) throw ConfigError("--target must be 1 or 2");
        c.validate();
        return c;
    });
    const ParamDataset ds = read_dataset(o.dataset);
    if (static_cast<std::size_t>(o.target) > ds.target_dim())
        throw ConfigError("dataset has no target column " + std::to_string(o.target));
    const TrainResult res = train(ds, cfg, static_cast<std::size_t>(o.target - 1));

    const std::string trace = o.trace.empty() ? sibling_path(o.out, ".trace.csv") : o.trace;
    ensure_parent(o.out);
    ensure_parent(trace);
    json j = expression_to_json(res.best);
    j["feature_names"] = ds.feature_names;
    j["precond"] = ds.precond;
    j["target"] = o.target;
    j["train"] = reward_json(res.best_train);
    if (res.has_test) j["test"] = reward_json(res.best_test);
    j["samples"] = res.samples;
    write_json_file(o.out, j);
    write_trace_csv(trace, res.trace);
    std::vector<std::string> outputs{o.out, trace};
    if (!o.checkpoint.empty()) {
        ensure_parent(o.checkpoint);
        save_checkpoint(o.checkpoint, res.model, cfg, res.samples);
        outputs.push_back(o.checkpoint);
    }
    record_manifest("train",
                    json{{"preset", o.preset},
                         {"batch_size", cfg.batch_size},
                         {"total_samples", cfg.total_samples},
                         {"learning_rate", cfg.learning_rate},
                         {"epsilon", cfg.epsilon},
                         {"entropy_weight", cfg.entropy_weight},
                         {"optimizer", to_string(cfg.optimizer)},
                         {"fit_elite_only", cfg.fit_elite_only},
                         {"target", o.target}},
                    json{{"seed", o.seed}}, json::array({o.dataset}), outputs);
    char buf[160];
    std::snprintf(buf, sizeof buf, "best R %.12g NRMSE %.12g after %zu samples\n", res.best_train.reward,
                  res.best_train.nrmse, res.samples);
    out << to_infix(res.best, true) << '\n' << buf;
    if (res.has_test) {
        std::snprintf(buf, sizeof buf, "test R %.12g NRMSE %.12g\n", res.best_test.reward, res.best_test.nrmse);
        out << buf;
    }
    return kExitOk;
}

// ---- eval ----

struct EvalOpts {
    std::string expr_file;
    std::string expr;
    std::string dataset;
    std::string split = "all";
    int target = 1;
    std::string out;
};

Expression load_expression(const std::string& file, const std::string& infix) {
    if (!file.empty() && !infix.empty()) throw ConfigError("give either --expr-file or --expr, not both");
    if (!infix.empty()) {
        try {
            return parse_infix(infix);
        } catch (const ParseError& e) {
            throw ConfigError(std::string("--expr: ") + e.what());
        }
    }
    if (file.empty()) throw ConfigError("an expression is required (--expr-file or --expr)");
    return expression_from_json(read_json_file(file));
}

int run_eval(const EvalOpts& o, std::ostream& out) {
    configure([&] {
        if (o.split != "all" && o.split != "train" && o.split != "test")
            throw ConfigError("--split must be all, train or test");
        if (o.target < 1 || o.target > 2) throw ConfigError("--target must be 1 or 2");
        return 0;
    });
    const Expression e = configure([&] { return load_expression(o.expr_file, o.expr); });
    const ParamDataset ds = read_dataset(o.dataset);
    std::vector<std::size_t> rows;
    if (o.split == "train")
        rows = ds.train;
    else if (o.split == "test")
        rows = ds.test;
    else
        for (std::size_t i = 0; i < ds.rows.size(); ++i) rows.push_back(i);
    if (rows.empty()) throw ConfigError("the selected split has no rows");
    const FitData d = fit_data_from(ds, rows, static_cast<std::size_t>(o.target - 1));
    for (const Token& t : e.tokens)
        if (t.kind == TokenKind::Var && static_cast<std::size_t>(t.var) >= d.vars())
            throw ConfigError("expression uses x" + std::to_string(t.var + 1) + " but the dataset has " +
                              std::to_string(d.vars()) + " features");
    const RewardResult r = reward(e, d);
    char buf[160];
    std::snprintf(buf, sizeof buf, "rows %zu\nNRMSE %.12g\nR %.12g\n", rows.size(), r.nrmse, r.reward);
    out << to_infix(e, true) << '\n' << buf;
    if (r.invalid) out << "expression is invalid on this data\n";
    if (!o.out.empty()) {
        ensure_parent(o.out);
        json j = reward_json(r);
        j["rows"] = rows.size();
        j["expression"] = expression_to_json(e);
        write_json_file(o.out, j);
        json inputs = json::array({o.dataset});
        if (!o.expr_file.empty()) inputs.push_back(o.expr_file);
        record_manifest("eval", json{{"split", o.split}, {"target", o.target}, {"expr", o.expr}}, json::object(),
                        inputs, {o.out});
    }
    return kExitOk;
}

// ---- bench ----

struct BenchOpts {
    std::string problems;
    PrecondFlags precond;
    SolverFlags solver;
    std::vector<std::string> policies{"none", "default", "optimal"};
    std::string expr_file;
    std::string objective = "iters";
    double optimal_step = 0.05;
    double coarse = 0.05;
    double fine = 0.001;
    bool cond = false;
    int jobs = 0;
    std::string out;
    std::string cells;
};

std::vector<ParamPolicy> build_policies(const BenchOpts& o, const std::vector<ProblemInstance>& problems,
                                        const BenchConfig& cfg) {
    std::vector<ParamPolicy> out;
    for (const std::string& p : o.policies) {
        if (p == "none") {
            out.push_back(ParamPolicy::none());
        } else if (p == "default") {
            out.push_back(ParamPolicy::default_param());
        } else if (p == "optimal") {
            out.push_back(ParamPolicy::optimal_constant());
        } else if (p.rfind("fixed:", 0) == 0) {
            try {
                out.push_back(ParamPolicy::fixed(std::stod(p.substr(6))));
            } catch (const std::exception&) {
                throw ConfigError("bad policy '" + p + "'");
            }
        } else if (p == "symbolic") {
            if (o.expr_file.empty()) throw ConfigError("policy 'symbolic' needs --expr-file");
            out.push_back(ParamPolicy::symbolic(expression_from_json(read_json_file(o.expr_file))));
        } else if (p == "per-instance") {
            EvalSettings s;
            s.precond = cfg.precond;
            s.solver = cfg.solver;
            s.objective.kind = cfg.optimal_objective;
            s.repeats = 1;
            SearchConfig sc;
            const ClampRange r = clamp_range(cfg.precond.kind);
            sc.lo = r.lo;
            sc.hi = r.hi;
            sc.coarse_step = o.coarse;
            sc.fine_step = o.fine;
            std::vector<double> best(problems.size());
            for (std::size_t i = 0; i < problems.size(); ++i) {
                try {
                    best[i] = search_instance(problems[i], s, sc).param;
                } catch (const NoFeasibleParameter&) {
                    best[i] = default_param(cfg.precond.kind);
                }
            }
            out.push_back(ParamPolicy::per_instance_optimal(std::move(best)));
        } else {
            throw ConfigError("unknown policy '" + p + "' (none, default, fixed:V, optimal, symbolic, per-instance)");
        }
    }
    return out;
}

int run_bench(const BenchOpts& o, std::ostream& out) {
    const BenchConfig cfg = configure([&] {
        BenchConfig c;
        c.precond = o.precond.build();
        c.solver = o.solver.build();
        c.optimal_objective = parse_objective_kind(o.objective);
        if (c.optimal_objective == ObjectiveKind::Hybrid) throw ConfigError("bench objective must be time, iters or cond");
        c.optimal_step = o.optimal_step;
        if (!(o.optimal_step > 0.0)) throw ConfigError("--optimal-step must be > 0");
        c.measure_condition = o.cond;
        c.jobs = o.jobs;
        return c;
    });
    const auto problems = read_problems_jsonl(o.problems);
    if (problems.empty()) throw ConfigError("problem file '" + o.problems + "' is empty");
    const auto policies = configure([&] { return build_policies(o, problems, cfg); });
    const BenchReport rep = bench_compare(problems, policies, cfg);

    ensure_parent(o.out);
    write_bench_csv(o.out, rep);
    std::vector<std::string> outputs{o.out};
    if (!o.cells.empty()) {
        ensure_parent(o.cells);
        std::ofstream c(o.cells, std::ios::binary);
        if (!c) throw std::runtime_error("cannot open '" + o.cells + "' for writing");
        c << "policy,instance,param,iterations,time_s,condition,converged\n";
        char buf[256];
        for (const BenchCell& cell : rep.cells) {
            std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%d,%.9g,%.9g,%d\n", cell.policy.c_str(), cell.instance,
                          cell.param, cell.iterations, cell.time, cell.condition, cell.converged ? 1 : 0);
            c << buf;
        }
        outputs.push_back(o.cells);
    }
    json inputs = json::array({o.problems});
    if (!o.expr_file.empty()) inputs.push_back(o.expr_file);
    record_manifest("bench",
                    json{{"precond", o.precond.kind},
                         {"solver", o.solver.to_json()},
                         {"policies", o.policies},
                         {"objective", o.objective},
                         {"optimal_step", o.optimal_step},
                         {"measure_condition", o.cond},
                         {"jobs", o.jobs}},
                    json::object(), inputs, outputs);
    out << bench_csv_header() << '\n';
    for (const BenchRow& r : rep.rows) out << bench_csv_row(r) << '\n';
    for (const BenchRow& r : rep.rows)
        if (r.n_failed) out << "* " << r.policy << ": " << r.n_failed << " unconverged cells excluded from time statistics\n";
    if (rep.optimal_constant != 0.0 || std::any_of(policies.begin(), policies.end(), [](const ParamPolicy& p) {
            return p.kind == PolicyKind::OptimalConstant;
        }))
        out << "optimal constant " << rep.optimal_constant << '\n';
    return kExitOk;
}

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Symbolic preconditioner parameter learning", "symmap"};
    app.set_version_flag("--version", SYMMAP_VERSION);
    app.require_subcommand(1);
    const int env_jobs = default_jobs();

    GenOpts gen;
    auto* g = app.add_subcommand("gen-problems", "generate PDE linear systems as JSONL");
    g->add_option("--family", gen.family, "elliptic, darcy, poisson or thermal")->capture_default_str();
    g->add_option("--grid", gen.grid, "interior points per side")->capture_default_str();
    g->add_option("--count", gen.count, "number of instances")->capture_default_str();
    g->add_option("--seed", gen.seed, "master seed")->capture_default_str();
    g->add_flag("--symmetric", gen.symmetric, "elliptic family without first-order terms");
    g->add_option("--preset", gen.preset, "desk (grid 64, 200 instances) or paper (grid 200, 1000 instances)");
    g->add_option("--out", gen.out, "output JSONL")->required();

    DatagenOpts dg;
    dg.jobs = env_jobs;
    auto* d = app.add_subcommand("datagen", "search optimal parameters and write the dataset CSV");
    d->add_option("--problems", dg.problems, "problem JSONL")->required();
    dg.precond.add(d);
    dg.solver.add(d);
    d->add_option("--objective", dg.objective, "time, iters, cond or hybrid")->capture_default_str();
    d->add_option("--w-cond", dg.w_cond, "hybrid weight on log condition number");
    d->add_option("--w-time", dg.w_time, "hybrid weight on time");
    d->add_option("--w-iters", dg.w_iters, "hybrid weight on iterations");
    d->add_option("--range", dg.range, "searched parameter range lo:hi")->capture_default_str();
    d->add_flag("--two-param", dg.two_param, "AMG with SOR smoother: search (theta, omega)");
    d->add_option("--range2", dg.range2, "second parameter range lo:hi")->capture_default_str();
    d->add_option("--search", dg.search, "grid or binary")->capture_default_str();
    d->add_option("--coarse", dg.coarse, "coarse grid step")->capture_default_str();
    d->add_option("--fine", dg.fine, "fine grid step")->capture_default_str();
    d->add_option("--precision", dg.precision, "binary search precision")->capture_default_str();
    d->add_option("--repeats", dg.repeats, "timed repeats per point")->capture_default_str();
    d->add_option("--cond-steps", dg.cond_steps, "Arnoldi steps for the condition estimate")->capture_default_str();
    d->add_option("--seed", dg.seed, "split seed")->capture_default_str();
    d->add_option("--test-count", dg.test_count, "test rows (default: one sixth)");
    d->add_option("--jobs", dg.jobs, "worker threads (0: all; env SYMMAP_JOBS)")->capture_default_str();
    d->add_option("--out", dg.out, "output CSV")->required();

    TrainOpts tr;
    auto* t = app.add_subcommand("train", "learn a symbolic parameter policy");
    t->add_option("--dataset", tr.dataset, "dataset CSV")->required();
    t->add_option("--preset", tr.preset, "desk or paper")->capture_default_str();
    t->add_option("--seed", tr.seed, "training seed")->capture_default_str();
    t->add_option("--target", tr.target, "target column (1 or 2)")->capture_default_str();
    t->add_option("--batch", tr.batch, "expressions per batch");
    t->add_option("--samples", tr.samples, "total expression budget");
    t->add_option("--lr", tr.lr, "learning rate");
    t->add_option("--epsilon", tr.epsilon, "risk factor");
    t->add_option("--entropy", tr.entropy, "entropy weight");
    t->add_option("--optimizer", tr.optimizer, "adam or sgd");
    t->add_flag("--elite-only-constants", tr.elite_only, "fit constants only for likely elites");
    t->add_option("--out", tr.out, "policy JSON")->required();
    t->add_option("--trace", tr.trace, "trace CSV (default <out>.trace.csv)");
    t->add_option("--checkpoint", tr.checkpoint, "write the final model here");

    EvalOpts ev;
    auto* e = app.add_subcommand("eval", "score an expression on a dataset");
    e->add_option("--expr-file", ev.expr_file, "expression or policy JSON");
    e->add_option("--expr", ev.expr, "infix expression");
    e->add_option("--dataset", ev.dataset, "dataset CSV")->required();
    e->add_option("--split", ev.split, "all, train or test")->capture_default_str();
    e->add_option("--target", ev.target, "target column (1 or 2)")->capture_default_str();
    e->add_option("--out", ev.out, "write the scores as JSON");

    BenchOpts bo;
    bo.jobs = env_jobs;
    auto* b = app.add_subcommand("bench", "compare parameter policies on a problem set");
    b->add_option("--problems", bo.problems, "problem JSONL")->required();
    bo.precond.add(b);
    bo.solver.add(b);
    b->add_option("--policies", bo.policies, "none, default, fixed:V, optimal, symbolic, per-instance")
        ->delimiter(',')
        ->capture_default_str();
    b->add_option("--expr-file", bo.expr_file, "expression for the symbolic policy");
    b->add_option("--objective", bo.objective, "objective for optimal baselines: iters, time or cond")
        ->capture_default_str();
    b->add_option("--optimal-step", bo.optimal_step, "grid step of the optimal-constant search")->capture_default_str();
    b->add_option("--coarse", bo.coarse, "per-instance search coarse step")->capture_default_str();
    b->add_option("--fine", bo.fine, "per-instance search fine step")->capture_default_str();
    b->add_flag("--cond", bo.cond, "also estimate condition numbers");
    b->add_option("--jobs", bo.jobs, "worker threads (0: all; env SYMMAP_JOBS)")->capture_default_str();
    b->add_option("--out", bo.out, "aggregate CSV")->required();
    b->add_option("--cells", bo.cells, "per-cell CSV");

    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    if (argv.empty()) argv.push_back("symmap");
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*g) {
            if (gen.preset == "desk") {
                if (g->count("--grid") == 0) gen.grid = 64;
                if (g->count("--count") == 0) gen.count = 200;
            } else if (gen.preset == "paper") {
                if (g->count("--grid") == 0) gen.grid = 200;
                if (g->count("--count") == 0) gen.count = 1000;
            } else if (!gen.preset.empty()) {
                throw ConfigError("unknown preset '" + gen.preset + "' (expected paper or desk)");
            }
            return run_gen(gen, out);
        }
        if (*d) return run_datagen(dg, out);
        if (*t) return run_train(tr, out);
        if (*e) return run_eval(ev, out);
        if (*b) return run_bench(bo, out);
    } catch (const ConfigError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}

} // namespace symmap::cli
