#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "symmap/policy.hpp"
#include "symmap/problems.hpp"

namespace symmap {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "sgd") return OptimizerKind::Sgd;
    if (s == "adam") return OptimizerKind::Adam;
    throw std::invalid_argument("unknown optimizer '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (total_samples < 1) throw std::invalid_argument("sample budget must be >= 1");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("risk factor epsilon must lie in (0, 1]");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (entropy_weight < 0.0) throw std::invalid_argument("entropy weight must be >= 0");
    if (embed_dim < 1 || hidden < 1) throw std::invalid_argument("policy sizes must be >= 1");
    if (constraints.min_length < 1 || constraints.max_length < constraints.min_length)
        throw std::invalid_argument("invalid expression length bounds");
}

TrainConfig train_preset(std::string_view name) {
    TrainConfig c;
    if (name == "paper") return c;
    if (name == "desk") {
        c.batch_size = 200;
        c.total_samples = 100'000;
        return c;
    }
    throw std::invalid_argument("unknown preset '" + std::string(name) + "' (expected paper or desk)");
}

FitData fit_data_from(const ParamDataset& ds, const std::vector<std::size_t>& rows, std::size_t target) {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (std::size_t i : rows) {
        const DatasetRow& r = ds.rows.at(i);
        if (target >= r.targets.size()) throw std::invalid_argument("dataset has no target column " + std::to_string(target + 1));
        x.push_back(r.features);
        y.push_back(r.targets[target]);
    }
    FitData d = make_fit_data(x, y);
    if (d.x.empty()) d.x.assign(ds.feature_dim(), {});
    return d;
}

namespace {

std::vector<int> token_key(const Rollout& r) { return r.actions(); }

class Optimizer {
public:
    Optimizer(OptimizerKind kind, double lr, std::size_t n) : kind_(kind), lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

    // gradient ascent on `params`
    void step(std::vector<double>& params, const std::vector<double>& g) {
        if (kind_ == OptimizerKind::Sgd) {
            for (std::size_t i = 0; i < params.size(); ++i) params[i] += lr_ * g[i];
            return;
        }
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        ++t_;
        const double c1 = 1.0 - std::pow(b1, t_), c2 = 1.0 - std::pow(b2, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = b1 * m_[i] + (1.0 - b1) * g[i];
            v_[i] = b2 * v_[i] + (1.0 - b2) * g[i] * g[i];
            params[i] += lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
        }
    }

private:
    OptimizerKind kind_;
    double lr_;
    std::vector<double> m_, v_;
    int t_ = 0;
};

} // namespace

TrainResult train(const FitData& train_data, const FitData& test_data, const Library& lib, const TrainConfig& cfg) {
    cfg.validate();
    if (train_data.rows() == 0) throw std::invalid_argument("training data is empty");
    if (lib.n_vars() > static_cast<int>(train_data.vars()))
        throw std::invalid_argument("library references more variables than the data has");

    TrainResult res;
    res.model = PolicyModel(lib, cfg.embed_dim, cfg.hidden);
    PolicyModel& model = res.model;
    model.init_uniform(derive_seed(cfg.seed, 0x1417), cfg.init_scale);
    Optimizer opt(cfg.optimizer, cfg.learning_rate, model.num_params());

    std::map<std::vector<int>, ScoredExpression> cache;
    double best_r = -1.0;
    std::size_t iteration = 0;

    while (res.samples < cfg.total_samples) {
        const std::size_t n = std::min(cfg.batch_size, cfg.total_samples - res.samples);
        std::vector<Rollout> batch(n);
#pragma omp parallel for schedule(dynamic, 8)
        for (long i = 0; i < static_cast<long>(n); ++i) {
            std::mt19937_64 rng(derive_seed(cfg.seed, res.samples + static_cast<std::size_t>(i) + 1));
            batch[static_cast<std::size_t>(i)] = sample_rollout(model, rng, cfg.constraints);
        }

        // score each distinct new expression once
        std::vector<std::vector<int>> fresh_keys;
        std::vector<Expression> fresh;
        for (const Rollout& r : batch) {
            auto key = token_key(r);
            if (cache.count(key)) continue;
            if (std::find(fresh_keys.begin(), fresh_keys.end(), key) != fresh_keys.end()) continue;
            fresh_keys.push_back(std::move(key));
            fresh.push_back(r.expr);
        }
        std::vector<ScoredExpression> scored;
        if (cfg.fit_constants && cfg.fit_elite_only) {
            scored = score_batch(fresh, train_data, false);
            std::vector<double> raw;
            for (const auto& s : scored) raw.push_back(s.result.reward);
            if (!raw.empty()) {
                const double cut = empirical_quantile(raw, std::min(1.0, 2.0 * cfg.epsilon));
                std::vector<std::size_t> pick;
                std::vector<Expression> sub;
                for (std::size_t i = 0; i < fresh.size(); ++i)
                    if (fresh[i].placeholder_count() > 0 && raw[i] >= cut) {
                        pick.push_back(i);
                        sub.push_back(fresh[i]);
                    }
                auto refit = score_batch(sub, train_data, true, cfg.constant_fit);
                for (std::size_t k = 0; k < pick.size(); ++k) scored[pick[k]] = std::move(refit[k]);
            }
        } else {
            scored = score_batch(fresh, train_data, cfg.fit_constants, cfg.constant_fit);
        }
        for (std::size_t i = 0; i < fresh.size(); ++i) cache.emplace(std::move(fresh_keys[i]), std::move(scored[i]));

        std::vector<double> rewards(n);
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const ScoredExpression& s = cache.at(token_key(batch[i]));
            rewards[i] = s.result.reward;
            mean += rewards[i];
            if (rewards[i] > best_r) {
                best_r = rewards[i];
                res.best = s.expr;
                res.best_train = s.result;
            }
        }
        mean /= static_cast<double>(n);

        const double q = empirical_quantile(rewards, cfg.epsilon);
        std::vector<double> g = risk_seeking_gradient(model, batch, rewards, q, cfg.epsilon);
        if (cfg.entropy_weight > 0.0) {
            const std::vector<double> ge = entropy_gradient(model, batch, cfg.entropy_weight);
            for (std::size_t k = 0; k < g.size(); ++k) g[k] += ge[k];
        }
        opt.step(model.params(), g);

        res.samples += n;
        ++iteration;
        res.trace.push_back({iteration, res.samples, best_r, mean, q, to_infix(res.best, true)});
        if (best_r >= cfg.stop_reward) break;
    }

    if (test_data.rows() > 0) {
        res.has_test = true;
        res.best_test = reward(res.best, test_data);
    }
    return res;
}

TrainResult train(const ParamDataset& ds, const TrainConfig& cfg, std::size_t target) {
    if (ds.rows.empty()) throw std::invalid_argument("dataset is empty");
    std::vector<std::size_t> train_rows = ds.train;
    if (train_rows.empty())
        for (std::size_t i = 0; i < ds.rows.size(); ++i) train_rows.push_back(i);
    const FitData tr = fit_data_from(ds, train_rows, target);
    const FitData te = fit_data_from(ds, ds.test, target);
    return train(tr, te, Library::standard(static_cast<int>(ds.feature_dim())), cfg);
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "iter,samples,best_R,mean_R,quantile,best_expr_infix\n";
    char buf[128];
    for (const TraceRow& r : trace) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g,", r.iteration, r.samples, r.best_reward,
                      r.mean_reward, r.quantile);
        out << buf << '"' << r.best_infix << "\"\n";
    }
}

void save_checkpoint(const std::string& path, const PolicyModel& m, const TrainConfig& cfg, std::size_t samples) {
    nlohmann::ordered_json j;
    std::vector<int> ids;
    for (const Token& t : m.library().tokens()) ids.push_back(t.id());
    j["library"] = ids;
    j["embed_dim"] = m.embed_dim();
    j["hidden"] = m.hidden();
    j["config"] = {{"batch_size", cfg.batch_size},         {"total_samples", cfg.total_samples},
                   {"epsilon", cfg.epsilon},               {"learning_rate", cfg.learning_rate},
                   {"entropy_weight", cfg.entropy_weight}, {"seed", cfg.seed},
                   {"optimizer", to_string(cfg.optimizer)}, {"init_scale", cfg.init_scale}};
    // rollouts draw from derive_seed(seed, sample index), so the sample count is the RNG state
    j["samples"] = samples;
    j["params"] = m.params();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << j.dump() << '\n';
}

PolicyModel load_checkpoint(const std::string& path, TrainConfig* cfg, std::size_t* samples) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    try {
        nlohmann::json j;
        in >> j;
        std::vector<Token> toks;
        for (int id : j.at("library").get<std::vector<int>>()) toks.push_back(Token::from_id(id));
        PolicyModel m(Library(std::move(toks)), j.at("embed_dim").get<int>(), j.at("hidden").get<int>());
        auto params = j.at("params").get<std::vector<double>>();
        if (params.size() != m.num_params()) throw std::runtime_error("checkpoint parameter count mismatch");
        m.params() = std::move(params);
        if (cfg) {
            const auto& c = j.at("config");
            cfg->batch_size = c.at("batch_size").get<std::size_t>();
            cfg->total_samples = c.at("total_samples").get<std::size_t>();
            cfg->epsilon = c.at("epsilon").get<double>();
            cfg->learning_rate = c.at("learning_rate").get<double>();
            cfg->entropy_weight = c.at("entropy_weight").get<double>();
            cfg->seed = c.at("seed").get<std::uint64_t>();
            cfg->optimizer = parse_optimizer(c.at("optimizer").get<std::string>());
            cfg->init_scale = c.at("init_scale").get<double>();
            cfg->embed_dim = m.embed_dim();
            cfg->hidden = m.hidden();
        }
        if (samples) *samples = j.at("samples").get<std::size_t>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed checkpoint '" + path + "': " + e.what());
    }
}

} // namespace symmap
