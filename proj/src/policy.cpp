#include "symmap/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace symmap {

PolicyModel::PolicyModel(Library lib, int embed_dim, int hidden) : lib_(std::move(lib)), embed_(embed_dim), hidden_(hidden) {
    if (embed_dim < 1 || hidden < 1) throw std::invalid_argument("policy sizes must be >= 1");
    params_.assign(off_bo() + lib_.size(), 0.0);
}

std::size_t PolicyModel::off_w() const { return (lib_.size() + 1) * static_cast<std::size_t>(embed_); }
std::size_t PolicyModel::off_u() const { return off_w() + 4 * static_cast<std::size_t>(hidden_) * 2 * embed_; }
std::size_t PolicyModel::off_b() const { return off_u() + 4 * static_cast<std::size_t>(hidden_) * hidden_; }
std::size_t PolicyModel::off_wo() const { return off_b() + 4 * static_cast<std::size_t>(hidden_); }
std::size_t PolicyModel::off_bo() const { return off_wo() + lib_.size() * static_cast<std::size_t>(hidden_); }

void PolicyModel::init_uniform(std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (double& p : params_) p = u(rng);
}

void PolicyModel::init_zero() { std::fill(params_.begin(), params_.end(), 0.0); }

std::vector<int> Rollout::actions() const {
    std::vector<int> a;
    a.reserve(steps.size());
    for (const PolicyStep& s : steps) a.push_back(s.action);
    return a;
}

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

int context_id(const PolicyModel& m, const std::optional<Token>& t) {
    if (!t) return m.empty_id();
    const int i = m.library().index_of(*t);
    return i < 0 ? m.empty_id() : i;
}

// One LSTM step plus masked softmax; fills everything in `s` except `action`.
void forward_step(const PolicyModel& m, const TraversalState& st, const ConstraintSettings& cs,
                  const std::vector<double>& h_prev, const std::vector<double>& c_prev, PolicyStep& s, bool& relaxed) {
    const auto& p = m.params();
    const int E = m.embed_dim(), H = m.hidden();
    const auto L = static_cast<int>(m.library().size());
    s.parent = context_id(m, st.parent());
    s.sibling = context_id(m, st.sibling());
    s.h_prev = h_prev;
    s.c_prev = c_prev;

    std::vector<double> x(2 * E);
    for (int k = 0; k < E; ++k) {
        x[k] = p[m.off_embed() + static_cast<std::size_t>(s.parent) * E + k];
        x[E + k] = p[m.off_embed() + static_cast<std::size_t>(s.sibling) * E + k];
    }
    s.gates.assign(4 * H, 0.0);
    for (int r = 0; r < 4 * H; ++r) {
        double z = p[m.off_b() + r];
        const double* w = &p[m.off_w() + static_cast<std::size_t>(r) * 2 * E];
        for (int k = 0; k < 2 * E; ++k) z += w[k] * x[k];
        const double* u = &p[m.off_u() + static_cast<std::size_t>(r) * H];
        for (int k = 0; k < H; ++k) z += u[k] * h_prev[k];
        s.gates[r] = (r >= 2 * H && r < 3 * H) ? std::tanh(z) : sigmoid(z);
    }
    s.c.assign(H, 0.0);
    s.h.assign(H, 0.0);
    for (int k = 0; k < H; ++k) {
        const double i = s.gates[k], f = s.gates[H + k], g = s.gates[2 * H + k], o = s.gates[3 * H + k];
        s.c[k] = f * c_prev[k] + i * g;
        s.h[k] = o * std::tanh(s.c[k]);
    }

    const Mask mask = constraint_mask(m.library(), st, cs);
    relaxed = relaxed || mask.relaxed;
    s.mask = mask.allowed;
    std::vector<double> logits(L);
    double mx = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < L; ++a) {
        double z = p[m.off_bo() + a];
        const double* w = &p[m.off_wo() + static_cast<std::size_t>(a) * H];
        for (int k = 0; k < H; ++k) z += w[k] * s.h[k];
        logits[a] = z;
        if (s.mask[a]) mx = std::max(mx, z);
    }
    s.probs.assign(L, 0.0);
    double sum = 0.0;
    for (int a = 0; a < L; ++a)
        if (s.mask[a]) sum += (s.probs[a] = std::exp(logits[a] - mx));
    for (double& q : s.probs) q /= sum;
}

template <class Choose>
Rollout run_policy(const PolicyModel& m, const ConstraintSettings& cs, Choose&& choose) {
    Rollout r;
    TraversalState st;
    const auto H = static_cast<std::size_t>(m.hidden());
    std::vector<double> h(H, 0.0), c(H, 0.0);
    while (!st.complete()) {
        PolicyStep s;
        forward_step(m, st, cs, h, c, s, r.relaxed);
        s.action = choose(s, r.steps.size());
        if (s.action < 0) break;
        r.log_prob += std::log(s.probs[static_cast<std::size_t>(s.action)]);
        const Token t = m.library()[static_cast<std::size_t>(s.action)];
        r.expr.tokens.push_back(t);
        if (t.kind == TokenKind::Const) r.expr.constants.push_back(1.0);
        st.step(t);
        h = s.h;
        c = s.c;
        r.steps.push_back(std::move(s));
    }
    return r;
}

} // namespace

Rollout sample_rollout(const PolicyModel& m, std::mt19937_64& rng, const ConstraintSettings& cs) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return run_policy(m, cs, [&](const PolicyStep& s, std::size_t) {
        const double target = u(rng);
        double acc = 0.0;
        int last = -1;
        for (std::size_t a = 0; a < s.probs.size(); ++a) {
            if (!s.mask[a]) continue;
            last = static_cast<int>(a);
            acc += s.probs[a];
            if (target < acc) return last;
        }
        return last;  // rounding: fall back to the last admissible token
    });
}

Rollout replay_rollout(const PolicyModel& m, const std::vector<int>& actions, const ConstraintSettings& cs) {
    Rollout r = run_policy(m, cs, [&](const PolicyStep& s, std::size_t t) {
        if (t >= actions.size()) throw std::invalid_argument("replay: action sequence ends before the expression");
        const int a = actions[t];
        if (a < 0 || static_cast<std::size_t>(a) >= s.mask.size() || !s.mask[static_cast<std::size_t>(a)])
            throw std::invalid_argument("replay: action " + std::to_string(a) + " is masked at step " + std::to_string(t));
        return a;
    });
    if (r.steps.size() != actions.size()) throw std::invalid_argument("replay: expression completes before the actions end");
    return r;
}

double rollout_log_prob(const PolicyModel& m, const std::vector<int>& actions, const ConstraintSettings& cs) {
    return replay_rollout(m, actions, cs).log_prob;
}

void backprop_rollout(const PolicyModel& m, const Rollout& r, const std::vector<std::vector<double>>& dlogits,
                      std::vector<double>& grad) {
    const auto& p = m.params();
    const int E = m.embed_dim(), H = m.hidden();
    const auto L = static_cast<int>(m.library().size());
    if (grad.size() != p.size()) grad.assign(p.size(), 0.0);
    std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), dh(H), dz(4 * H), dx(2 * E);
    for (std::size_t t = r.steps.size(); t-- > 0;) {
        const PolicyStep& s = r.steps[t];
        const std::vector<double>& dl = dlogits[t];
        dh = dh_next;
        for (int a = 0; a < L; ++a) {
            if (dl[a] == 0.0) continue;
            grad[m.off_bo() + a] += dl[a];
            double* gw = &grad[m.off_wo() + static_cast<std::size_t>(a) * H];
            const double* w = &p[m.off_wo() + static_cast<std::size_t>(a) * H];
            for (int k = 0; k < H; ++k) {
                gw[k] += dl[a] * s.h[k];
                dh[k] += dl[a] * w[k];
            }
        }
        for (int k = 0; k < H; ++k) {
            const double i = s.gates[k], f = s.gates[H + k], g = s.gates[2 * H + k], o = s.gates[3 * H + k];
            const double tc = std::tanh(s.c[k]);
            const double dc = dh[k] * o * (1.0 - tc * tc) + dc_next[k];
            dz[k] = dc * g * i * (1.0 - i);
            dz[H + k] = dc * s.c_prev[k] * f * (1.0 - f);
            dz[2 * H + k] = dc * i * (1.0 - g * g);
            dz[3 * H + k] = dh[k] * tc * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        std::fill(dx.begin(), dx.end(), 0.0);
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        for (int row = 0; row < 4 * H; ++row) {
            const double d = dz[row];
            if (d == 0.0) continue;
            grad[m.off_b() + row] += d;
            double* gw = &grad[m.off_w() + static_cast<std::size_t>(row) * 2 * E];
            const double* w = &p[m.off_w() + static_cast<std::size_t>(row) * 2 * E];
            for (int k = 0; k < E; ++k) {
                const double xp = p[m.off_embed() + static_cast<std::size_t>(s.parent) * E + k];
                const double xs = p[m.off_embed() + static_cast<std::size_t>(s.sibling) * E + k];
                gw[k] += d * xp;
                gw[E + k] += d * xs;
                dx[k] += d * w[k];
                dx[E + k] += d * w[E + k];
            }
            double* gu = &grad[m.off_u() + static_cast<std::size_t>(row) * H];
            const double* u = &p[m.off_u() + static_cast<std::size_t>(row) * H];
            for (int k = 0; k < H; ++k) {
                gu[k] += d * s.h_prev[k];
                dh_next[k] += d * u[k];
            }
        }
        for (int k = 0; k < E; ++k) {
            grad[m.off_embed() + static_cast<std::size_t>(s.parent) * E + k] += dx[k];
            grad[m.off_embed() + static_cast<std::size_t>(s.sibling) * E + k] += dx[E + k];
        }
    }
}

namespace {

void add_log_prob_dlogits(const Rollout& r, double weight, std::vector<std::vector<double>>& dl) {
    for (std::size_t t = 0; t < r.steps.size(); ++t) {
        const PolicyStep& s = r.steps[t];
        for (std::size_t a = 0; a < s.probs.size(); ++a) dl[t][a] -= weight * s.probs[a];
        dl[t][static_cast<std::size_t>(s.action)] += weight;
    }
}

double step_entropy(const PolicyStep& s) {
    double h = 0.0;
    for (double q : s.probs)
        if (q > 0.0) h -= q * std::log(q);
    return h;
}

void add_entropy_dlogits(const Rollout& r, double weight, std::vector<std::vector<double>>& dl) {
    for (std::size_t t = 0; t < r.steps.size(); ++t) {
        const PolicyStep& s = r.steps[t];
        const double h = step_entropy(s);
        for (std::size_t a = 0; a < s.probs.size(); ++a) {
            const double q = s.probs[a];
            if (q > 0.0) dl[t][a] -= weight * q * (std::log(q) + h);
        }
    }
}

std::vector<std::vector<double>> zero_dlogits(const Rollout& r) {
    std::vector<std::vector<double>> dl(r.steps.size());
    for (std::size_t t = 0; t < r.steps.size(); ++t) dl[t].assign(r.steps[t].probs.size(), 0.0);
    return dl;
}

} // namespace

std::vector<double> grad_log_prob(const PolicyModel& m, const Rollout& r) {
    auto dl = zero_dlogits(r);
    add_log_prob_dlogits(r, 1.0, dl);
    std::vector<double> g(m.num_params(), 0.0);
    backprop_rollout(m, r, dl, g);
    return g;
}

double empirical_quantile(std::vector<double> rewards, double epsilon) {
    if (rewards.empty()) throw std::invalid_argument("empirical_quantile of an empty batch");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("risk factor epsilon must lie in (0, 1]");
    std::sort(rewards.begin(), rewards.end());
    const auto n = static_cast<double>(rewards.size());
    auto k = static_cast<long>(std::ceil((1.0 - epsilon) * n - 1e-9));
    k = std::clamp<long>(k, 1, static_cast<long>(rewards.size()));
    return rewards[static_cast<std::size_t>(k - 1)];
}

std::vector<double> risk_seeking_weights(const std::vector<double>& rewards, double quantile, double epsilon) {
    if (rewards.empty()) throw std::invalid_argument("risk-seeking weights of an empty batch");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("risk factor epsilon must lie in (0, 1]");
    const double scale = 1.0 / (epsilon * static_cast<double>(rewards.size()));
    std::vector<double> w(rewards.size(), 0.0);
    for (std::size_t i = 0; i < rewards.size(); ++i)
        if (rewards[i] > quantile) w[i] = scale * (rewards[i] - quantile);
    return w;
}

std::vector<double> risk_seeking_gradient(const PolicyModel& m, const std::vector<Rollout>& batch,
                                          const std::vector<double>& rewards, double quantile, double epsilon) {
    if (batch.size() != rewards.size()) throw std::invalid_argument("batch and reward sizes differ");
    const std::vector<double> w = risk_seeking_weights(rewards, quantile, epsilon);
    std::vector<double> g(m.num_params(), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (w[i] == 0.0) continue;
        auto dl = zero_dlogits(batch[i]);
        add_log_prob_dlogits(batch[i], w[i], dl);
        backprop_rollout(m, batch[i], dl, g);
    }
    return g;
}

double batch_entropy(const std::vector<Rollout>& batch) {
    double sum = 0.0;
    std::size_t steps = 0;
    for (const Rollout& r : batch)
        for (const PolicyStep& s : r.steps) {
            sum += step_entropy(s);
            ++steps;
        }
    return steps ? sum / static_cast<double>(steps) : 0.0;
}

std::vector<double> entropy_gradient(const PolicyModel& m, const std::vector<Rollout>& batch, double weight) {
    std::vector<double> g(m.num_params(), 0.0);
    if (weight == 0.0) return g;
    std::size_t steps = 0;
    for (const Rollout& r : batch) steps += r.steps.size();
    if (steps == 0) return g;
    const double w = weight / static_cast<double>(steps);
    for (const Rollout& r : batch) {
        auto dl = zero_dlogits(r);
        add_entropy_dlogits(r, w, dl);
        backprop_rollout(m, r, dl, g);
    }
    return g;
}

} // namespace symmap
