#pragma once

// Recurrent token policy and the risk-seeking policy-gradient trainer.

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "symmap/datagen.hpp"
#include "symmap/expr.hpp"

namespace symmap {

/// Single-layer LSTM over (parent, sibling) token embeddings with a linear
/// read-out to one logit per library token. All weights live in one flat
/// array so optimizers and finite-difference checks can treat them uniformly.
class PolicyModel {
public:
    PolicyModel() = default;
    PolicyModel(Library lib, int embed_dim = 8, int hidden = 32);

    const Library& library() const { return lib_; }
    int embed_dim() const { return embed_; }
    int hidden() const { return hidden_; }
    /// Embedding row used for a missing parent or sibling.
    int empty_id() const { return static_cast<int>(lib_.size()); }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    std::size_t num_params() const { return params_.size(); }

    void init_uniform(std::uint64_t seed, double scale = 0.08);
    void init_zero();

    // offsets into params()
    std::size_t off_embed() const { return 0; }
    std::size_t off_w() const;    ///< 4H x 2E input weights, gate order i, f, g, o
    std::size_t off_u() const;    ///< 4H x H recurrent weights
    std::size_t off_b() const;    ///< 4H
    std::size_t off_wo() const;   ///< L x H
    std::size_t off_bo() const;   ///< L

private:
    Library lib_;
    int embed_ = 8;
    int hidden_ = 32;
    std::vector<double> params_;
};

/// Everything one sampling step needs for backpropagation.
struct PolicyStep {
    int parent = 0;
    int sibling = 0;
    int action = 0;
    std::vector<char> mask;
    std::vector<double> probs;
    std::vector<double> gates;   ///< activated i, f, g, o (4H)
    std::vector<double> c;
    std::vector<double> h;
    std::vector<double> c_prev;
    std::vector<double> h_prev;
};

struct Rollout {
    Expression expr;
    std::vector<PolicyStep> steps;
    double log_prob = 0.0;
    bool relaxed = false;  ///< some step needed a relaxed constraint mask
    std::vector<int> actions() const;
};

/// Autoregressive sample under the constraint mask.
Rollout sample_rollout(const PolicyModel& m, std::mt19937_64& rng, const ConstraintSettings& cs = {});

/// Re-runs the policy on fixed library positions, recording the same data a
/// sample would. Throws if an action is masked.
Rollout replay_rollout(const PolicyModel& m, const std::vector<int>& actions, const ConstraintSettings& cs = {});

/// log p(tau | theta) recomputed from scratch.
double rollout_log_prob(const PolicyModel& m, const std::vector<int>& actions, const ConstraintSettings& cs = {});

/// Accumulates scale * d(sum_t dlogits_t . logits_t)/d theta into `grad`.
void backprop_rollout(const PolicyModel& m, const Rollout& r, const std::vector<std::vector<double>>& dlogits,
                      std::vector<double>& grad);

/// Gradient of log p(tau | theta).
std::vector<double> grad_log_prob(const PolicyModel& m, const Rollout& r);

/// (1 - eps)-quantile as the order statistic at 1-based ascending index
/// ceil((1 - eps) N), clamped to [1, N].
double empirical_quantile(std::vector<double> rewards, double epsilon);

/// Per-sample weights (R_i - Q) / (eps N) for R_i > Q, zero otherwise.
std::vector<double> risk_seeking_weights(const std::vector<double>& rewards, double quantile, double epsilon);

/// (1 / (eps N)) sum_i (R_i - Q) grad log p(tau_i) over R_i > Q.
std::vector<double> risk_seeking_gradient(const PolicyModel& m, const std::vector<Rollout>& batch,
                                          const std::vector<double>& rewards, double quantile, double epsilon);

/// Mean categorical entropy per step over the whole batch.
double batch_entropy(const std::vector<Rollout>& batch);
/// weight * gradient of batch_entropy.
std::vector<double> entropy_gradient(const PolicyModel& m, const std::vector<Rollout>& batch, double weight);

enum class OptimizerKind { Sgd, Adam };
std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

struct TrainConfig {
    std::size_t batch_size = 1000;
    std::size_t total_samples = 2'000'000;
    double epsilon = 0.05;
    double learning_rate = 0.0005;
    double entropy_weight = 0.03;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::Adam;
    int embed_dim = 8;
    int hidden = 32;
    double init_scale = 0.08;
    double stop_reward = 1.0 - 1e-10;  ///< stop early once the best reward reaches this
    bool fit_constants = true;
    bool fit_elite_only = false;       ///< fit constants only for the top 2*eps at unit constants
    ConstraintSettings constraints;
    ConstantFitSettings constant_fit;

    void validate() const;
};

/// "paper" (batch 1000, 2M samples) or "desk" (batch 200, 100k samples).
TrainConfig train_preset(std::string_view name);

struct TraceRow {
    std::size_t iteration = 0;
    std::size_t samples = 0;
    double best_reward = 0.0;
    double mean_reward = 0.0;
    double quantile = 0.0;
    std::string best_infix;
};

struct TrainResult {
    Expression best;
    RewardResult best_train;
    RewardResult best_test;
    bool has_test = false;
    std::vector<TraceRow> trace;
    std::size_t samples = 0;
    PolicyModel model;
};

/// Runs the risk-seeking search on the given training data.
TrainResult train(const FitData& train_data, const FitData& test_data, const Library& lib, const TrainConfig& cfg);
/// Uses the dataset's train/test split and target column `target`.
TrainResult train(const ParamDataset& ds, const TrainConfig& cfg, std::size_t target = 0);

/// FitData over the given row indices of `ds`, target column `target`.
FitData fit_data_from(const ParamDataset& ds, const std::vector<std::size_t>& rows, std::size_t target = 0);

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);

void save_checkpoint(const std::string& path, const PolicyModel& m, const TrainConfig& cfg, std::size_t samples);
PolicyModel load_checkpoint(const std::string& path, TrainConfig* cfg = nullptr, std::size_t* samples = nullptr);

} // namespace symmap
