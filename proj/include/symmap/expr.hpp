#pragma once

// Prefix-notation expressions over a small operator library:
// traversal bookkeeping, sampling constraints, protected evaluation,
// constant fitting and the squashed-NRMSE reward.

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace symmap {

enum class TokenKind { Add, Sub, Mul, Div, Pow, Sqrt, Exp, Log, One, Const, Var };

struct Token {
    TokenKind kind = TokenKind::One;
    int var = -1;  ///< 0-based variable index for Var

    int arity() const;
    bool is_constant() const { return kind == TokenKind::One || kind == TokenKind::Const; }
    /// Canonical id: 0 '+', 1 '-', 2 '*', 3 '/', 4 pow, 5 sqrt, 6 exp, 7 log,
    /// 8 '1.0', 9 constant placeholder, 10 + k for x_{k+1}.
    int id() const;
    static Token from_id(int id);
    std::string name() const;

    friend bool operator==(const Token&, const Token&) = default;
};

inline Token var_token(int k) { return {TokenKind::Var, k}; }

/// The tokens a policy may emit, in logit order.
class Library {
public:
    Library() = default;
    explicit Library(std::vector<Token> tokens);

    /// + - * / pow sqrt exp log 1.0 const x1..x_{n_vars}
    static Library standard(int n_vars);

    std::size_t size() const { return tokens_.size(); }
    const Token& operator[](std::size_t i) const { return tokens_[i]; }
    const std::vector<Token>& tokens() const { return tokens_; }
    /// Position of `t`, or -1.
    int index_of(const Token& t) const;
    int n_vars() const;

private:
    std::vector<Token> tokens_;
};

inline constexpr int kMinLength = 4;
inline constexpr int kMaxLength = 64;

struct Expression {
    std::vector<Token> tokens;      ///< prefix order
    std::vector<double> constants;  ///< one per Const token, in prefix order

    std::size_t length() const { return tokens.size(); }
    std::size_t placeholder_count() const;
    /// Complete prefix sequence (open slots reach zero exactly at the end).
    bool is_complete() const;

    friend bool operator==(const Expression&, const Expression&) = default;
};

/// Parent/sibling context after a prefix of tokens. `parent` is the last
/// operator still missing an operand, `sibling` its already-placed first
/// operand (if any).
class TraversalState {
public:
    TraversalState() = default;

    int open_slots() const { return open_; }
    int length() const { return length_; }
    bool complete() const { return length_ > 0 && open_ == 0; }
    std::optional<Token> parent() const { return parent_; }
    std::optional<Token> sibling() const { return sibling_; }

    /// Throws std::logic_error on a completed expression.
    void step(const Token& t);

private:
    struct Frame {
        Token op;
        int filled = 0;
        std::optional<Token> first_child;
    };
    std::vector<Frame> stack_;
    int open_ = 1;
    int length_ = 0;
    std::optional<Token> parent_;
    std::optional<Token> sibling_;
};

TraversalState traversal_state(std::span<const Token> prefix);

struct ConstraintSettings {
    int min_length = kMinLength;
    int max_length = kMaxLength;
    bool length_rule = true;
    bool constant_rule = true;
    bool inverse_rule = true;
};

struct Mask {
    std::vector<char> allowed;  ///< per library position
    bool relaxed = false;       ///< a rule had to be dropped to keep one token
};

/// Which library tokens may follow the prefix described by `state`.
Mask constraint_mask(const Library& lib, const TraversalState& state, const ConstraintSettings& cs = {});

/// Rules a finished expression breaks (empty when it satisfies all of them).
std::vector<std::string> constraint_violations(const Expression& e, const ConstraintSettings& cs = {});

/// Protected evaluation; nullopt for any domain violation or non-finite value.
std::optional<double> eval_expr(const Expression& e, std::span<const double> x);

/// Column-major feature matrix plus targets.
struct FitData {
    std::vector<std::vector<double>> x;  ///< x[k][row]
    std::vector<double> y;

    std::size_t rows() const { return y.size(); }
    std::size_t vars() const { return x.size(); }
};

FitData make_fit_data(const std::vector<std::vector<double>>& rows, std::span<const double> y);

/// Predictions for every row; nullopt if any row is invalid.
std::optional<std::vector<double>> eval_batch(const Expression& e, const FitData& data);

/// Infix form such as "(x1 + 1.0)", "sqrt(x1)", "(x1 ^ c)". With
/// `with_constants` placeholders print their current values.
std::string to_infix(const Expression& e, bool with_constants = false);

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Inverse of to_infix. "c" is a placeholder (value 1); other numeric
/// literals besides 1.0 become placeholders carrying that value.
Expression parse_infix(std::string_view text);

struct RewardResult {
    double reward = 0.0;
    double nrmse = std::numeric_limits<double>::infinity();
    bool invalid = false;
    bool degenerate = false;  ///< target standard deviation is zero
};

/// NRMSE with population standard deviation of y.
RewardResult reward_from_predictions(std::span<const double> y, std::span<const double> y_hat);
/// R = 1 / (1 + NRMSE); any invalid prediction gives R = 0.
RewardResult reward(const Expression& e, const FitData& data);

struct ConstantFitSettings {
    int max_iters = 200;
    double initial_step = 0.5;
    double f_tol = 1e-10;  ///< relative spread of NRMSE over the simplex
    double x_tol = 1e-8;
};

/// Nelder-Mead on NRMSE from all-ones constants. Never returns constants that
/// score worse than all-ones; returns `e` unchanged without placeholders or
/// when every trial point is invalid.
Expression optimize_constants(const Expression& e, const FitData& data, const ConstantFitSettings& s = {});

struct ScoredExpression {
    Expression expr;   ///< with fitted constants
    RewardResult result;
};

/// Fits constants and scores each expression; parallel across expressions.
std::vector<ScoredExpression> score_batch(const std::vector<Expression>& exprs, const FitData& data,
                                          bool fit_constants = true, const ConstantFitSettings& s = {});
/// Single-threaded reference for score_batch.
std::vector<ScoredExpression> score_batch_serial(const std::vector<Expression>& exprs, const FitData& data,
                                                 bool fit_constants = true, const ConstantFitSettings& s = {});

/// Draws a valid expression with uniform probabilities over the unmasked
/// tokens (used for fuzzing and baselines).
Expression sample_uniform_expression(const Library& lib, std::mt19937_64& rng, const ConstraintSettings& cs = {});

} // namespace symmap
