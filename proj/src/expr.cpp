#include "symmap/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace symmap {

int Token::arity() const {
    switch (kind) {
    case TokenKind::Add:
    case TokenKind::Sub:
    case TokenKind::Mul:
    case TokenKind::Div:
    case TokenKind::Pow: return 2;
    case TokenKind::Sqrt:
    case TokenKind::Exp:
    case TokenKind::Log: return 1;
    default: return 0;
    }
}

int Token::id() const { return kind == TokenKind::Var ? 10 + var : static_cast<int>(kind); }

Token Token::from_id(int id) {
    if (id < 0) throw std::invalid_argument("negative token id");
    if (id >= 10) return var_token(id - 10);
    return Token{static_cast<TokenKind>(id), -1};
}

std::string Token::name() const {
    switch (kind) {
    case TokenKind::Add: return "+";
    case TokenKind::Sub: return "-";
    case TokenKind::Mul: return "*";
    case TokenKind::Div: return "/";
    case TokenKind::Pow: return "^";
    case TokenKind::Sqrt: return "sqrt";
    case TokenKind::Exp: return "exp";
    case TokenKind::Log: return "log";
    case TokenKind::One: return "1.0";
    case TokenKind::Const: return "c";
    case TokenKind::Var: return "x" + std::to_string(var + 1);
    }
    return "?";
}

Library::Library(std::vector<Token> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.empty()) throw std::invalid_argument("token library must not be empty");
    for (std::size_t i = 0; i < tokens_.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (tokens_[i] == tokens_[j]) throw std::invalid_argument("duplicate token '" + tokens_[i].name() + "'");
}

Library Library::standard(int n_vars) {
    if (n_vars < 1) throw std::invalid_argument("library needs at least one variable");
    std::vector<Token> t;
    for (int id = 0; id < 10; ++id) t.push_back(Token::from_id(id));
    for (int k = 0; k < n_vars; ++k) t.push_back(var_token(k));
    return Library(std::move(t));
}

int Library::index_of(const Token& t) const {
    for (std::size_t i = 0; i < tokens_.size(); ++i)
        if (tokens_[i] == t) return static_cast<int>(i);
    return -1;
}

int Library::n_vars() const {
    int n = 0;
    for (const Token& t : tokens_)
        if (t.kind == TokenKind::Var) n = std::max(n, t.var + 1);
    return n;
}

std::size_t Expression::placeholder_count() const {
    return static_cast<std::size_t>(
        std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return t.kind == TokenKind::Const; }));
}

bool Expression::is_complete() const {
    if (tokens.empty()) return false;
    int open = 1;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (open == 0) return false;
        open += tokens[i].arity() - 1;
    }
    return open == 0;
}

void TraversalState::step(const Token& t) {
    if (complete()) throw std::logic_error("traversal_step on a completed expression");
    ++length_;
    open_ += t.arity() - 1;
    if (t.arity() > 0) {
        stack_.push_back({t, 0, std::nullopt});
        parent_ = t;
        sibling_.reset();
        return;
    }
    // a finished subtree rooted at `done` bubbles up until an operator still needs operands
    Token done = t;
    while (!stack_.empty()) {
        Frame& top = stack_.back();
        if (top.filled == 0) top.first_child = done;
        ++top.filled;
        if (top.filled < top.op.arity()) {
            parent_ = top.op;
            sibling_ = top.first_child;
            return;
        }
        done = top.op;
        stack_.pop_back();
    }
    parent_.reset();
    sibling_.reset();
}

TraversalState traversal_state(std::span<const Token> prefix) {
    TraversalState s;
    for (const Token& t : prefix) s.step(t);
    return s;
}

Mask constraint_mask(const Library& lib, const TraversalState& state, const ConstraintSettings& cs) {
    Mask m;
    m.allowed.assign(lib.size(), 0);
    if (state.complete()) return m;
    const auto parent = state.parent();
    const auto sibling = state.sibling();

    auto violates = [&](const Token& t, int rule) {
        switch (rule) {
        case 0: {
            const int new_len = state.length() + 1;
            const int new_open = state.open_slots() - 1 + t.arity();
            if (new_len + new_open > cs.max_length) return true;
            return new_open == 0 && new_len < cs.min_length;
        }
        case 1:
            return t.is_constant() && parent && parent->arity() == 2 && sibling && sibling->is_constant();
        case 2:
            return parent && ((parent->kind == TokenKind::Log && t.kind == TokenKind::Exp) ||
                              (parent->kind == TokenKind::Exp && t.kind == TokenKind::Log));
        }
        return false;
    };

    bool active[3] = {cs.length_rule, cs.constant_rule, cs.inverse_rule};
    for (int drop = 3; drop >= 0; --drop) {
        bool any = false;
        for (std::size_t i = 0; i < lib.size(); ++i) {
            bool ok = true;
            for (int r = 0; r < 3 && ok; ++r)
                if (active[r] && violates(lib[i], r)) ok = false;
            m.allowed[i] = ok ? 1 : 0;
            any = any || ok;
        }
        if (any) return m;
        // relax the most recently listed rule still active
        int last = -1;
        for (int r = 0; r < 3; ++r)
            if (active[r]) last = r;
        if (last < 0) break;
        active[last] = false;
        m.relaxed = true;
    }
    return m;
}

namespace {

struct Node {
    Token tok;
    std::vector<std::size_t> children;
};

// Prefix sequence to tree nodes (node i is token i); returns false if malformed.
bool build_tree(std::span<const Token> toks, std::vector<Node>& nodes) {
    nodes.assign(toks.size(), {});
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        nodes[i].tok = toks[i];
        if (i > 0) {
            if (stack.empty()) return false;
            nodes[stack.back()].children.push_back(i);
            while (!stack.empty() &&
                   nodes[stack.back()].children.size() == static_cast<std::size_t>(nodes[stack.back()].tok.arity()))
                stack.pop_back();
        }
        if (toks[i].arity() > 0) stack.push_back(i);
        if (i == 0 && toks[i].arity() == 0 && toks.size() > 1) return false;
    }
    return stack.empty() && !toks.empty();
}

} // namespace

std::vector<std::string> constraint_violations(const Expression& e, const ConstraintSettings& cs) {
    std::vector<std::string> out;
    const int len = static_cast<int>(e.length());
    if (len < cs.min_length || len > cs.max_length)
        out.push_back("length " + std::to_string(len) + " outside [" + std::to_string(cs.min_length) + ", " +
                      std::to_string(cs.max_length) + "]");
    std::vector<Node> nodes;
    if (!build_tree(e.tokens, nodes)) {
        out.push_back("not a complete prefix expression");
        return out;
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const Node& n = nodes[i];
        if (n.tok.arity() == 2 && nodes[n.children[0]].tok.is_constant() && nodes[n.children[1]].tok.is_constant())
            out.push_back("binary operator at " + std::to_string(i) + " has two constant operands");
        if (n.tok.arity() == 1) {
            const TokenKind c = nodes[n.children[0]].tok.kind;
            if ((n.tok.kind == TokenKind::Log && c == TokenKind::Exp) ||
                (n.tok.kind == TokenKind::Exp && c == TokenKind::Log))
                out.push_back("inverse operator nested at " + std::to_string(i));
        }
    }
    return out;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDivEps = 1e-12;

inline double apply_binary(TokenKind k, double a, double b) {
    double r;
    switch (k) {
    case TokenKind::Add: r = a + b; break;
    case TokenKind::Sub: r = a - b; break;
    case TokenKind::Mul: r = a * b; break;
    case TokenKind::Div: r = std::abs(b) < kDivEps ? kNaN : a / b; break;
    case TokenKind::Pow: r = a > 0.0 ? std::exp(b * std::log(a)) : kNaN; break;
    default: r = kNaN;
    }
    return std::isfinite(r) ? r : kNaN;
}

inline double apply_unary(TokenKind k, double a) {
    double r;
    switch (k) {
    case TokenKind::Sqrt: r = a < 0.0 ? kNaN : std::sqrt(a); break;
    case TokenKind::Exp: r = std::exp(a); break;
    case TokenKind::Log: r = a > 0.0 ? std::log(a) : kNaN; break;
    default: r = kNaN;
    }
    return std::isfinite(r) ? r : kNaN;
}

void check_evaluable(const Expression& e) {
    if (!e.is_complete()) throw std::invalid_argument("expression is not a complete prefix sequence");
    if (e.constants.size() != e.placeholder_count())
        throw std::invalid_argument("expression has " + std::to_string(e.placeholder_count()) +
                                    " placeholders but " + std::to_string(e.constants.size()) + " constants");
}

} // namespace

std::optional<double> eval_expr(const Expression& e, std::span<const double> x) {
    check_evaluable(e);
    std::vector<double> stack;
    stack.reserve(e.length());
    auto c = static_cast<long>(e.constants.size());
    for (std::size_t i = e.length(); i-- > 0;) {
        const Token& t = e.tokens[i];
        switch (t.arity()) {
        case 0:
            if (t.kind == TokenKind::One) {
                stack.push_back(1.0);
            } else if (t.kind == TokenKind::Const) {
                stack.push_back(e.constants[static_cast<std::size_t>(--c)]);
            } else {
                if (t.var < 0 || static_cast<std::size_t>(t.var) >= x.size())
                    throw std::invalid_argument("variable " + t.name() + " out of range for feature vector");
                stack.push_back(x[static_cast<std::size_t>(t.var)]);
            }
            break;
        case 1: stack.back() = apply_unary(t.kind, stack.back()); break;
        default: {
            const double a = stack.back();
            stack.pop_back();
            const double b = stack.back();
            stack.back() = apply_binary(t.kind, a, b);
        }
        }
        if (std::isnan(stack.back())) return std::nullopt;
    }
    return stack.back();
}

FitData make_fit_data(const std::vector<std::vector<double>>& rows, std::span<const double> y) {
    if (rows.size() != y.size()) throw std::invalid_argument("feature rows and targets differ in length");
    FitData d;
    const std::size_t nv = rows.empty() ? 0 : rows.front().size();
    d.x.assign(nv, std::vector<double>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != nv) throw std::invalid_argument("ragged feature rows");
        for (std::size_t k = 0; k < nv; ++k) d.x[k][r] = rows[r][k];
    }
    d.y.assign(y.begin(), y.end());
    return d;
}

namespace {

// Operand of the vectorised evaluator: a broadcast scalar, a borrowed data
// column, or an owned scratch buffer.
struct Slot {
    bool scalar = false;
    double value = 0.0;
    const double* col = nullptr;
    int buf = -1;
};

struct Scratch {
    std::vector<std::vector<double>> bufs;
    std::vector<int> free;

    int take(std::size_t n) {
        if (free.empty()) {
            bufs.emplace_back(n);
            return static_cast<int>(bufs.size()) - 1;
        }
        const int b = free.back();
        free.pop_back();
        bufs[static_cast<std::size_t>(b)].resize(n);
        return b;
    }
    void give(int b) {
        if (b >= 0) free.push_back(b);
    }
};

} // namespace

std::optional<std::vector<double>> eval_batch(const Expression& e, const FitData& data) {
    check_evaluable(e);
    const std::size_t n = data.rows();
    thread_local Scratch scratch;
    scratch.free.clear();
    for (std::size_t b = 0; b < scratch.bufs.size(); ++b) scratch.free.push_back(static_cast<int>(b));
    std::vector<Slot> stack;
    stack.reserve(e.length());
    auto c = static_cast<long>(e.constants.size());
    auto ptr = [&](const Slot& s) -> const double* {
        return s.buf >= 0 ? scratch.bufs[static_cast<std::size_t>(s.buf)].data() : s.col;
    };

    for (std::size_t i = e.length(); i-- > 0;) {
        const Token& t = e.tokens[i];
        if (t.arity() == 0) {
            Slot s;
            if (t.kind == TokenKind::One || t.kind == TokenKind::Const) {
                s.scalar = true;
                s.value = t.kind == TokenKind::One ? 1.0 : e.constants[static_cast<std::size_t>(--c)];
            } else {
                if (t.var < 0 || static_cast<std::size_t>(t.var) >= data.vars())
                    throw std::invalid_argument("variable " + t.name() + " out of range for dataset");
                s.col = data.x[static_cast<std::size_t>(t.var)].data();
            }
            stack.push_back(s);
            continue;
        }
        bool bad = false;
        if (t.arity() == 1) {
            Slot& a = stack.back();
            if (a.scalar) {
                a.value = apply_unary(t.kind, a.value);
                bad = std::isnan(a.value);
            } else {
                const double* in = ptr(a);
                if (a.buf < 0) a.buf = scratch.take(n);
                double* out = scratch.bufs[static_cast<std::size_t>(a.buf)].data();
                for (std::size_t r = 0; r < n; ++r) {
                    out[r] = apply_unary(t.kind, in[r]);
                    bad = bad || std::isnan(out[r]);
                }
                a.col = nullptr;
            }
        } else {
            const Slot a = stack.back();
            stack.pop_back();
            Slot& b = stack.back();
            if (a.scalar && b.scalar) {
                b.value = apply_binary(t.kind, a.value, b.value);
                bad = std::isnan(b.value);
            } else {
                const double* pa = a.scalar ? nullptr : ptr(a);
                const double* pb = b.scalar ? nullptr : ptr(b);
                int out_buf = a.buf >= 0 ? a.buf : (b.buf >= 0 ? b.buf : scratch.take(n));
                double* out = scratch.bufs[static_cast<std::size_t>(out_buf)].data();
                for (std::size_t r = 0; r < n; ++r) {
                    out[r] = apply_binary(t.kind, pa ? pa[r] : a.value, pb ? pb[r] : b.value);
                    bad = bad || std::isnan(out[r]);
                }
                if (b.buf >= 0 && b.buf != out_buf) scratch.give(b.buf);
                b = Slot{false, 0.0, nullptr, out_buf};
            }
        }
        if (bad) return std::nullopt;
    }
    const Slot& top = stack.back();
    if (top.scalar) return std::vector<double>(n, top.value);
    const double* p = ptr(top);
    return std::vector<double>(p, p + n);
}

namespace {

std::string format_constant(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (s == "1") s = "1.0000000000000000";  // keep it distinct from the 1.0 token
    return s;
}

std::string infix_at(const Expression& e, std::size_t& pos, std::size_t& cidx, bool with_constants) {
    const Token& t = e.tokens.at(pos++);
    switch (t.arity()) {
    case 0:
        if (t.kind == TokenKind::Const) {
            const std::size_t k = cidx++;
            return with_constants && k < e.constants.size() ? format_constant(e.constants[k]) : "c";
        }
        return t.name();
    case 1: {
        std::string inner = infix_at(e, pos, cidx, with_constants);
        return t.name() + "(" + inner + ")";
    }
    default: {
        std::string lhs = infix_at(e, pos, cidx, with_constants);
        std::string rhs = infix_at(e, pos, cidx, with_constants);
        return "(" + lhs + " " + t.name() + " " + rhs + ")";
    }
    }
}

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    Expression run() {
        parse_operand();
        skip_ws();
        if (pos_ != s_.size()) throw ParseError("unexpected trailing input", pos_);
        return std::move(e_);
    }

private:
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    [[noreturn]] void fail(const std::string& what) {
        if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
        throw ParseError(what + " '" + std::string(1, s_[pos_]) + "'", pos_);
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "', found");
        ++pos_;
    }

    bool starts_with(std::string_view w) const { return s_.substr(pos_, w.size()) == w; }

    void parse_operand() {
        skip_ws();
        if (pos_ >= s_.size()) fail("");
        const char ch = s_[pos_];
        if (ch == '(') {
            ++pos_;
            const std::size_t op_slot = e_.tokens.size();
            e_.tokens.push_back({});  // operator filled in after the left operand
            parse_operand();
            skip_ws();
            if (pos_ >= s_.size()) fail("");
            Token op;
            switch (s_[pos_]) {
            case '+': op.kind = TokenKind::Add; break;
            case '-': op.kind = TokenKind::Sub; break;
            case '*': op.kind = TokenKind::Mul; break;
            case '/': op.kind = TokenKind::Div; break;
            case '^': op.kind = TokenKind::Pow; break;
            default: fail("expected a binary operator, found");
            }
            ++pos_;
            e_.tokens[op_slot] = op;
            parse_operand();
            expect(')');
            return;
        }
        for (auto [word, kind] : {std::pair{"sqrt", TokenKind::Sqrt}, std::pair{"exp", TokenKind::Exp},
                                  std::pair{"log", TokenKind::Log}}) {
            if (starts_with(word)) {
                pos_ += std::string_view(word).size();
                e_.tokens.push_back({kind, -1});
                expect('(');
                parse_operand();
                expect(')');
                return;
            }
        }
        if (ch == 'x') {
            const std::size_t start = pos_++;
            std::size_t end = pos_;
            while (end < s_.size() && std::isdigit(static_cast<unsigned char>(s_[end]))) ++end;
            if (end == pos_) fail("expected a variable index after 'x', found");
            const int k = std::atoi(std::string(s_.substr(pos_, end - pos_)).c_str());
            if (k < 1) throw ParseError("variable index must be >= 1", start);
            pos_ = end;
            e_.tokens.push_back(var_token(k - 1));
            return;
        }
        if (ch == 'c' && (pos_ + 1 >= s_.size() || !std::isalnum(static_cast<unsigned char>(s_[pos_ + 1])))) {
            ++pos_;
            e_.tokens.push_back({TokenKind::Const, -1});
            e_.constants.push_back(1.0);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.') {
            const std::string rest(s_.substr(pos_));
            char* end = nullptr;
            const double v = std::strtod(rest.c_str(), &end);
            if (end == rest.c_str()) fail("expected a number, found");
            const std::size_t used = static_cast<std::size_t>(end - rest.c_str());
            if (rest.substr(0, used) == "1.0") {
                e_.tokens.push_back({TokenKind::One, -1});
            } else {
                e_.tokens.push_back({TokenKind::Const, -1});
                e_.constants.push_back(v);
            }
            pos_ += used;
            return;
        }
        fail("unexpected character");
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    Expression e_;
};

} // namespace

std::string to_infix(const Expression& e, bool with_constants) {
    if (!e.is_complete()) throw std::invalid_argument("expression is not a complete prefix sequence");
    std::size_t pos = 0, cidx = 0;
    return infix_at(e, pos, cidx, with_constants);
}

Expression parse_infix(std::string_view text) { return Parser(text).run(); }

Expression sample_uniform_expression(const Library& lib, std::mt19937_64& rng, const ConstraintSettings& cs) {
    Expression e;
    TraversalState st;
    while (!st.complete()) {
        const Mask m = constraint_mask(lib, st, cs);
        std::vector<std::size_t> ok;
        for (std::size_t i = 0; i < m.allowed.size(); ++i)
            if (m.allowed[i]) ok.push_back(i);
        if (ok.empty()) throw std::logic_error("constraint mask left no admissible token");
        std::uniform_int_distribution<std::size_t> pick(0, ok.size() - 1);
        const Token t = lib[ok[pick(rng)]];
        e.tokens.push_back(t);
        if (t.kind == TokenKind::Const) e.constants.push_back(1.0);
        st.step(t);
    }
    return e;
}

} // namespace symmap
