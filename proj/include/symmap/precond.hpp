#pragma once

// Parameterized preconditioners: Jacobi, SOR, SSOR and classical AMG.
//
// Splitting convention throughout: A = D + L + U with D the diagonal and L/U
// the strictly lower/upper parts.

#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "symmap/dense.hpp"
#include "symmap/sparse.hpp"

namespace symmap {

enum class PrecondKind { None, Jacobi, Sor, Ssor, Amg };
enum class AmgSmoother { Jacobi, Sor };

std::string_view to_string(PrecondKind k);
PrecondKind parse_precond_kind(std::string_view s);
std::string_view to_string(AmgSmoother s);
AmgSmoother parse_amg_smoother(std::string_view s);

struct PrecondConfig {
    PrecondKind kind = PrecondKind::None;
    double omega = 1.0;  ///< SOR/SSOR relaxation, also the SOR smoother weight inside AMG
    double theta = 0.0;  ///< AMG strength threshold
    int sweeps = 1;      ///< SOR sweeps per application
    AmgSmoother smoother = AmgSmoother::Jacobi;
    int coarse_cap = 64;

    /// Throws std::invalid_argument when omega/theta/sweeps are out of range for `kind`.
    void validate() const;
};

/// Legal open/closed range of the tunable parameter of `kind` (omega or theta).
struct ParamRange {
    double lo;
    double hi;
    bool lo_open;
    bool hi_open;
    bool contains(double v) const {
        return (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
    }
};
ParamRange legal_param_range(PrecondKind kind);

/// One SOR sweep of Ax = b starting from x (forward Gauss-Seidel order):
/// x <- (D + wL)^{-1} [(1-w) D x + w b - w U x]. Throws on a zero diagonal.
std::vector<double> sor_iterate(const CsrMatrix& a, std::span<const double> b,
                                std::span<const double> x, double omega);
void sor_sweep_in_place(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                        double omega);
/// Backward-ordered sweep (upper-triangular solve), used in SSOR and the
/// symmetric AMG smoother.
void sor_backward_sweep_in_place(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                                 double omega);

/// `sweeps` SOR iterations on A z = r from z = 0.
std::vector<double> sor_precond_apply(const CsrMatrix& a, std::span<const double> r, double omega,
                                      int sweeps = 1);

/// z = M^{-1} r with M = (D + wL) D^{-1} (D + wU) / (w (2 - w)).
/// Throws if A is not structurally symmetric or has a zero diagonal.
std::vector<double> ssor_precond_apply(const CsrMatrix& a, std::span<const double> r, double omega);

/// Strong-dependence graph: row i lists the j it strongly depends on.
struct StrengthGraph {
    std::vector<index_t> offsets{0};
    std::vector<index_t> cols;

    index_t nrows() const { return static_cast<index_t>(offsets.size()) - 1; }
    std::span<const index_t> row(index_t i) const {
        return {cols.data() + offsets[i], static_cast<std::size_t>(offsets[i + 1] - offsets[i])};
    }
    std::size_t edge_count() const { return cols.size(); }
};

/// i strongly depends on j != i iff -s a_ij >= theta * max_{k != i}(-s a_ik)
/// and -s a_ij > 0, where s = sign(a_ii) (s = +1 for a positive diagonal,
/// which is the textbook M-matrix rule).
StrengthGraph amg_strength(const CsrMatrix& a, double theta);

struct AmgLevel {
    CsrMatrix a;
    CsrMatrix p;        ///< prolongation to this level from the next coarser one
    CsrMatrix r;        ///< restriction (P^T)
    std::vector<double> inv_diag;
};

struct AmgHierarchy {
    std::vector<AmgLevel> levels;   ///< fine to coarse; the last level has empty p
    LuFactorization coarse_solver;  ///< factorization of the last level's matrix
    bool direct_coarse = true;      ///< false when the coarsest level is smoothed only
    bool stagnated = false;         ///< coarsening selected no C points somewhere
    double theta = 0.0;
    AmgSmoother smoother = AmgSmoother::Jacobi;
    double smoother_omega = 1.0;

    std::size_t num_levels() const { return levels.size(); }
};

/// Ruge-Stuben C/F splitting, direct interpolation, Galerkin coarse operators,
/// recursion until size <= coarse_cap. If the finest level cannot be coarsened
/// the hierarchy degenerates to single-level Jacobi and `stagnated` is set.
AmgHierarchy amg_setup(const CsrMatrix& a, double theta, int coarse_cap = 64,
                       AmgSmoother smoother = AmgSmoother::Jacobi, double smoother_omega = 1.0);

/// One V-cycle from a zero initial guess (1 pre- and 1 post-smoothing step).
std::vector<double> amg_vcycle_apply(const AmgHierarchy& h, std::span<const double> r);

/// C/F splitting used by amg_setup: true marks a coarse point.
std::vector<char> rs_coarsen(const StrengthGraph& s);

/// Direct interpolation restricted to strong C-neighbours.
CsrMatrix direct_interpolation(const CsrMatrix& a, const StrengthGraph& s,
                               std::span<const char> is_coarse);

/// A configured preconditioner ready to apply z = M^{-1} r. Setup work (AMG
/// hierarchy, inverse diagonal) happens in the constructor.
class Preconditioner {
public:
    Preconditioner(const CsrMatrix& a, const PrecondConfig& cfg);

    void apply(std::span<const double> r, std::span<double> z) const;
    std::vector<double> apply(std::span<const double> r) const;

    const PrecondConfig& config() const { return cfg_; }
    const AmgHierarchy* hierarchy() const { return amg_ ? &*amg_ : nullptr; }
    /// True when M is symmetric for symmetric A (usable inside CG).
    bool is_symmetric() const;

private:
    const CsrMatrix* a_;
    PrecondConfig cfg_;
    std::vector<double> inv_diag_;
    std::optional<AmgHierarchy> amg_;
};

} // namespace symmap
