#include "symmap/precond.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace symmap {

std::string_view to_string(PrecondKind k) {
    switch (k) {
    case PrecondKind::None: return "none";
    case PrecondKind::Jacobi: return "jacobi";
    case PrecondKind::Sor: return "sor";
    case PrecondKind::Ssor: return "ssor";
    case PrecondKind::Amg: return "amg";
    }
    return "unknown";
}

namespace {
std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}
} // namespace

PrecondKind parse_precond_kind(std::string_view s) {
    const std::string v = lowercase(s);
    if (v == "none") return PrecondKind::None;
    if (v == "jacobi") return PrecondKind::Jacobi;
    if (v == "sor") return PrecondKind::Sor;
    if (v == "ssor") return PrecondKind::Ssor;
    if (v == "amg") return PrecondKind::Amg;
    throw std::invalid_argument("unknown preconditioner '" + std::string(s) + "'");
}

std::string_view to_string(AmgSmoother s) { return s == AmgSmoother::Jacobi ? "jacobi" : "sor"; }

AmgSmoother parse_amg_smoother(std::string_view s) {
    const std::string v = lowercase(s);
    if (v == "jacobi") return AmgSmoother::Jacobi;
    if (v == "sor") return AmgSmoother::Sor;
    throw std::invalid_argument("unknown AMG smoother '" + std::string(s) + "'");
}

ParamRange legal_param_range(PrecondKind kind) {
    switch (kind) {
    case PrecondKind::Sor:
    case PrecondKind::Ssor: return {0.0, 2.0, true, true};
    case PrecondKind::Amg: return {0.0, 1.0, false, true};
    default: return {0.0, 0.0, false, false};
    }
}

void PrecondConfig::validate() const {
    const bool sor_like = kind == PrecondKind::Sor || kind == PrecondKind::Ssor ||
                          (kind == PrecondKind::Amg && smoother == AmgSmoother::Sor);
    if (sor_like && !(omega > 0.0 && omega < 2.0))
        throw std::invalid_argument("relaxation factor omega must lie in (0, 2), got " + std::to_string(omega));
    if (kind == PrecondKind::Amg && !(theta >= 0.0 && theta < 1.0))
        throw std::invalid_argument("AMG strength threshold theta must lie in [0, 1), got " + std::to_string(theta));
    if (kind == PrecondKind::Sor && sweeps < 1) throw std::invalid_argument("SOR sweeps must be >= 1");
    if (kind == PrecondKind::Amg && coarse_cap < 1) throw std::invalid_argument("AMG coarse_cap must be >= 1");
}

namespace {

void check_omega(double omega) {
    if (!(omega > 0.0 && omega < 2.0))
        throw std::invalid_argument("relaxation factor omega must lie in (0, 2), got " + std::to_string(omega));
}

std::vector<double> checked_diagonal(const CsrMatrix& a) {
    if (!a.is_square()) throw std::invalid_argument("preconditioner requires a square matrix");
    std::vector<double> d = a.diagonal();
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i] == 0.0) throw std::invalid_argument("zero diagonal entry in row " + std::to_string(i));
    return d;
}

void check_lengths(const CsrMatrix& a, std::size_t n) {
    if (n != static_cast<std::size_t>(a.nrows()))
        throw std::invalid_argument("vector length does not match matrix dimension");
}

// (D + wL) y = r, D/L read from A
void forward_solve(const CsrMatrix& a, std::span<const double> diag, double omega,
                   std::span<const double> r, std::span<double> y) {
    for (index_t i = 0; i < a.nrows(); ++i) {
        const auto cols = a.row_cols(i);
        const auto vals = a.row_values(i);
        double s = r[i];
        for (std::size_t k = 0; k < cols.size() && cols[k] < i; ++k) s -= omega * vals[k] * y[cols[k]];
        y[i] = s / diag[i];
    }
}

// (D + wU) y = r
void backward_solve(const CsrMatrix& a, std::span<const double> diag, double omega,
                    std::span<const double> r, std::span<double> y) {
    for (index_t i = a.nrows(); i-- > 0;) {
        const auto cols = a.row_cols(i);
        const auto vals = a.row_values(i);
        double s = r[i];
        for (std::size_t k = cols.size(); k-- > 0 && cols[k] > i;) s -= omega * vals[k] * y[cols[k]];
        y[i] = s / diag[i];
    }
}

void ssor_apply_unchecked(const CsrMatrix& a, std::span<const double> diag, double omega,
                          std::span<const double> r, std::span<double> z) {
    const std::size_t n = r.size();
    std::vector<double> y(n);
    forward_solve(a, diag, omega, r, y);
    for (std::size_t i = 0; i < n; ++i) y[i] *= diag[i];
    backward_solve(a, diag, omega, y, z);
    const double scale = omega * (2.0 - omega);
    for (std::size_t i = 0; i < n; ++i) z[i] *= scale;
}

} // namespace

void sor_sweep_in_place(const CsrMatrix& a, std::span<const double> b, std::span<double> x, double omega) {
    check_lengths(a, b.size());
    check_lengths(a, x.size());
    for (index_t i = 0; i < a.nrows(); ++i) {
        const auto cols = a.row_cols(i);
        const auto vals = a.row_values(i);
        double sigma = 0.0, d = 0.0;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k] == i)
                d = vals[k];
            else
                sigma += vals[k] * x[cols[k]];
        }
        if (d == 0.0) throw std::invalid_argument("zero diagonal entry in row " + std::to_string(i));
        x[i] = (1.0 - omega) * x[i] + omega * (b[i] - sigma) / d;
    }
}

void sor_backward_sweep_in_place(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                                 double omega) {
    check_lengths(a, b.size());
    check_lengths(a, x.size());
    for (index_t i = a.nrows(); i-- > 0;) {
        const auto cols = a.row_cols(i);
        const auto vals = a.row_values(i);
        double sigma = 0.0, d = 0.0;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k] == i)
                d = vals[k];
            else
                sigma += vals[k] * x[cols[k]];
        }
        if (d == 0.0) throw std::invalid_argument("zero diagonal entry in row " + std::to_string(i));
        x[i] = (1.0 - omega) * x[i] + omega * (b[i] - sigma) / d;
    }
}

std::vector<double> sor_iterate(const CsrMatrix& a, std::span<const double> b, std::span<const double> x,
                                double omega) {
    check_omega(omega);
    std::vector<double> out(x.begin(), x.end());
    sor_sweep_in_place(a, b, out, omega);
    return out;
}

std::vector<double> sor_precond_apply(const CsrMatrix& a, std::span<const double> r, double omega, int sweeps) {
    check_omega(omega);
    if (sweeps < 1) throw std::invalid_argument("SOR sweeps must be >= 1");
    std::vector<double> z(r.size(), 0.0);
    for (int s = 0; s < sweeps; ++s) sor_sweep_in_place(a, r, z, omega);
    return z;
}

std::vector<double> ssor_precond_apply(const CsrMatrix& a, std::span<const double> r, double omega) {
    check_omega(omega);
    const std::vector<double> d = checked_diagonal(a);
    check_lengths(a, r.size());
    if (!is_structurally_symmetric(a)) throw std::invalid_argument("SSOR requires a symmetric matrix");
    std::vector<double> z(r.size());
    ssor_apply_unchecked(a, d, omega, r, z);
    return z;
}

Preconditioner::Preconditioner(const CsrMatrix& a, const PrecondConfig& cfg) : a_(&a), cfg_(cfg) {
    cfg_.validate();
    switch (cfg_.kind) {
    case PrecondKind::None: break;
    case PrecondKind::Jacobi:
    case PrecondKind::Sor: {
        const auto d = checked_diagonal(a);
        inv_diag_.resize(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) inv_diag_[i] = 1.0 / d[i];
        break;
    }
    case PrecondKind::Ssor: {
        inv_diag_ = checked_diagonal(a); // holds D itself for the triangular solves
        if (!is_structurally_symmetric(a)) throw std::invalid_argument("SSOR requires a symmetric matrix");
        break;
    }
    case PrecondKind::Amg:
        amg_ = amg_setup(a, cfg_.theta, cfg_.coarse_cap, cfg_.smoother, cfg_.omega);
        break;
    }
}

bool Preconditioner::is_symmetric() const { return cfg_.kind != PrecondKind::Sor; }

void Preconditioner::apply(std::span<const double> r, std::span<double> z) const {
    const std::size_t n = r.size();
    switch (cfg_.kind) {
    case PrecondKind::None: std::copy(r.begin(), r.end(), z.begin()); return;
    case PrecondKind::Jacobi:
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag_[i] * r[i];
        return;
    case PrecondKind::Sor:
        std::fill(z.begin(), z.end(), 0.0);
        for (int s = 0; s < cfg_.sweeps; ++s) sor_sweep_in_place(*a_, r, z, cfg_.omega);
        return;
    case PrecondKind::Ssor: ssor_apply_unchecked(*a_, inv_diag_, cfg_.omega, r, z); return;
    case PrecondKind::Amg: {
        const auto out = amg_vcycle_apply(*amg_, r);
        std::copy(out.begin(), out.end(), z.begin());
        return;
    }
    }
}

std::vector<double> Preconditioner::apply(std::span<const double> r) const {
    std::vector<double> z(r.size());
    apply(r, z);
    return z;
}

} // namespace symmap
