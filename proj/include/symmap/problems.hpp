#pragma once

// Finite-difference linear systems from parameterized PDE families.
//
// All families live on the unit square with a uniform grid of grid_n x grid_n
// interior points, h = 1/(grid_n+1). Unknown (i, j) -- i along x, j along y --
// is stored at row j*grid_n + i.

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "symmap/sparse.hpp"

namespace symmap {

enum class Family { Elliptic, Darcy, Poisson, Thermal };

std::string_view to_string(Family f);
/// Accepts "elliptic", "darcy", "poisson", "thermal" (case-insensitive).
Family parse_family(std::string_view s);

/// Number of features each family exposes.
std::size_t feature_count(Family f);
std::vector<std::string> feature_names(Family f);

struct ProblemInstance {
    Family family = Family::Poisson;
    std::vector<double> features;
    CsrMatrix a;
    std::vector<double> b;
    int grid_n = 0;
    std::uint64_t seed = 0;
};

/// Tensor-product Chebyshev series sum_{j,k} c[j + (deg_x+1)*k] T_j(x) T_k(y)
/// on [-1, 1]^2. The coefficient order is x-fastest: 1, x, x^2, ..., y, xy, ...
struct Cheb2D {
    int deg_x = 0;
    int deg_y = 0;
    std::vector<double> coeffs;

    double operator()(double x, double y) const;
};

double chebyshev_t(int degree, double t);
double cheb2d_eval(const Cheb2D& c, double x, double y);

/// One-dimensional Chebyshev series on [-1, 1].
double cheb1d_eval(std::span<const double> coeffs, double t);

struct EllipticCoeffs {
    double a11 = 1.0, a12 = 0.0, a22 = 1.0, a1 = 0.0, a2 = 0.0, a0 = 0.0;
};

/// a11 u_xx + a12 u_xy + a22 u_yy + a1 u_x + a2 u_y + a0 u = f with zero
/// Dirichlet data, 9-point central differences. Throws std::invalid_argument
/// unless 4 a11 a22 > a12^2.
ProblemInstance gen_elliptic(const EllipticCoeffs& c, int grid_n, std::uint64_t rhs_seed);

/// -div(K grad h) = f with zero Dirichlet data. K is a cubic-by-cubic Chebyshev
/// field (16 coefficients); face coefficients are arithmetic means of nodal K
/// after clamping K to max(K, 0.1 max|K|).
ProblemInstance gen_darcy(const Cheb2D& k_field, int grid_n, std::uint64_t rhs_seed);

/// -Laplace(u) = f with u = g on the boundary. Features: the four coefficients
/// of g (bilinear Chebyshev field) followed by the four of f.
ProblemInstance gen_poisson(std::span<const double> features, int grid_n);

/// Steady heat equation. Features: four 1-D Chebyshev coefficients of the
/// top/bottom temperature profile, then the left and right temperatures.
/// Throws unless left in [-100, 0] and right in [0, 100].
ProblemInstance gen_thermal(std::span<const double> features, int grid_n);

/// Discrete -Laplacian on the interior grid (4/h^2 diagonal, -1/h^2 neighbours).
CsrMatrix laplacian_5pt(int grid_n);

/// Deterministic seed stream: independent 64-bit seeds from one master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Draws one instance of `family` with randomized features, reproducible from `seed`.
ProblemInstance sample_instance(Family family, int grid_n, std::uint64_t seed);

/// Elliptic coefficients drawn per the dataset recipe (a12 small, a11 > 0,
/// rejection until elliptic). `symmetric` zeroes a1 and a2.
EllipticCoeffs sample_elliptic_coeffs(std::mt19937_64& rng, bool symmetric = false);

/// `count` instances with per-instance seeds derived from `master_seed`;
/// generated in parallel, returned in index order.
std::vector<ProblemInstance> generate_problems(Family family, int grid_n, std::size_t count,
                                               std::uint64_t master_seed,
                                               bool symmetric_elliptic = false);

} // namespace symmap
