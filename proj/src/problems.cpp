#include "symmap/problems.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace symmap {

std::string_view to_string(Family f) {
    switch (f) {
    case Family::Elliptic: return "elliptic";
    case Family::Darcy: return "darcy";
    case Family::Poisson: return "poisson";
    case Family::Thermal: return "thermal";
    }
    return "unknown";
}

Family parse_family(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lower == "elliptic") return Family::Elliptic;
    if (lower == "darcy") return Family::Darcy;
    if (lower == "poisson") return Family::Poisson;
    if (lower == "thermal") return Family::Thermal;
    throw std::invalid_argument("unknown problem family '" + std::string(s) + "'");
}

std::size_t feature_count(Family f) {
    switch (f) {
    case Family::Elliptic: return 6;
    case Family::Darcy: return 16;
    case Family::Poisson: return 8;
    case Family::Thermal: return 6;
    }
    return 0;
}

std::vector<std::string> feature_names(Family f) {
    switch (f) {
    case Family::Elliptic: return {"a11", "a12", "a22", "a1", "a2", "a0"};
    case Family::Darcy: {
        std::vector<std::string> names;
        for (int ky = 0; ky < 4; ++ky)
            for (int kx = 0; kx < 4; ++kx)
                names.push_back("k_x" + std::to_string(kx) + "y" + std::to_string(ky));
        return names;
    }
    case Family::Poisson: return {"g00", "g10", "g01", "g11", "f00", "f10", "f01", "f11"};
    case Family::Thermal: return {"t0", "t1", "t2", "t3", "left", "right"};
    }
    return {};
}

double chebyshev_t(int degree, double t) {
    if (degree == 0) return 1.0;
    double prev = 1.0, cur = t;
    for (int m = 1; m < degree; ++m) {
        const double next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double cheb1d_eval(std::span<const double> coeffs, double t) {
    double s = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) s += coeffs[k] * chebyshev_t(static_cast<int>(k), t);
    return s;
}

double cheb2d_eval(const Cheb2D& c, double x, double y) {
    const std::size_t nx = static_cast<std::size_t>(c.deg_x) + 1;
    const std::size_t ny = static_cast<std::size_t>(c.deg_y) + 1;
    if (c.coeffs.size() != nx * ny) throw std::invalid_argument("Cheb2D: coefficient count mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < ny; ++k) {
        const double ty = chebyshev_t(static_cast<int>(k), y);
        for (std::size_t j = 0; j < nx; ++j) s += c.coeffs[j + nx * k] * chebyshev_t(static_cast<int>(j), x) * ty;
    }
    return s;
}

double Cheb2D::operator()(double x, double y) const { return cheb2d_eval(*this, x, y); }

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    // splitmix64 finalizer over a combined key
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

void check_grid(int grid_n) {
    if (grid_n < 2) throw std::invalid_argument("grid_n must be >= 2, got " + std::to_string(grid_n));
}

inline index_t node(int i, int j, int n) { return static_cast<index_t>(j * n + i); }

/// Smooth pseudorandom source term on the unit square (biquadratic Chebyshev field).
Cheb2D random_source(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Cheb2D f{2, 2, std::vector<double>(9)};
    for (double& c : f.coeffs) c = u(rng);
    return f;
}

std::vector<double> sample_field(const Cheb2D& f, int n) {
    const double h = 1.0 / (n + 1);
    std::vector<double> v(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) v[node(i, j, n)] = f(2.0 * (i + 1) * h - 1.0, 2.0 * (j + 1) * h - 1.0);
    return v;
}

} // namespace

CsrMatrix laplacian_5pt(int grid_n) {
    check_grid(grid_n);
    const int n = grid_n;
    const double h = 1.0 / (n + 1);
    const double inv_h2 = 1.0 / (h * h);
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(5) * n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const index_t r = node(i, j, n);
            if (j > 0) t.push_back({r, node(i, j - 1, n), -inv_h2});
            if (i > 0) t.push_back({r, node(i - 1, j, n), -inv_h2});
            t.push_back({r, r, 4.0 * inv_h2});
            if (i + 1 < n) t.push_back({r, node(i + 1, j, n), -inv_h2});
            if (j + 1 < n) t.push_back({r, node(i, j + 1, n), -inv_h2});
        }
    return csr_from_triplets(n * n, n * n, t);
}

ProblemInstance gen_elliptic(const EllipticCoeffs& c, int grid_n, std::uint64_t rhs_seed) {
    check_grid(grid_n);
    if (!(4.0 * c.a11 * c.a22 > c.a12 * c.a12))
        throw std::invalid_argument("gen_elliptic: coefficients are not elliptic (4 a11 a22 <= a12^2)");
    const int n = grid_n;
    const double h = 1.0 / (n + 1);
    const double h2 = h * h;

    const double center = -2.0 * c.a11 / h2 - 2.0 * c.a22 / h2 + c.a0;
    const double east = c.a11 / h2 + c.a1 / (2.0 * h);
    const double west = c.a11 / h2 - c.a1 / (2.0 * h);
    const double north = c.a22 / h2 + c.a2 / (2.0 * h);
    const double south = c.a22 / h2 - c.a2 / (2.0 * h);
    const double corner = c.a12 / (4.0 * h2); // +(NE, SW), -(NW, SE)

    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(9) * n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const index_t r = node(i, j, n);
            auto add = [&](int di, int dj, double v) {
                const int ii = i + di, jj = j + dj;
                if (ii < 0 || jj < 0 || ii >= n || jj >= n) return;
                t.push_back({r, node(ii, jj, n), v});
            };
            add(0, 0, center);
            add(1, 0, east);
            add(-1, 0, west);
            add(0, 1, north);
            add(0, -1, south);
            if (c.a12 != 0.0) {
                add(1, 1, corner);
                add(-1, -1, corner);
                add(-1, 1, -corner);
                add(1, -1, -corner);
            }
        }

    ProblemInstance p;
    p.family = Family::Elliptic;
    p.features = {c.a11, c.a12, c.a22, c.a1, c.a2, c.a0};
    p.a = csr_from_triplets(n * n, n * n, t);
    p.b = sample_field(random_source(rhs_seed), n);
    p.grid_n = n;
    p.seed = rhs_seed;
    return p;
}

ProblemInstance gen_darcy(const Cheb2D& k_field, int grid_n, std::uint64_t rhs_seed) {
    check_grid(grid_n);
    if (k_field.deg_x != 3 || k_field.deg_y != 3 || k_field.coeffs.size() != 16)
        throw std::invalid_argument("gen_darcy: permeability must be a cubic-by-cubic Chebyshev field");
    const int n = grid_n;
    const int m = n + 2; // nodes including the boundary ring
    const double h = 1.0 / (n + 1);
    const double inv_h2 = 1.0 / (h * h);

    std::vector<double> k(static_cast<std::size_t>(m) * m);
    double kmax = 0.0;
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
            const double v = k_field(2.0 * i * h - 1.0, 2.0 * j * h - 1.0);
            k[j * m + i] = v;
            kmax = std::max(kmax, std::abs(v));
        }
    if (kmax == 0.0) throw std::invalid_argument("gen_darcy: permeability field is identically zero");
    const double floor_k = 0.1 * kmax;
    for (double& v : k) v = std::max(v, floor_k);

    auto knode = [&](int i, int j) { return k[(j + 1) * m + (i + 1)]; }; // interior-indexed
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(5) * n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const index_t r = node(i, j, n);
            const double kc = knode(i, j);
            const double ke = 0.5 * (kc + knode(i + 1, j));
            const double kw = 0.5 * (kc + knode(i - 1, j));
            const double kn = 0.5 * (kc + knode(i, j + 1));
            const double ks = 0.5 * (kc + knode(i, j - 1));
            if (j > 0) t.push_back({r, node(i, j - 1, n), -ks * inv_h2});
            if (i > 0) t.push_back({r, node(i - 1, j, n), -kw * inv_h2});
            t.push_back({r, r, (ke + kw + kn + ks) * inv_h2});
            if (i + 1 < n) t.push_back({r, node(i + 1, j, n), -ke * inv_h2});
            if (j + 1 < n) t.push_back({r, node(i, j + 1, n), -kn * inv_h2});
        }

    ProblemInstance p;
    p.family = Family::Darcy;
    p.features = k_field.coeffs;
    p.a = csr_from_triplets(n * n, n * n, t);
    p.b = sample_field(random_source(rhs_seed), n);
    p.grid_n = n;
    p.seed = rhs_seed;
    return p;
}

ProblemInstance gen_poisson(std::span<const double> features, int grid_n) {
    check_grid(grid_n);
    if (features.size() != 8) throw std::invalid_argument("gen_poisson: expected 8 features");
    const Cheb2D g{1, 1, {features.begin(), features.begin() + 4}};
    const Cheb2D f{1, 1, {features.begin() + 4, features.end()}};
    const int n = grid_n;
    const double h = 1.0 / (n + 1);
    const double inv_h2 = 1.0 / (h * h);
    auto gb = [&](int i, int j) { return g(2.0 * i * h - 1.0, 2.0 * j * h - 1.0); }; // node coords incl. boundary

    ProblemInstance p;
    p.family = Family::Poisson;
    p.features.assign(features.begin(), features.end());
    p.a = laplacian_5pt(n);
    p.b = sample_field(f, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            double bc = 0.0;
            if (i == 0) bc += gb(0, j + 1);
            if (i == n - 1) bc += gb(n + 1, j + 1);
            if (j == 0) bc += gb(i + 1, 0);
            if (j == n - 1) bc += gb(i + 1, n + 1);
            p.b[node(i, j, n)] += bc * inv_h2;
        }
    p.grid_n = n;
    return p;
}

ProblemInstance gen_thermal(std::span<const double> features, int grid_n) {
    check_grid(grid_n);
    if (features.size() != 6) throw std::invalid_argument("gen_thermal: expected 6 features");
    const double left = features[4];
    const double right = features[5];
    if (!(left >= -100.0 && left <= 0.0))
        throw std::invalid_argument("gen_thermal: left boundary temperature must lie in [-100, 0]");
    if (!(right >= 0.0 && right <= 100.0))
        throw std::invalid_argument("gen_thermal: right boundary temperature must lie in [0, 100]");
    const std::span<const double> profile = features.first(4);
    const int n = grid_n;
    const double h = 1.0 / (n + 1);
    const double inv_h2 = 1.0 / (h * h);

    ProblemInstance p;
    p.family = Family::Thermal;
    p.features.assign(features.begin(), features.end());
    p.a = laplacian_5pt(n);
    p.b.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            double bc = 0.0;
            if (i == 0) bc += left;
            if (i == n - 1) bc += right;
            const double tb = cheb1d_eval(profile, 2.0 * (i + 1) * h - 1.0);
            if (j == 0) bc += tb;
            if (j == n - 1) bc += tb;
            p.b[node(i, j, n)] = bc * inv_h2;
        }
    p.grid_n = n;
    return p;
}

EllipticCoeffs sample_elliptic_coeffs(std::mt19937_64& rng, bool symmetric) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> small(-0.01, 0.01);
    for (;;) {
        EllipticCoeffs c;
        c.a11 = unit(rng);
        c.a22 = unit(rng);
        c.a1 = unit(rng);
        c.a2 = unit(rng);
        c.a0 = unit(rng);
        c.a12 = small(rng);
        if (symmetric) c.a1 = c.a2 = 0.0;
        if (c.a11 < 0.0) {
            c.a11 = -c.a11;
            c.a12 = -c.a12;
            c.a22 = -c.a22;
            c.a1 = -c.a1;
            c.a2 = -c.a2;
            c.a0 = -c.a0;
        }
        if (4.0 * c.a11 * c.a22 > c.a12 * c.a12) return c;
    }
}

ProblemInstance sample_instance(Family family, int grid_n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const std::uint64_t rhs_seed = derive_seed(seed, 1);
    ProblemInstance p;
    switch (family) {
    case Family::Elliptic: p = gen_elliptic(sample_elliptic_coeffs(rng), grid_n, rhs_seed); break;
    case Family::Darcy: {
        Cheb2D k{3, 3, std::vector<double>(16)};
        for (double& c : k.coeffs) c = unit(rng);
        p = gen_darcy(k, grid_n, rhs_seed);
        break;
    }
    case Family::Poisson: {
        std::vector<double> f(8);
        for (double& c : f) c = unit(rng);
        p = gen_poisson(f, grid_n);
        break;
    }
    case Family::Thermal: {
        std::uniform_real_distribution<double> profile(-50.0, 50.0);
        std::uniform_real_distribution<double> left(-100.0, 0.0);
        std::uniform_real_distribution<double> right(0.0, 100.0);
        std::vector<double> f(6);
        for (int k = 0; k < 4; ++k) f[k] = profile(rng);
        f[4] = left(rng);
        f[5] = right(rng);
        p = gen_thermal(f, grid_n);
        break;
    }
    }
    p.seed = seed;
    return p;
}

std::vector<ProblemInstance> generate_problems(Family family, int grid_n, std::size_t count,
                                               std::uint64_t master_seed, bool symmetric_elliptic) {
    std::vector<ProblemInstance> out(count);
    const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t k = 0; k < n; ++k) {
        const std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(k));
        if (family == Family::Elliptic && symmetric_elliptic) {
            std::mt19937_64 rng(seed);
            ProblemInstance p = gen_elliptic(sample_elliptic_coeffs(rng, true), grid_n, derive_seed(seed, 1));
            p.seed = seed;
            out[k] = std::move(p);
        } else {
            out[k] = sample_instance(family, grid_n, seed);
        }
    }
    return out;
}

} // namespace symmap
