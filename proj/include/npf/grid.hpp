#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <span>

#include "npf/common.hpp"

namespace npf {

/// Uniform cell-centered grid on a box of unit measure (1D or 2D).
///
/// The product of the side lengths must equal 1, so the mean of a field
/// equals its integral and L^p norms are directly comparable across p.
struct DomainSpec {
    int dimension = 1;
    std::array<double, 2> side_lengths{1.0, 1.0};
    std::array<int, 2> cell_counts{0, 0};

    DomainSpec(int dim, std::array<int, 2> counts, std::array<double, 2> lengths = {1.0, 1.0})
        : dimension(dim), side_lengths(lengths), cell_counts(counts) {
        if (dim != 1 && dim != 2)
            throw std::invalid_argument("DomainSpec: dimension must be 1 or 2");
        double measure = 1.0;
        for (int a = 0; a < dim; ++a) {
            if (cell_counts[a] < 4)
                throw std::invalid_argument("DomainSpec: need at least 4 cells per direction");
            if (!(side_lengths[a] > 0.0))
                throw std::invalid_argument("DomainSpec: side lengths must be positive");
            measure *= side_lengths[a];
        }
        if (std::abs(measure - 1.0) > 1e-12)
            throw std::invalid_argument("DomainSpec: box measure must equal 1");
        if (dim == 1) { cell_counts[1] = 1; side_lengths[1] = 1.0; }
    }

    static DomainSpec line(int n) { return DomainSpec(1, {n, 1}, {1.0, 1.0}); }
    static DomainSpec box(int n1, int n2, double l1 = 1.0, double l2 = 1.0) {
        return DomainSpec(2, {n1, n2}, {l1, l2});
    }

    int cells() const { return cell_counts[0] * cell_counts[1]; }
    double spacing(int axis) const { return side_lengths[axis] / cell_counts[axis]; }
    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < dimension; ++a) v *= spacing(a);
        return v;
    }
    /// Coordinate of the cell center along one axis.
    double center(int axis, int i) const { return (i + 0.5) * spacing(axis); }

    int index(int i1, int i2 = 0) const { return i1 * cell_counts[1] + i2; }

    friend bool operator==(const DomainSpec& a, const DomainSpec& b) {
        return a.dimension == b.dimension && a.side_lengths == b.side_lengths &&
               a.cell_counts == b.cell_counts;
    }
};

/// Scalar field sampled at cell centers, row-major over (i1, i2).
struct Field {
    const DomainSpec* domain = nullptr;
    std::vector<double> values;

    Field() = default;
    explicit Field(const DomainSpec& d, double fill = 0.0)
        : domain(&d), values(static_cast<std::size_t>(d.cells()), fill) {}

    /// Sample a function of the cell-center coordinates (x) or (x, y).
    template <class Fn>
    static Field sample(const DomainSpec& d, Fn f) {
        Field out(d);
        if (d.dimension == 1) {
            if constexpr (std::is_invocable_v<Fn, double>) {
                for (int i = 0; i < d.cell_counts[0]; ++i) out.values[i] = f(d.center(0, i));
            } else {
                throw std::invalid_argument("Field::sample: 1D domain needs f(x)");
            }
        } else {
            if constexpr (std::is_invocable_v<Fn, double, double>) {
                for (int i = 0; i < d.cell_counts[0]; ++i)
                    for (int j = 0; j < d.cell_counts[1]; ++j)
                        out.values[d.index(i, j)] = f(d.center(0, i), d.center(1, j));
            } else {
                throw std::invalid_argument("Field::sample: 2D domain needs f(x, y)");
            }
        }
        return out;
    }

    double& operator[](int i) { return values[i]; }
    double operator[](int i) const { return values[i]; }
    int size() const { return static_cast<int>(values.size()); }

    bool finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline void require_same_domain(const Field& f, const Field& g, const char* op) {
    if (!f.domain || !g.domain || !(*f.domain == *g.domain))
        throw std::invalid_argument(std::string(op) + ": fields live on different domains");
}

/// Midpoint-rule integral over the box; exact for cellwise-constant fields.
inline double integrate(const Field& f) {
    return pairwise_sum(f.values) * f.domain->cell_volume();
}

/// L^2 scalar product.
inline double inner(const Field& f, const Field& g) {
    require_same_domain(f, g, "inner");
    std::vector<double> prod(f.values.size());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = f.values[i] * g.values[i];
    return pairwise_sum(prod) * f.domain->cell_volume();
}

/// L^p norm, p in [1, inf]. p = inf gives the max norm.
inline double lp_norm(const Field& f, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : f.values) m = std::max(m, std::abs(v));
        return m;
    }
    if (!(p >= 1.0))
        throw std::invalid_argument("lp_norm: p must be >= 1 or infinity");
    std::vector<double> pw(f.values.size());
    if (p == 2.0) {
        for (std::size_t i = 0; i < pw.size(); ++i) pw[i] = f.values[i] * f.values[i];
    } else {
        for (std::size_t i = 0; i < pw.size(); ++i) pw[i] = std::pow(std::abs(f.values[i]), p);
    }
    double s = pairwise_sum(pw) * f.domain->cell_volume();
    return p == 2.0 ? std::sqrt(s) : std::pow(s, 1.0 / p);
}

inline double l2_norm(const Field& f) { return lp_norm(f, 2.0); }

/// Negative Laplacian with homogeneous Dirichlet boundary conditions,
/// second-order central differences. The boundary rows use the ghost value
/// -(first interior cell), which places the zero exactly on the box face and
/// keeps the matrix symmetric.
inline Field apply_A(const Field& f) {
    const DomainSpec& d = *f.domain;
    Field out(d);
    const int n1 = d.cell_counts[0], n2 = d.cell_counts[1];
    const double ih1 = 1.0 / (d.spacing(0) * d.spacing(0));
    if (d.dimension == 1) {
        for (int i = 0; i < n1; ++i) {
            const double left = (i > 0) ? f.values[i - 1] : -f.values[0];
            const double right = (i < n1 - 1) ? f.values[i + 1] : -f.values[n1 - 1];
            out.values[i] = (2.0 * f.values[i] - left - right) * ih1;
        }
        return out;
    }
    const double ih2 = 1.0 / (d.spacing(1) * d.spacing(1));
    for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
            const int k = d.index(i, j);
            const double c = f.values[k];
            const double xl = (i > 0) ? f.values[d.index(i - 1, j)] : -c;
            const double xr = (i < n1 - 1) ? f.values[d.index(i + 1, j)] : -c;
            const double yl = (j > 0) ? f.values[d.index(i, j - 1)] : -c;
            const double yr = (j < n2 - 1) ? f.values[d.index(i, j + 1)] : -c;
            out.values[k] = (2.0 * c - xl - xr) * ih1 + (2.0 * c - yl - yr) * ih2;
        }
    }
    return out;
}

/// Discrete ||grad f||^2 as a sum of face-difference squares. Algebraically
/// identical to inner(apply_A(f), f); computed by a separate summation route.
inline double h1_seminorm_sq(const Field& f) {
    const DomainSpec& d = *f.domain;
    const int n1 = d.cell_counts[0], n2 = d.cell_counts[1];
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(2 * d.cells()));
    // x-direction: per line, interior jumps plus the Dirichlet end weights.
    const double wx = d.cell_volume() / (d.spacing(0) * d.spacing(0));
    for (int j = 0; j < n2; ++j) {
        for (int i = 0; i + 1 < n1; ++i) {
            const double df = f.values[d.index(i + 1, j)] - f.values[d.index(i, j)];
            terms.push_back(wx * df * df);
        }
        const double a = f.values[d.index(0, j)], b = f.values[d.index(n1 - 1, j)];
        terms.push_back(wx * 2.0 * a * a);
        terms.push_back(wx * 2.0 * b * b);
    }
    if (d.dimension == 2) {
        const double wy = d.cell_volume() / (d.spacing(1) * d.spacing(1));
        for (int i = 0; i < n1; ++i) {
            for (int j = 0; j + 1 < n2; ++j) {
                const double df = f.values[d.index(i, j + 1)] - f.values[d.index(i, j)];
                terms.push_back(wy * df * df);
            }
            const double a = f.values[d.index(i, 0)], b = f.values[d.index(i, n2 - 1)];
            terms.push_back(wy * 2.0 * a * a);
            terms.push_back(wy * 2.0 * b * b);
        }
    }
    return pairwise_sum(terms);
}

/// Smallest eigenvalue of the discrete Dirichlet operator on this grid,
/// (4/h^2) sin^2(pi h / 2L) summed over directions.
inline double dirichlet_lowest_eigenvalue(const DomainSpec& d) {
    double mu = 0.0;
    for (int a = 0; a < d.dimension; ++a) {
        const double h = d.spacing(a);
        const double s = std::sin(0.5 * M_PI * h / d.side_lengths[a]);
        mu += 4.0 / (h * h) * s * s;
    }
    return mu;
}

} // namespace npf
