#pragma once

#include <Eigen/Dense>

#include "npf/nonlocal.hpp"

namespace npf {

/// Leading eigenpairs of the (compact, self-adjoint) nonlocal coupling,
/// orthonormal in the quadrature-weighted L^2 inner product, ordered by |mu|
/// descending. `projector_rank` is the rank retained by the spectral cutoff,
/// stamped by projector_bound.
struct SpectralDecomp {
    std::vector<double> eigenvalues;
    std::vector<Field> eigenvectors;
    int projector_rank = 0;

    int count() const { return static_cast<int>(eigenvalues.size()); }
};

/// Dense operator matrix: entry (i,j) = -K_s(x_i - x_j) * cell volume, so that
/// (M u) equals apply_J_direct(u) on grid vectors. Intended for small grids.
inline Eigen::MatrixXd assemble_matrix(const NonlocalOperator& op) {
    const DomainSpec& d = op.domain();
    const int n1 = d.cell_counts[0], n2 = d.cell_counts[1];
    const int n = d.cells();
    const double w = -d.cell_volume();
    Eigen::MatrixXd m(n, n);
    for (int i1 = 0; i1 < n1; ++i1)
        for (int i2 = 0; i2 < n2; ++i2)
            for (int j1 = 0; j1 < n1; ++j1)
                for (int j2 = 0; j2 < n2; ++j2)
                    m(d.index(i1, i2), d.index(j1, j2)) =
                        w * op.kernel_sample(i1 - j1, i2 - j2);
    return m;
}

/// Dense symmetric eigendecomposition of the operator matrix; keeps the m
/// pairs of largest magnitude. Eigenvectors are rescaled so that
/// inner(v, v) = 1 in the weighted product.
inline SpectralDecomp eigendecompose(const NonlocalOperator& op, int m) {
    const DomainSpec& d = op.domain();
    const int n = d.cells();
    if (m < 0 || m > n)
        throw std::invalid_argument("eigendecompose: m must lie in [0, grid size]");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(assemble_matrix(op));
    if (solver.info() != Eigen::Success)
        throw SolverError("eigendecompose: dense symmetric solve failed");

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    const auto& vals = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(vals[a]) > std::abs(vals[b]);
    });

    SpectralDecomp dec;
    dec.eigenvalues.reserve(m);
    dec.eigenvectors.reserve(m);
    const double scale = 1.0 / std::sqrt(d.cell_volume());
    for (int k = 0; k < m; ++k) {
        const int idx = order[k];
        dec.eigenvalues.push_back(vals[idx]);
        Field v(d);
        for (int i = 0; i < n; ++i) v.values[i] = solver.eigenvectors()(i, idx) * scale;
        dec.eigenvectors.push_back(std::move(v));
    }
    return dec;
}

/// Orthogonal projection onto the span of the first N eigenvectors.
inline Field project(const SpectralDecomp& dec, const Field& u, int rank) {
    if (rank < 0 || rank > dec.count())
        throw std::invalid_argument("project: rank exceeds decomposition size");
    Field out(*u.domain);
    for (int k = 0; k < rank; ++k) {
        const double c = inner(u, dec.eigenvectors[k]);
        for (int i = 0; i < out.size(); ++i) out.values[i] += c * dec.eigenvectors[k].values[i];
    }
    return out;
}

/// Spectral-cutoff splitting of the operator norm: with N the number of
/// eigenvalues with mu^2 > eta and c the largest mu^2, verify on random
/// fields that  ||J v||^2 <= eta ||v||^2 + c ||P v||^2 + 1e-9.
struct ProjectorReport {
    int rank = 0;
    double c = 0.0;
    double eta = 0.0;
    double max_excess = 0.0; // worst ||Jv||^2 - eta||v||^2 - c||Pv||^2
    int samples = 0;
    bool pass = false;
};

inline ProjectorReport projector_bound(const NonlocalOperator& op, SpectralDecomp& dec,
                                       double eta, int samples, std::uint64_t seed = 7) {
    if (!(eta > 0.0)) throw std::invalid_argument("projector_bound: eta must be > 0");
    ProjectorReport rep;
    rep.eta = eta;
    rep.samples = samples;
    int rank = 0;
    double cmax = 0.0;
    for (double mu : dec.eigenvalues) {
        if (mu * mu > eta) ++rank;
        cmax = std::max(cmax, mu * mu);
    }
    rep.rank = rank;
    rep.c = rank > 0 ? cmax : 0.0;
    dec.projector_rank = rank;

    std::mt19937_64 rng(seed);
    rep.max_excess = -kInf;
    for (int s = 0; s < samples; ++s) {
        Field v(op.domain());
        for (double& x : v.values) x = uniform(rng, -1.0, 1.0);
        const Field Jv = op.apply_J(v);
        const Field Pv = project(dec, v, rank);
        const double lhs = inner(Jv, Jv);
        const double rhs = eta * inner(v, v) + rep.c * inner(Pv, Pv);
        rep.max_excess = std::max(rep.max_excess, lhs - rhs);
    }
    if (samples == 0) rep.max_excess = 0.0;
    rep.pass = rep.max_excess <= 1e-9;
    return rep;
}

} // namespace npf
