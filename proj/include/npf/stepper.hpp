#pragma once

#include <functional>

#include "npf/grid.hpp"
#include "npf/nonlocal.hpp"
#include "npf/potential.hpp"
#include "npf/rootfind.hpp"

namespace npf {

/// Pair (theta, chi) at a time instant.
struct State {
    Field theta;
    Field chi;
    double t = 0.0;
};

/// The assembled model: heat equation coupled with the nonlocal ODE for chi.
/// Sources exist for manufactured-solution validation and default to none.
struct ModelSpec {
    const DomainSpec* domain = nullptr;
    const NonlocalOperator* op = nullptr;
    Potential potential;
    LambdaField lambda;
    std::function<Field(double)> source_theta;
    std::function<Field(double)> source_chi;

    void validate() const {
        if (!domain || !op) throw std::invalid_argument("ModelSpec: domain and operator required");
        if (!(op->domain() == *domain) || !(*lambda.lambda.domain == *domain))
            throw std::invalid_argument("ModelSpec: components live on different domains");
    }
};

struct SchemeConfig {
    double dt = 1e-2;
    double newton_tol = 1e-12;
    int newton_max_iter = 200;
    enum class LinearSolver { Auto, Tridiagonal, ConjugateResidual };
    LinearSolver linear_solver = LinearSolver::Auto;
    double linear_rtol = 1e-10;
    bool cfl_guard = true;
};

/// Unique root of  m r + f0(r) - lam r = b  (m - lam > 0, f0 nondecreasing).
///
/// For the singular kind with an invertible f0 the equation is solved in the
/// variable y = f0(r), where it reads  (m - lam) f0^{-1}(y) + y = b  and stays
/// well conditioned however close the root sits to the domain endpoints; the
/// returned r is confined to the bracket (-1 + 1e-15, 1 - 1e-15), which also
/// saturates targets beyond double resolution.
inline double scalar_solve(const Potential& pot, double m, double lam, double b,
                           double tol = 1e-12, int max_iter = 200, double hint = 0.0) {
    const double a = m - lam;
    if (!(a > 0.0))
        throw std::invalid_argument("scalar_solve: need m - lam > 0 for monotonicity");
    const double ftol = tol * std::max(1.0, std::abs(b));

    if (pot.kind == PotentialKind::Singular) {
        const double edge = 1e-15;
        if (pot.has_inverse()) {
            auto phi = [&](double y) { return a * pot.f0_inverse(y) + y - b; };
            auto dphi = [&](double y) { return a * pot.f0_inverse_deriv(y) + 1.0; };
            const double y0 = pot.f0(std::clamp(hint, -1.0 + edge, 1.0 - edge));
            const double y = detail::newton_bisect(phi, dphi, b - a, b + a, y0, ftol,
                                                   max_iter, "scalar_solve");
            return std::clamp(pot.f0_inverse(y), -1.0 + edge, 1.0 - edge);
        }
        const double lo = pot.r_minus + edge * std::max(1.0, std::abs(pot.r_minus));
        const double hi = pot.r_plus - edge * std::max(1.0, std::abs(pot.r_plus));
        auto psi = [&](double r) { return a * r + pot.f0(r) - b; };
        auto dpsi = [&](double r) { return a + pot.df0(r); };
        return detail::newton_bisect(psi, dpsi, lo, hi, std::clamp(hint, lo, hi), ftol,
                                     max_iter, "scalar_solve");
    }

    auto psi = [&](double r) { return a * r + pot.f0(r) - b; };
    auto dpsi = [&](double r) { return a + pot.df0(r); };
    // expand a bracket around the linear-part guess
    double lo = std::min(hint, b / a), hi = std::max(hint, b / a);
    double step = std::max(1.0, 0.25 * (hi - lo));
    for (int k = 0; k < 200 && psi(lo) > 0.0; ++k) { lo -= step; step *= 2.0; }
    step = std::max(1.0, 0.25 * (hi - lo));
    for (int k = 0; k < 200 && psi(hi) < 0.0; ++k) { hi += step; step *= 2.0; }
    if (psi(lo) > 0.0 || psi(hi) < 0.0)
        throw SolverError("scalar_solve: failed to bracket the root");
    return detail::newton_bisect(psi, dpsi, lo, hi, std::clamp(hint, lo, hi), ftol,
                                 max_iter, "scalar_solve");
}

namespace detail {

/// Thomas algorithm for a tridiagonal system; no pivoting, assumes the
/// diagonally dominant systems produced by the implicit heat step.
inline std::vector<double> solve_tridiagonal(std::span<const double> sub,
                                             std::span<const double> diag,
                                             std::span<const double> sup,
                                             std::span<const double> rhs) {
    const std::size_t n = diag.size();
    std::vector<double> c(n), x(n);
    double beta = diag[0];
    x[0] = rhs[0] / beta;
    for (std::size_t i = 1; i < n; ++i) {
        c[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i];
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i > 0; --i) x[i - 1] -= c[i] * x[i];
    return x;
}

/// Conjugate residual iteration for the symmetric positive definite operator
/// u -> u/dt + A u, matrix-free.
inline Field solve_heat_cr(const Field& rhs, double dt, double rtol, const char* what) {
    auto apply = [&](const Field& u) {
        Field out = apply_A(u);
        const double idt = 1.0 / dt;
        for (int i = 0; i < out.size(); ++i) out.values[i] += idt * u.values[i];
        return out;
    };
    auto dot = [](const Field& a, const Field& b) {
        double s = 0.0;
        for (int i = 0; i < a.size(); ++i) s += a.values[i] * b.values[i];
        return s;
    };
    Field x(*rhs.domain);
    Field r = rhs;
    const double target = rtol * std::sqrt(dot(rhs, rhs));
    if (std::sqrt(dot(r, r)) <= target) return x;
    Field p = r;
    Field Ar = apply(r);
    Field Ap = Ar;
    double rAr = dot(r, Ar);
    const int max_iter = 20 * rhs.size() + 100;
    for (int it = 0; it < max_iter; ++it) {
        const double ApAp = dot(Ap, Ap);
        if (!(ApAp > 0.0)) break;
        const double alpha = rAr / ApAp;
        for (int i = 0; i < x.size(); ++i) x.values[i] += alpha * p.values[i];
        for (int i = 0; i < r.size(); ++i) r.values[i] -= alpha * Ap.values[i];
        if (std::sqrt(dot(r, r)) <= target) return x;
        Ar = apply(r);
        const double rAr_new = dot(r, Ar);
        const double beta = rAr_new / rAr;
        rAr = rAr_new;
        for (int i = 0; i < p.size(); ++i) p.values[i] = r.values[i] + beta * p.values[i];
        for (int i = 0; i < Ap.size(); ++i) Ap.values[i] = Ar.values[i] + beta * Ap.values[i];
    }
    const double res = std::sqrt(dot(r, r));
    if (res <= 10.0 * target + 1e-300) return x;
    throw SolverError(std::string(what) + ": conjugate residual stalled, |r| = " +
                      std::to_string(res));
}

/// Implicit heat solve (I/dt + A) theta = rhs.
inline Field solve_heat(const Field& rhs, double dt, const SchemeConfig& cfg) {
    const DomainSpec& d = *rhs.domain;
    const bool tridiag =
        cfg.linear_solver == SchemeConfig::LinearSolver::Tridiagonal ||
        (cfg.linear_solver == SchemeConfig::LinearSolver::Auto && d.dimension == 1);
    if (tridiag) {
        if (d.dimension != 1)
            throw std::invalid_argument("solve_heat: tridiagonal solver is 1D only");
        const int n = d.cell_counts[0];
        const double ih2 = 1.0 / (d.spacing(0) * d.spacing(0));
        std::vector<double> sub(n, -ih2), diag(n, 1.0 / dt + 2.0 * ih2), sup(n, -ih2);
        diag.front() = diag.back() = 1.0 / dt + 3.0 * ih2;
        sub[0] = 0.0;
        sup[n - 1] = 0.0;
        auto x = solve_tridiagonal(sub, diag, sup, rhs.values);
        Field out(d);
        out.values = std::move(x);
        return out;
    }
    return solve_heat_cr(rhs, dt, cfg.linear_rtol, "solve_heat");
}

} // namespace detail

/// One step of the decoupled scheme: the order parameter advances first with
/// the nonlocal term frozen at the old state and the monotone nonlinearity
/// implicit (cellwise scalar solves, which keeps singular trajectories
/// strictly separated from the endpoints); the temperature then takes an
/// implicit Dirichlet heat step driven by the fresh chi increment.
inline State step(const State& s, const ModelSpec& model, const SchemeConfig& cfg) {
    model.validate();
    const DomainSpec& d = *model.domain;
    const double dt = cfg.dt;
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
    if (cfg.cfl_guard && !(dt * model.lambda.lambda_sup < 1.0))
        throw SolverError("step: dt * sup(lambda) must stay below 1 for solvability");

    const double t_new = s.t + dt;
    Field g_chi = model.source_chi ? model.source_chi(t_new) : Field();
    Field g_theta = model.source_theta ? model.source_theta(t_new) : Field();

    const Field Jchi = model.op->apply_J(s.chi);
    Field chi_new(d);
    const double idt = 1.0 / dt;
    for (int i = 0; i < chi_new.size(); ++i) {
        double b = s.chi.values[i] * idt + s.theta.values[i] - Jchi.values[i];
        if (g_chi.domain) b += g_chi.values[i];
        try {
            chi_new.values[i] =
                scalar_solve(model.potential, idt, model.lambda.lambda.values[i], b,
                             cfg.newton_tol, cfg.newton_max_iter, s.chi.values[i]);
        } catch (const SolverError& e) {
            throw SolverError("step: stage 1 failed at cell " + std::to_string(i) + ": " +
                              e.what());
        }
    }
    if (model.potential.kind == PotentialKind::Singular) {
        for (int i = 0; i < chi_new.size(); ++i)
            if (!(chi_new.values[i] > model.potential.r_minus &&
                  chi_new.values[i] < model.potential.r_plus))
                throw SolverError("step: separation lost at cell " + std::to_string(i));
    }

    Field rhs(d);
    for (int i = 0; i < rhs.size(); ++i)
        rhs.values[i] = s.theta.values[i] * idt - (chi_new.values[i] - s.chi.values[i]) * idt;
    if (g_theta.domain)
        for (int i = 0; i < rhs.size(); ++i) rhs.values[i] += g_theta.values[i];
    Field theta_new = detail::solve_heat(rhs, dt, cfg);

    return State{std::move(theta_new), std::move(chi_new), t_new};
}

/// March from init.t to T, invoking the callback after every accepted step.
/// Deterministic: identical inputs produce bit-identical trajectories.
template <class Callback>
State run(State init, const ModelSpec& model, const SchemeConfig& cfg, double T,
          Callback&& callback) {
    if (T < init.t - 1e-12) throw std::invalid_argument("run: T must be >= init.t");
    const double span = T - init.t;
    long nsteps = std::llround(span / cfg.dt);
    if (std::abs(nsteps * cfg.dt - span) > 1e-9 * std::max(1.0, std::abs(T)))
        nsteps = static_cast<long>(std::ceil(span / cfg.dt - 1e-12));
    State s = std::move(init);
    for (long k = 0; k < nsteps; ++k) {
        s = step(s, model, cfg);
        callback(s);
    }
    return s;
}

inline State run(State init, const ModelSpec& model, const SchemeConfig& cfg, double T) {
    return run(std::move(init), model, cfg, T, [](const State&) {});
}

/// Full trajectory, init included, with an optional snapshot stride (the
/// final state is always retained).
inline std::vector<State> run_collect(State init, const ModelSpec& model,
                                      const SchemeConfig& cfg, double T, int stride = 1) {
    if (stride < 1) throw std::invalid_argument("run_collect: stride must be >= 1");
    std::vector<State> traj;
    traj.push_back(init);
    long k = 0;
    State last = run(std::move(init), model, cfg, T, [&](const State& s) {
        ++k;
        if (k % stride == 0) traj.push_back(s);
    });
    if (traj.back().t != last.t) traj.push_back(last);
    return traj;
}

} // namespace npf
