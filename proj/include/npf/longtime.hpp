#pragma once

#include "npf/diagnostics.hpp"
#include "npf/spectral.hpp"
#include "npf/stepper.hpp"

namespace npf {

// ---------------------------------------------------------------------------
// Stationary states
// ---------------------------------------------------------------------------

struct StationaryResult {
    Field chi_inf;
    double residual = kInf; // sup |J[chi] + f0(chi) - lambda chi|
    int iterations = 0;
    bool converged = false;
};

inline double stationary_residual(const ModelSpec& model, const Field& chi, bool direct = false) {
    const Field Jchi = direct ? model.op->apply_J_direct(chi) : model.op->apply_J(chi);
    double r = 0.0;
    for (int i = 0; i < chi.size(); ++i)
        r = std::max(r, std::abs(Jchi.values[i] + model.potential.f0(chi.values[i]) -
                                 model.lambda.lambda.values[i] * chi.values[i]));
    return r;
}

/// Damped fixed-point iteration for  J[chi] + f0(chi) - lambda(x) chi = 0:
/// each sweep is a frozen-temperature implicit step of size 1/rho, so the
/// same solvability condition (rho > lambda_sup) applies, and dissipative
/// models contract. Nonconvergence is reported, not thrown.
inline StationaryResult steady_state(const ModelSpec& model, const Field& init, double tol,
                                     double rho = 100.0, int max_iter = 100000,
                                     double newton_tol = 1e-13) {
    model.validate();
    if (!(rho > model.lambda.lambda_sup))
        throw std::invalid_argument("steady_state: need rho > sup lambda");
    StationaryResult res;
    res.chi_inf = init;
    for (int it = 0; it < max_iter; ++it) {
        res.residual = stationary_residual(model, res.chi_inf);
        res.iterations = it;
        if (res.residual <= tol) {
            res.converged = true;
            return res;
        }
        const Field Jchi = model.op->apply_J(res.chi_inf);
        Field next(*model.domain);
        for (int i = 0; i < next.size(); ++i) {
            const double b = rho * res.chi_inf.values[i] - Jchi.values[i];
            next.values[i] = scalar_solve(model.potential, rho, model.lambda.lambda.values[i],
                                          b, newton_tol, 200, res.chi_inf.values[i]);
        }
        res.chi_inf = std::move(next);
    }
    res.residual = stationary_residual(model, res.chi_inf);
    return res;
}

struct OmegaLimitReport {
    double theta_norm = 0.0;
    double chi_distance = 0.0;
    bool pass = false;
};

/// Whether the trajectory end sits on the expected rest point (0, chi_inf).
inline OmegaLimitReport omega_limit_check(const std::vector<State>& traj, const Field& chi_inf,
                                          double tol_theta, double tol_chi) {
    if (traj.empty()) throw std::invalid_argument("omega_limit_check: empty trajectory");
    OmegaLimitReport rep;
    const State& last = traj.back();
    rep.theta_norm = l2_norm(last.theta);
    Field diff = last.chi;
    for (int i = 0; i < diff.size(); ++i) diff.values[i] -= chi_inf.values[i];
    rep.chi_distance = l2_norm(diff);
    rep.pass = rep.theta_norm <= tol_theta && rep.chi_distance <= tol_chi;
    return rep;
}

// ---------------------------------------------------------------------------
// Squeezing / contraction-up-to-projection
// ---------------------------------------------------------------------------

/// Distance of a state pair in the product metric: full H^1 norm for the
/// temperature difference, L^2 for the order-parameter difference.
inline double x_metric(const State& a, const State& b) {
    Field dth = a.theta, dch = a.chi;
    for (int i = 0; i < dth.size(); ++i) dth.values[i] -= b.theta.values[i];
    for (int i = 0; i < dch.size(); ++i) dch.values[i] -= b.chi.values[i];
    return std::sqrt(inner(dth, dth) + h1_seminorm_sq(dth) + inner(dch, dch));
}

struct SqueezeReport {
    double distance_initial = 0.0;
    double distance_final = 0.0;
    double d_T = 0.0;            // history pseudometric over [0, T*]
    double required_c = 0.0;     // smallest c with dist(T*) <= dist(0)/2 + c d_T
    int projector_rank = 0;
    double t_star = 0.0;
    bool holds_with_c(double c) const {
        return distance_final <= 0.5 * distance_initial + c * d_T + 1e-12;
    }
    std::vector<double> times;
    std::vector<double> theta_distance; // L^2 history of the theta difference
};

/// Evolve two initial states side by side; measure the product-metric
/// contraction against the history pseudometric
///   d_T^2 = integral over (0, T*) of ||theta_1-theta_2||^2 + ||P(chi_1-chi_2)||^2,
/// with P the rank-N spectral projector of the nonlocal coupling.
inline SqueezeReport squeezing_experiment(const ModelSpec& model, const SchemeConfig& cfg,
                                          const State& init1, const State& init2, int rank,
                                          double t_star, const SpectralDecomp& dec) {
    SqueezeReport rep;
    rep.projector_rank = rank;
    rep.t_star = t_star;
    rep.distance_initial = x_metric(init1, init2);

    std::vector<double> integrand;
    auto sample = [&](const State& a, const State& b) {
        Field dth = a.theta, dch = a.chi;
        for (int i = 0; i < dth.size(); ++i) dth.values[i] -= b.theta.values[i];
        for (int i = 0; i < dch.size(); ++i) dch.values[i] -= b.chi.values[i];
        const Field proj = project(dec, dch, rank);
        const double th2 = inner(dth, dth);
        integrand.push_back(th2 + inner(proj, proj));
        rep.times.push_back(a.t);
        rep.theta_distance.push_back(std::sqrt(th2));
    };

    State a = init1, b = init2;
    sample(a, b);
    const long nsteps = std::llround((t_star - init1.t) / cfg.dt);
    for (long k = 0; k < nsteps; ++k) {
        a = step(a, model, cfg);
        b = step(b, model, cfg);
        sample(a, b);
    }
    rep.distance_final = x_metric(a, b);

    double acc = 0.0; // trapezoid in time
    for (std::size_t k = 0; k + 1 < integrand.size(); ++k)
        acc += 0.5 * cfg.dt * (integrand[k] + integrand[k + 1]);
    rep.d_T = std::sqrt(acc);

    const double excess = rep.distance_final - 0.5 * rep.distance_initial;
    if (excess <= 0.0)
        rep.required_c = 0.0;
    else
        rep.required_c = rep.d_T > 0.0 ? excess / rep.d_T : kInf;
    return rep;
}

// ---------------------------------------------------------------------------
// Continuation to the singular limit
// ---------------------------------------------------------------------------

struct ContinuationReport {
    std::vector<double> deltas;
    std::vector<double> diff_to_reference;  // ||chi_d - chi_sing|| in L^2((0,T_norm) x box)
    std::vector<double> consecutive_diff;   // same norm between neighbouring deltas
    std::vector<double> sup_theta;          // per delta, over [t_tail, T]
    std::vector<double> sup_chi;
    double reference_sup_theta = 0.0;
    double reference_sup_chi = 0.0;
    std::vector<double> energy_initial;     // regularized energy of the shared data
    double reference_energy_initial = 0.0;
    bool diffs_monotone = true;
    bool energy_ordering_pass = true;
};

namespace detail {

inline double l2_space_time_diff(const std::vector<State>& a, const std::vector<State>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("continuation: trajectory size mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        Field d = a[k].chi;
        for (int i = 0; i < d.size(); ++i) d.values[i] -= b[k].chi.values[i];
        const double v = inner(d, d);
        double w = 1.0;
        if (k == 0 || k + 1 == a.size()) w = 0.5;
        const double dt = k + 1 < a.size() ? a[k + 1].t - a[k].t : a[k].t - a[k - 1].t;
        acc += w * dt * v;
    }
    return std::sqrt(acc);
}

} // namespace detail

/// Run the regularized family toward the singular model on a shared initial
/// state (the data are not approximated). Differences are measured in
/// L^2((0, T_norm) x box); sup norms over [t_tail, T] probe the family-wide
/// boundedness of both components.
inline ContinuationReport delta_continuation(const ModelSpec& singular_model, const State& init,
                                             const std::vector<double>& deltas,
                                             const SchemeConfig& cfg, double T,
                                             double T_norm = 1.0, double t_tail = 1.0) {
    if (singular_model.potential.kind != PotentialKind::Singular)
        throw std::invalid_argument("delta_continuation: model must be singular");
    for (std::size_t k = 0; k + 1 < deltas.size(); ++k)
        if (!(deltas[k + 1] < deltas[k]))
            throw std::invalid_argument("delta_continuation: schedule must decrease");

    ContinuationReport rep;
    rep.deltas = deltas;

    auto clip = [&](std::vector<State> traj) {
        // restrict the norm window to t <= T_norm
        std::vector<State> out;
        for (auto& s : traj)
            if (s.t <= T_norm + 1e-12) out.push_back(std::move(s));
        return out;
    };
    auto tail_sups = [&](const std::vector<State>& traj, double& sth, double& sch) {
        sth = 0.0; sch = 0.0;
        for (const auto& s : traj)
            if (s.t >= t_tail - 1e-12) {
                sth = std::max(sth, lp_norm(s.theta, kInf));
                sch = std::max(sch, lp_norm(s.chi, kInf));
            }
    };

    const std::vector<State> ref = run_collect(init, singular_model, cfg, T);
    tail_sups(ref, rep.reference_sup_theta, rep.reference_sup_chi);
    rep.reference_energy_initial = energy(singular_model, init);
    const std::vector<State> ref_clip = clip(ref);

    std::vector<State> prev_clip;
    for (double d : deltas) {
        ModelSpec reg = singular_model;
        reg.potential = Potential::regularize(singular_model.potential, d);
        const std::vector<State> traj = run_collect(init, reg, cfg, T);
        double sth, sch;
        tail_sups(traj, sth, sch);
        rep.sup_theta.push_back(sth);
        rep.sup_chi.push_back(sch);
        rep.energy_initial.push_back(energy(reg, init));
        std::vector<State> tc = clip(traj);
        rep.diff_to_reference.push_back(detail::l2_space_time_diff(tc, ref_clip));
        if (!prev_clip.empty())
            rep.consecutive_diff.push_back(detail::l2_space_time_diff(tc, prev_clip));
        prev_clip = std::move(tc);
    }

    for (std::size_t k = 0; k + 1 < rep.diff_to_reference.size(); ++k)
        if (rep.diff_to_reference[k + 1] > rep.diff_to_reference[k])
            rep.diffs_monotone = false;
    for (double e : rep.energy_initial)
        if (e > rep.reference_energy_initial + 1e-10 * (1.0 + std::abs(e)))
            rep.energy_ordering_pass = false;
    return rep;
}

} // namespace npf
