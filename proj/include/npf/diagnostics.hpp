#pragma once

#include <optional>

#include "npf/stepper.hpp"

namespace npf {

/// Lyapunov functional of the flow:
///   E(theta, chi) = integral of  theta^2/2 + F0(chi) - lambda chi^2/2
///                               + J[chi] chi / 2.
/// For a regularized potential F0 is the family member's primitive, so this
/// is the approximate energy of the delta-system.
inline double energy(const ModelSpec& model, const State& s) {
    const Field Jchi = model.op->apply_J(s.chi);
    Field dens(*model.domain);
    for (int i = 0; i < dens.size(); ++i) {
        const double th = s.theta.values[i], ch = s.chi.values[i];
        dens.values[i] = 0.5 * th * th + model.potential.F0(ch) -
                         0.5 * model.lambda.lambda.values[i] * ch * ch +
                         0.5 * Jchi.values[i] * ch;
    }
    return integrate(dens);
}

/// Per-step entry of the dissipation ledger at t_{n+1}:
///   R_n = (E_{n+1} - E_n)/dt + ||grad theta_{n+1}||^2 + ||(chi_{n+1}-chi_n)/dt||^2,
/// the discrete residual of the energy identity
///   dE/dt + ||grad theta||^2 + ||chi_t||^2 <= 0.
struct EnergyRecord {
    double t = 0.0;
    double E = 0.0;
    double grad_theta_sq = 0.0;
    double chi_t_sq = 0.0;
    double dissipation_residual = 0.0;
};

struct LedgerSummary {
    double max_residual = -kInf;       // signed max R_n
    double max_abs_residual = 0.0;     // max |R_n|
    double max_energy_increase = 0.0;  // max (E_{n+1} - E_n - tol_n)
    double bound_constant = 0.0;       // (L + lambda_sup+ + 1)/2
    bool decay_within_tolerance = true;
};

/// Uniformly spaced trajectory -> one record per step.
inline std::vector<EnergyRecord> dissipation_ledger(const std::vector<State>& traj,
                                                    const ModelSpec& model) {
    std::vector<EnergyRecord> out;
    if (traj.size() < 2) return out;
    double E_prev = energy(model, traj.front());
    for (std::size_t n = 1; n < traj.size(); ++n) {
        const double dt = traj[n].t - traj[n - 1].t;
        EnergyRecord rec;
        rec.t = traj[n].t;
        rec.E = energy(model, traj[n]);
        rec.grad_theta_sq = h1_seminorm_sq(traj[n].theta);
        Field dchi(*model.domain);
        for (int i = 0; i < dchi.size(); ++i)
            dchi.values[i] = (traj[n].chi.values[i] - traj[n - 1].chi.values[i]) / dt;
        rec.chi_t_sq = inner(dchi, dchi);
        rec.dissipation_residual = (rec.E - E_prev) / dt + rec.grad_theta_sq + rec.chi_t_sq;
        E_prev = rec.E;
        out.push_back(rec);
    }
    return out;
}

/// Check the per-step decay E_{n+1} <= E_n + tol with the scheme's provable
/// tolerance tol_n = (L + lambda_sup+ + 1)/2 * dt^2 * ||chi_t||^2 plus a
/// roundoff allowance. Valid for zero-source runs.
inline LedgerSummary ledger_summary(const std::vector<EnergyRecord>& ledger,
                                    const ModelSpec& model, double dt, double E0) {
    LedgerSummary s;
    s.bound_constant =
        0.5 * (model.op->bound_L() + std::max(model.lambda.lambda_sup, 0.0) + 1.0);
    double E_prev = E0;
    for (const auto& rec : ledger) {
        s.max_residual = std::max(s.max_residual, rec.dissipation_residual);
        s.max_abs_residual = std::max(s.max_abs_residual, std::abs(rec.dissipation_residual));
        const double tol = s.bound_constant * dt * dt * rec.chi_t_sq +
                           1e-11 * (1.0 + std::abs(rec.E));
        const double increase = rec.E - E_prev - tol;
        s.max_energy_increase = std::max(s.max_energy_increase, increase);
        if (increase > 0.0) s.decay_within_tolerance = false;
        E_prev = rec.E;
    }
    if (ledger.empty()) s.max_residual = 0.0;
    return s;
}

// ---------------------------------------------------------------------------
// Decay-rate fit
// ---------------------------------------------------------------------------

struct DecayReport {
    enum class Status { Ok, AtEquilibrium, Inconclusive };
    Status status = Status::Inconclusive;
    double kappa = 0.0;        // fitted exponential rate of E(t) - E_inf
    double E_inf = 0.0;        // last-quarter mean
    double fit_residual = 0.0; // rms residual of the log-linear fit
    double kappa_guess = 0.0;
    bool monotone_envelope = true;
    bool pass = false;
};

/// Least-squares fit of log(E(t) - E_inf) on the samples that sit clearly
/// above the plateau; E_inf is the mean over the last quarter of the run.
inline DecayReport decay_check(const std::vector<EnergyRecord>& ledger,
                               double kappa_guess = 0.0) {
    DecayReport rep;
    rep.kappa_guess = kappa_guess;
    if (ledger.size() < 8) return rep;

    const std::size_t n = ledger.size();
    double einf = 0.0;
    const std::size_t q0 = (3 * n) / 4;
    for (std::size_t i = q0; i < n; ++i) einf += ledger[i].E;
    einf /= static_cast<double>(n - q0);
    rep.E_inf = einf;

    const double drop = ledger.front().E - einf;
    if (std::abs(drop) <= 1e-12 * (1.0 + std::abs(ledger.front().E))) {
        rep.status = DecayReport::Status::AtEquilibrium;
        rep.pass = true;
        return rep;
    }
    // plateau test: a run still shedding energy across its last quarter has
    // not settled, and the last-quarter mean would bias the fit
    if (ledger[q0].E - ledger.back().E > 0.1 * std::abs(drop)) {
        rep.status = DecayReport::Status::Inconclusive;
        return rep;
    }

    double prev = kInf;
    for (const auto& r : ledger) {
        if (r.E > prev + 1e-10 * (1.0 + std::abs(prev))) rep.monotone_envelope = false;
        prev = r.E;
    }

    const double floor = std::max(1e-14, 1e-4 * std::abs(drop));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (const auto& r : ledger) {
        const double excess = r.E - einf;
        if (excess < floor) continue;
        const double y = std::log(excess);
        sx += r.t; sy += y; sxx += r.t * r.t; sxy += r.t * y;
        ++m;
    }
    if (m < 4) {
        rep.status = DecayReport::Status::Inconclusive;
        return rep;
    }
    const double denom = m * sxx - sx * sx;
    const double slope = (m * sxy - sx * sy) / denom;
    const double icept = (sy - slope * sx) / m;
    rep.kappa = -slope;
    double rss = 0.0;
    for (const auto& r : ledger) {
        const double excess = r.E - einf;
        if (excess < floor) continue;
        const double e = std::log(excess) - (icept + slope * r.t);
        rss += e * e;
    }
    rep.fit_residual = std::sqrt(rss / m);
    rep.status = DecayReport::Status::Ok;
    rep.pass = rep.kappa > 0.0 && rep.monotone_envelope;
    return rep;
}

// ---------------------------------------------------------------------------
// Sup-norm monitors
// ---------------------------------------------------------------------------

/// Sup-norm record: temperature, order parameter, discrete chi_t, and the
/// separation gap 1 - max|chi| (meaningful for singular runs).
struct BoundsRecord {
    double t = 0.0;
    double sup_theta = 0.0;
    double sup_chi = 0.0;
    double sup_chi_t = 0.0;
    double separation_gap = 0.0;
};

inline std::vector<BoundsRecord> bounds_series(const std::vector<State>& traj) {
    std::vector<BoundsRecord> out;
    out.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        BoundsRecord r;
        r.t = traj[k].t;
        r.sup_theta = lp_norm(traj[k].theta, kInf);
        r.sup_chi = lp_norm(traj[k].chi, kInf);
        if (k > 0) {
            const double dt = traj[k].t - traj[k - 1].t;
            double m = 0.0;
            for (int i = 0; i < traj[k].chi.size(); ++i)
                m = std::max(m, std::abs(traj[k].chi.values[i] - traj[k - 1].chi.values[i]));
            r.sup_chi_t = m / dt;
        }
        r.separation_gap = 1.0 - r.sup_chi;
        out.push_back(r);
    }
    return out;
}

/// Componentwise absorbing-box thresholds.
struct AbsorbingBox {
    double theta = kInf;
    double chi = kInf;
    double chi_t = kInf;
};

/// First time after which all three sup norms stay inside the box until the
/// end of the run; +inf if they never settle, the initial time if they always
/// were inside.
inline double absorbing_monitor(const std::vector<BoundsRecord>& series,
                                const AbsorbingBox& box) {
    if (series.empty()) return kInf;
    double entry = series.front().t;
    bool inside_tail = true;
    for (auto it = series.rbegin(); it != series.rend(); ++it) {
        const bool in = it->sup_theta <= box.theta && it->sup_chi <= box.chi &&
                        it->sup_chi_t <= box.chi_t;
        if (!in) {
            if (it == series.rbegin()) return kInf;
            entry = std::prev(it)->t; // first record after the last violation
            inside_tail = false;
            break;
        }
    }
    return inside_tail ? series.front().t : entry;
}

/// Box auto-sizing: a margin times the componentwise plateau (max over the
/// last quarter) of a reference run. Components whose plateau has collapsed
/// to roundoff (a run that reaches an exact rest point) are floored at a
/// fraction of the plateau sum, so entry times measure the transient rather
/// than full equilibration.
inline AbsorbingBox absorbing_box_from_plateau(const std::vector<BoundsRecord>& series,
                                               double margin = 2.0, double rel_floor = 0.05) {
    AbsorbingBox box{0.0, 0.0, 0.0};
    const std::size_t q0 = (3 * series.size()) / 4;
    for (std::size_t i = q0; i < series.size(); ++i) {
        box.theta = std::max(box.theta, series[i].sup_theta);
        box.chi = std::max(box.chi, series[i].sup_chi);
        box.chi_t = std::max(box.chi_t, series[i].sup_chi_t);
    }
    const double floor = rel_floor * (box.theta + box.chi + box.chi_t);
    box.theta = margin * std::max(box.theta, floor);
    box.chi = margin * std::max(box.chi, floor);
    box.chi_t = margin * std::max(box.chi_t, floor);
    return box;
}

/// Gap history (t, 1 - max|chi|) of a singular run.
inline std::vector<std::pair<double, double>> separation_monitor(
    const std::vector<State>& traj) {
    std::vector<std::pair<double, double>> out;
    out.reserve(traj.size());
    for (const auto& s : traj) out.emplace_back(s.t, 1.0 - lp_norm(s.chi, kInf));
    return out;
}

/// min over t >= tau of the gap, for each requested tau.
inline std::vector<double> min_gap_from(const std::vector<std::pair<double, double>>& gaps,
                                        const std::vector<double>& taus) {
    std::vector<double> out;
    out.reserve(taus.size());
    for (double tau : taus) {
        double m = kInf;
        for (const auto& [t, g] : gaps)
            if (t >= tau - 1e-12) m = std::min(m, g);
        out.push_back(m);
    }
    return out;
}

} // namespace npf
