#pragma once

#include <chrono>
#include <memory>

#include "npf/config.hpp"
#include "npf/io.hpp"
#include "npf/longtime.hpp"
#include "npf/mms.hpp"
#include "npf/spectral.hpp"

namespace npf {

/// Owning assembly of everything a run needs, built from a RunConfig.
struct BuiltModel {
    std::unique_ptr<DomainSpec> domain;
    std::unique_ptr<NonlocalOperator> op;
    Potential base_potential; // before any delta-regularization
    ModelSpec model;
    SchemeConfig scheme;
};

namespace detail {

inline KernelSpec make_kernel(const RunConfig& cfg) {
    const auto& k = cfg.kernel;
    if (k.family == "gaussian") return KernelSpec::gaussian(k.amplitude, k.sigma);
    if (k.family == "bump") return KernelSpec::bump(k.amplitude, k.sigma);
    return load_kernel_table(k.table_file, k.amplitude, k.sigma, k.table_radial);
}

inline Potential make_potential(const RunConfig& cfg) {
    const auto& p = cfg.potential;
    if (p.kind == "double_well") return Potential::double_well();
    if (p.kind == "logarithmic") return Potential::logarithmic(p.gamma);
    const double e = p.epsilon, c = p.kappa_f;
    if (!(e > 0.0) || !(c > 0.0))
        throw ConfigError("[potential] custom_smooth needs epsilon > 0 and kappa_f > 0");
    return Potential::custom_smooth(
        [c, e](double r) { return c * std::pow(std::abs(r), e) * r; },
        [c, e](double r) { return c * (e + 1.0) * std::pow(std::abs(r), e); },
        [c, e](double r) { return c * std::pow(std::abs(r), e + 2.0) / (e + 2.0); },
        SmoothBounds{e, p.kappa_f, p.c_f, p.C_f}, p.linear_coefficient);
}

inline Field make_profile(const DomainSpec& d, const std::string& kind, double amp,
                          const std::string& file, std::uint64_t seed) {
    if (kind == "constant") return Field(d, amp);
    if (kind == "sine-bump") {
        if (d.dimension == 1)
            return Field::sample(d, [&](double x) { return amp * std::sin(M_PI * x); });
        return Field::sample(d, [&](double x, double y) {
            return amp * std::sin(M_PI * x / d.side_lengths[0]) *
                   std::sin(M_PI * y / d.side_lengths[1]);
        });
    }
    if (kind == "random") {
        std::mt19937_64 rng(seed);
        Field f(d);
        for (double& v : f.values) v = uniform(rng, -amp, amp);
        return f;
    }
    return field_from_snapshot(read_snapshot(file), d);
}

} // namespace detail

inline BuiltModel build_model(const RunConfig& cfg) {
    BuiltModel b;
    b.domain = std::make_unique<DomainSpec>(
        cfg.domain.dimension == 1
            ? DomainSpec::line(cfg.domain.n1)
            : DomainSpec::box(cfg.domain.n1, cfg.domain.n2, cfg.domain.L1, cfg.domain.L2));
    b.op = std::make_unique<NonlocalOperator>(detail::make_kernel(cfg), *b.domain);
    b.base_potential = detail::make_potential(cfg);

    b.model.domain = b.domain.get();
    b.model.op = b.op.get();
    b.model.potential = cfg.potential.delta > 0.0
                            ? Potential::regularize(b.base_potential, cfg.potential.delta)
                            : b.base_potential;
    if (cfg.lambda.mode == "constant")
        b.model.lambda = LambdaField::constant(*b.domain, cfg.lambda.value);
    else
        b.model.lambda = build_lambda(*b.domain, *b.op, b.base_potential, cfg.lambda.extra);

    b.scheme.dt = cfg.run.dt;
    b.scheme.newton_tol = cfg.scheme.newton_tol;
    b.scheme.newton_max_iter = cfg.scheme.newton_max_iter;
    b.scheme.linear_rtol = cfg.scheme.linear_rtol;
    b.scheme.cfl_guard = cfg.scheme.cfl_guard;
    if (cfg.scheme.linear_solver == "tridiagonal")
        b.scheme.linear_solver = SchemeConfig::LinearSolver::Tridiagonal;
    else if (cfg.scheme.linear_solver == "conjugate-residual")
        b.scheme.linear_solver = SchemeConfig::LinearSolver::ConjugateResidual;
    return b;
}

inline State initial_state(const RunConfig& cfg, const DomainSpec& d) {
    State s;
    s.theta = detail::make_profile(d, cfg.run.theta0, cfg.run.theta0_amp, cfg.run.theta0_file,
                                   cfg.run.seed);
    s.chi = detail::make_profile(d, cfg.run.chi0, cfg.run.chi0_amp, cfg.run.chi0_file,
                                 cfg.run.seed + 1);
    s.t = 0.0;
    return s;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline json to_json(const BoundReport& r) {
    json j;
    j["bound_L"] = r.bound_L;
    j["bound_Cinf"] = r.bound_Cinf;
    j["p_star"] = r.p_star;
    json ratios = json::object();
    for (std::size_t k = 0; k < r.ps.size(); ++k)
        ratios[std::isinf(r.ps[k]) ? "inf" : format_real(r.ps[k])] = r.p_ratios[k];
    j["p_ratios"] = ratios;
    j["smoothing_ratio"] = r.smoothing_ratio;
    j["self_adjoint_residual"] = r.self_adjoint_residual;
    j["kernel_even_violation"] = r.kernel_even_violation;
    j["samples"] = r.samples;
    j["seed"] = r.seed;
    j["p_bound_pass"] = r.p_bound_pass;
    j["smoothing_pass"] = r.smoothing_pass;
    j["self_adjoint_pass"] = r.self_adjoint_pass;
    j["pass"] = r.pass();
    return j;
}

inline json to_json(const ProjectorReport& r) {
    json j;
    j["rank"] = r.rank;
    j["c"] = r.c;
    j["eta"] = r.eta;
    j["max_excess"] = r.max_excess;
    j["samples"] = r.samples;
    j["pass"] = r.pass;
    return j;
}

inline json to_json(const FamilyReport& r) {
    json j;
    j["deltas"] = r.deltas;
    j["kappa0"] = r.kappa0;
    j["c0"] = r.c0;
    j["lower_bound_excess"] = r.lower_bound_excess;
    j["lower_bound_pass"] = r.lower_bound_pass;
    j["monotonicity_excess"] = r.monotonicity_excess;
    j["monotone_pass"] = r.monotone_pass;
    j["f_ordering_excess"] = r.f_ordering_excess;
    j["f_vs_base_excess"] = r.f_vs_base_excess;
    j["f_ordering_pass"] = r.f_ordering_pass;
    j["growth_kappa"] = r.growth_kappa;
    j["growth_c"] = r.growth_c;
    j["growth_excess"] = r.growth_excess;
    j["growth_pass"] = r.growth_pass;
    j["lambda_bound"] = r.lambda_bound;
    j["divergence_min_increase"] = r.divergence_min_increase;
    j["divergence_pass"] = r.divergence_pass;
    j["lipschitz_c"] = r.lipschitz_c;
    j["pass"] = r.pass();
    return j;
}

inline json to_json(const DecayReport& r) {
    json j;
    switch (r.status) {
        case DecayReport::Status::Ok: j["status"] = "ok"; break;
        case DecayReport::Status::AtEquilibrium: j["status"] = "at-equilibrium"; break;
        case DecayReport::Status::Inconclusive: j["status"] = "inconclusive"; break;
    }
    j["kappa"] = r.kappa;
    j["E_inf"] = r.E_inf;
    j["fit_residual"] = r.fit_residual;
    j["kappa_guess"] = r.kappa_guess;
    j["monotone_envelope"] = r.monotone_envelope;
    j["pass"] = r.pass;
    return j;
}

inline json to_json(const SqueezeReport& r) {
    json j;
    j["distance_initial"] = r.distance_initial;
    j["distance_final"] = r.distance_final;
    j["d_T"] = r.d_T;
    j["required_c"] = r.required_c;
    j["projector_rank"] = r.projector_rank;
    j["t_star"] = r.t_star;
    return j;
}

inline json to_json(const ContinuationReport& r) {
    json j;
    j["deltas"] = r.deltas;
    j["diff_to_reference"] = r.diff_to_reference;
    j["consecutive_diff"] = r.consecutive_diff;
    j["sup_theta"] = r.sup_theta;
    j["sup_chi"] = r.sup_chi;
    j["reference_sup_theta"] = r.reference_sup_theta;
    j["reference_sup_chi"] = r.reference_sup_chi;
    j["energy_initial"] = r.energy_initial;
    j["reference_energy_initial"] = r.reference_energy_initial;
    j["diffs_monotone"] = r.diffs_monotone;
    j["energy_ordering_pass"] = r.energy_ordering_pass;
    return j;
}

inline json to_json(const MmsReport& r) {
    json j;
    auto pts = [](const std::vector<MmsPoint>& v) {
        json a = json::array();
        for (const auto& p : v) a.push_back({{"n", p.n}, {"dt", p.dt}, {"error", p.error}});
        return a;
    };
    j["temporal"] = pts(r.temporal);
    j["spatial"] = pts(r.spatial);
    j["temporal_orders"] = r.temporal_orders;
    j["spatial_orders"] = r.spatial_orders;
    j["min_temporal_order"] = r.min_temporal_order;
    j["min_spatial_order"] = r.min_spatial_order;
    return j;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

struct DispatchResult {
    json manifest;
    bool verification_pass = true; // false only for failed verify-* modes
};

inline int thread_cap_from_env() {
    if (const char* v = std::getenv("NPF_THREADS")) {
        const int n = std::atoi(v);
        if (n > 0) return n;
    }
    return 1;
}

inline DispatchResult dispatch(const RunConfig& cfg, const std::string& mode,
                               const std::filesystem::path& outdir) {
    const auto t0 = std::chrono::steady_clock::now();
    Emitter out(outdir);
    DispatchResult result;
    std::string fail_reason;

    if (mode == "simulate") {
        BuiltModel b = build_model(cfg);
        const State init = initial_state(cfg, *b.domain);
        out.write_snapshot("theta_initial", init.theta, init.t);
        out.write_snapshot("chi_initial", init.chi, init.t);
        const auto traj = run_collect(init, b.model, b.scheme, cfg.run.T, cfg.run.stride);
        const auto ledger = dissipation_ledger(traj, b.model);
        const auto bounds = bounds_series(traj);
        out.write_text("energy.csv", ledger_csv(ledger));
        out.write_text("bounds.csv", bounds_csv(bounds));
        out.write_snapshot("theta_final", traj.back().theta, traj.back().t);
        out.write_snapshot("chi_final", traj.back().chi, traj.back().t);

        json summary;
        summary["final_time"] = traj.back().t;
        summary["steps"] = static_cast<long long>(traj.size()) - 1;
        summary["energy_initial"] = energy(b.model, traj.front());
        summary["energy_final"] = ledger.empty() ? energy(b.model, traj.back()) : ledger.back().E;
        const auto led = ledger_summary(ledger, b.model, cfg.run.dt * cfg.run.stride,
                                        energy(b.model, traj.front()));
        summary["max_residual"] = led.max_residual;
        summary["max_abs_residual"] = led.max_abs_residual;
        summary["decay_within_tolerance"] = led.decay_within_tolerance;
        summary["lambda_sup"] = b.model.lambda.lambda_sup;
        summary["decay_fit"] = to_json(decay_check(ledger));
        if (cfg.experiment.box_theta > 0.0) {
            AbsorbingBox box{cfg.experiment.box_theta, cfg.experiment.box_chi,
                             cfg.experiment.box_chi_t};
            summary["absorbing_entry_time"] = absorbing_monitor(bounds, box);
        }
        if (b.model.potential.kind == PotentialKind::Singular) {
            const auto gaps = separation_monitor(traj);
            summary["min_gap_from_tau"] = json::object();
            const auto mins = min_gap_from(gaps, cfg.experiment.taus);
            for (std::size_t i = 0; i < mins.size(); ++i)
                summary["min_gap_from_tau"][format_real(cfg.experiment.taus[i])] = mins[i];
        }
        out.write_json("summary.json", summary);
    } else if (mode == "steady") {
        BuiltModel b = build_model(cfg);
        const State init = initial_state(cfg, *b.domain);
        const auto res = steady_state(b.model, init.chi, cfg.experiment.tol,
                                      cfg.experiment.rho, cfg.experiment.max_iter,
                                      cfg.scheme.newton_tol);
        out.write_snapshot("chi_inf", res.chi_inf, 0.0);
        json j;
        j["residual"] = res.residual;
        j["residual_direct"] = stationary_residual(b.model, res.chi_inf, true);
        j["iterations"] = res.iterations;
        j["converged"] = res.converged;
        out.write_json("steady.json", j);
        if (!res.converged)
            throw SolverError("steady: no convergence, last residual " +
                              std::to_string(res.residual));
    } else if (mode == "squeeze") {
        BuiltModel b = build_model(cfg);
        const int modes = cfg.experiment.modes > 0 ? cfg.experiment.modes : b.domain->cells();
        if (b.domain->cells() > 4096)
            throw ConfigError("squeeze: dense spectral solve capped at 4096 cells");
        SpectralDecomp dec = eigendecompose(*b.op, modes);
        int rank = cfg.experiment.rank;
        if (rank < 0) {
            // spectral cutoff: keep modes with mu^2 above eta (default a tenth
            // of the top eigenvalue squared)
            double eta = cfg.experiment.eta;
            if (eta <= 0.0 && !dec.eigenvalues.empty())
                eta = 0.1 * dec.eigenvalues[0] * dec.eigenvalues[0];
            rank = 0;
            for (double mu : dec.eigenvalues)
                if (mu * mu > eta) ++rank;
        }
        rank = std::min(rank, dec.count());

        std::mt19937_64 rng(cfg.run.seed);
        // pairs from a bounded-in-H1 neighbourhood: random low-mode profiles
        // with the order-parameter difference kept subordinate
        auto smooth = [&](double amp) {
            const double c1 = uniform(rng, -1, 1), c2 = uniform(rng, -1, 1),
                         c3 = uniform(rng, -1, 1);
            return Field::sample(*b.domain, [&](double x) {
                return amp * (c1 * std::sin(M_PI * x) + 0.5 * c2 * std::sin(2 * M_PI * x) +
                              0.25 * c3 * std::sin(3 * M_PI * x));
            });
        };
        if (b.domain->dimension != 1)
            throw ConfigError("squeeze: pair sampling is defined for 1D domains");
        json pairs = json::array();
        std::vector<std::vector<double>> theta_rows;
        double c_uniform = 0.0;
        bool all_finite = true;
        for (int p = 0; p < cfg.experiment.pairs; ++p) {
            const Field chi_shared = smooth(uniform(rng, 0.3, 0.8));
            State s1{smooth(uniform(rng, 0.4, 1.0)), chi_shared, 0.0};
            State s2{smooth(uniform(rng, 0.4, 1.0)), chi_shared, 0.0};
            const Field pert = smooth(uniform(rng, 0.01, 0.05));
            for (int i = 0; i < s2.chi.size(); ++i) s2.chi.values[i] += pert.values[i];
            const auto rep = squeezing_experiment(b.model, b.scheme, s1, s2, rank,
                                                  cfg.experiment.t_star, dec);
            json pj = to_json(rep);
            pj["pair"] = p;
            pairs.push_back(pj);
            if (std::isfinite(rep.required_c)) c_uniform = std::max(c_uniform, rep.required_c);
            else all_finite = false;
            for (std::size_t k = 0; k < rep.times.size(); ++k)
                theta_rows.push_back({static_cast<double>(p), rep.times[k], rep.theta_distance[k]});
        }
        out.write_text("theta_distance.csv", to_csv({"pair", "t", "theta_distance"}, theta_rows));
        json j;
        j["pairs"] = pairs;
        j["uniform_c"] = c_uniform;
        j["all_pairs_admit_finite_c"] = all_finite;
        j["projector_rank"] = rank;
        out.write_json("squeeze.json", j);
    } else if (mode == "continuation") {
        BuiltModel b = build_model(cfg);
        if (b.model.potential.kind != PotentialKind::Singular)
            throw ConfigError("continuation: potential must be logarithmic (singular)");
        const State init = initial_state(cfg, *b.domain);
        const auto rep = delta_continuation(b.model, init, cfg.experiment.delta_schedule,
                                            b.scheme, cfg.run.T, cfg.experiment.t_norm,
                                            cfg.experiment.t_tail);
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < rep.deltas.size(); ++k)
            rows.push_back({rep.deltas[k], rep.diff_to_reference[k], rep.sup_theta[k],
                            rep.sup_chi[k]});
        out.write_text("continuation.csv",
                       to_csv({"delta", "diff_to_reference", "sup_theta", "sup_chi"}, rows));
        out.write_json("continuation.json", to_json(rep));
    } else if (mode == "verify-operator") {
        BuiltModel b = build_model(cfg);
        const auto rep = certify_bounds(*b.op, cfg.experiment.samples, cfg.run.seed);
        json j = to_json(rep);
        bool ok = rep.pass();
        if (cfg.experiment.eta > 0.0) {
            if (b.domain->cells() > 4096)
                throw ConfigError("verify-operator: dense spectral solve capped at 4096 cells");
            SpectralDecomp dec = eigendecompose(*b.op, b.domain->cells());
            const auto pj = projector_bound(*b.op, dec, cfg.experiment.eta,
                                            cfg.experiment.samples, cfg.run.seed);
            j["projector"] = to_json(pj);
            ok = ok && pj.pass;
        }
        out.write_json("operator_report.json", j);
        if (!ok) {
            result.verification_pass = false;
            fail_reason = "operator bounds certification failed";
        }
    } else if (mode == "verify-potential") {
        Potential base = detail::make_potential(cfg);
        if (base.kind != PotentialKind::Singular)
            throw ConfigError("verify-potential: kind must be logarithmic (singular)");
        const auto rep = certify_family(base, cfg.experiment.delta_schedule,
                                        cfg.experiment.samples > 0 ? cfg.experiment.samples : 1000,
                                        400, 1.5, cfg.experiment.lambda_bound);
        out.write_json("family_report.json", to_json(rep));
        if (!rep.pass()) {
            result.verification_pass = false;
            fail_reason = "family certification failed";
        }
    } else if (mode == "mms") {
        const auto rep = mms_study(cfg.domain.dimension, cfg.run.T > 0 ? cfg.run.T : 0.5,
                                   detail::make_kernel(cfg));
        std::vector<std::vector<double>> rows;
        for (const auto& p : rep.temporal) rows.push_back({0, double(p.n), p.dt, p.error});
        for (const auto& p : rep.spatial) rows.push_back({1, double(p.n), p.dt, p.error});
        out.write_text("mms.csv", to_csv({"sweep", "n", "dt", "error"}, rows));
        out.write_json("mms.json", to_json(rep));
        const bool t_ok = cfg.experiment.min_temporal_order <= 0.0 ||
                          rep.min_temporal_order >= cfg.experiment.min_temporal_order;
        const bool s_ok = cfg.experiment.min_spatial_order <= 0.0 ||
                          rep.min_spatial_order >= cfg.experiment.min_spatial_order;
        if (!(t_ok && s_ok)) {
            result.verification_pass = false;
            fail_reason = "observed convergence orders below the configured thresholds";
        }
    } else {
        throw ConfigError("unknown mode: " + mode);
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.manifest = out.finalize(emit_config(cfg), wall, thread_cap_from_env());
    if (!result.verification_pass) throw VerificationFailure(fail_reason);
    return result;
}

/// Mode resolution: an explicit subcommand wins; otherwise the config's
/// [run] mode is used.
inline DispatchResult dispatch(const RunConfig& cfg, const std::filesystem::path& outdir) {
    if (cfg.run.mode.empty())
        throw ConfigError("no mode: set [run] mode or pass a subcommand");
    return dispatch(cfg, cfg.run.mode, outdir);
}

} // namespace npf
