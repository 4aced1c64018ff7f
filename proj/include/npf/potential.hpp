#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "npf/grid.hpp"
#include "npf/nonlocal.hpp"
#include "npf/rootfind.hpp"

namespace npf {

enum class PotentialKind { Smooth, Singular, Regularized };

/// Constants of the power-type coercivity bracket
///   kappa_f |r|^{1+eps} - c_f  <=  f0(r) sign r  <=  C_f (|r|^{1+eps} + 1).
struct SmoothBounds {
    double epsilon = 1.0;
    double kappa_f = 1.0;
    double c_f = 0.0;
    double C_f = 1.0;
};

/// Configuration potential, split as f(x, r) = f0(r) - lambda(x) r with f0
/// monotone nondecreasing, f0(0) = 0, and F0 its primitive.
///
/// Three kinds:
///   Smooth       f0 defined on all of R with a power coercivity bracket
///                (built-in: the cubic double-well split f0 = r^3 / 2)
///   Singular     f0 on I = (-1, 1), blowing up at the endpoints
///                (built-in: f0 = log((1+r)/(1-r)); the quadratic part of
///                the potential contributes 2*gamma to the linear
///                coefficient folded into lambda)
///   Regularized  a delta-family member built from a singular base: the
///                resolvent-regularized f0 plus a quadratic barrier outside
///                |r| > 1 - delta, globally defined and Lipschitz
///
/// Value type: cheap to copy, immutable, thread-safe to evaluate.
class Potential {
public:
    PotentialKind kind = PotentialKind::Smooth;
    double r_minus = -kInf, r_plus = kInf; // domain I of f0
    SmoothBounds bounds{};
    bool has_bounds = false;
    double gamma = 0.0;
    double linear_coefficient = 0.0; // destabilizing linear part, goes to lambda
    double delta = 0.0;              // regularized only
    std::string name = "custom";

    double f0(double r) const {
        check_domain(r);
        return f0_(r);
    }
    double df0(double r) const {
        check_domain(r);
        return df0_(r);
    }
    /// Primitive of f0; for the singular kind defined on the closed interval.
    double F0(double r) const {
        if (kind == PotentialKind::Singular && (r < r_minus || r > r_plus))
            throw std::domain_error("Potential: F0 argument outside the closure of I");
        return F0_(r);
    }

    bool has_inverse() const { return static_cast<bool>(f0_inverse_); }
    double f0_inverse(double y) const { return f0_inverse_(y); }
    double f0_inverse_deriv(double y) const { return f0_inverse_deriv_(y); }

    const Potential& singular_base() const {
        if (!base_) throw std::logic_error("Potential: not a regularized family member");
        return *base_;
    }

    /// Cubic split of the classical quartic double well: f0 = r^3 / 2, with
    /// the linear part r/2 carried by lambda.
    static Potential double_well() {
        Potential p;
        p.kind = PotentialKind::Smooth;
        p.name = "double_well";
        p.f0_ = [](double r) { return 0.5 * r * r * r; };
        p.df0_ = [](double r) { return 1.5 * r * r; };
        p.F0_ = [](double r) { return 0.125 * r * r * r * r; };
        p.bounds = {2.0, 0.5, 0.0, 0.5};
        p.has_bounds = true;
        p.linear_coefficient = 0.5;
        return p;
    }

    /// Logarithmic potential on (-1, 1): f0(r) = log((1+r)/(1-r)); the
    /// quadratic term -gamma r^2 contributes 2*gamma to lambda.
    static Potential logarithmic(double gamma = 0.0) {
        if (gamma < 0.0) throw std::invalid_argument("Potential: gamma must be >= 0");
        Potential p;
        p.kind = PotentialKind::Singular;
        p.name = "logarithmic";
        p.r_minus = -1.0;
        p.r_plus = 1.0;
        p.gamma = gamma;
        p.linear_coefficient = 2.0 * gamma;
        p.f0_ = [](double r) { return std::log1p(r) - std::log1p(-r); };
        p.df0_ = [](double r) { return 2.0 / ((1.0 - r) * (1.0 + r)); };
        p.F0_ = [](double r) {
            auto xlogx = [](double s) { return s > 0.0 ? s * std::log(s) : 0.0; };
            return xlogx(1.0 + r) + xlogx(1.0 - r);
        };
        p.f0_inverse_ = [](double y) { return std::tanh(0.5 * y); };
        p.f0_inverse_deriv_ = [](double y) {
            const double c = std::cosh(0.5 * y);
            return std::isfinite(c) ? 0.5 / (c * c) : 0.0;
        };
        return p;
    }

    static Potential custom_smooth(std::function<double(double)> f0,
                                   std::function<double(double)> df0,
                                   std::function<double(double)> F0, SmoothBounds bounds,
                                   double linear_coefficient = 0.0) {
        Potential p;
        p.kind = PotentialKind::Smooth;
        p.name = "custom_smooth";
        p.f0_ = std::move(f0);
        p.df0_ = std::move(df0);
        p.F0_ = std::move(F0);
        p.bounds = bounds;
        p.has_bounds = true;
        p.linear_coefficient = linear_coefficient;
        return p;
    }

    /// f0 = slope * r. Test scaffolding; no coercivity bracket.
    static Potential linear(double slope) {
        Potential p;
        p.kind = PotentialKind::Smooth;
        p.name = "linear";
        p.f0_ = [slope](double r) { return slope * r; };
        p.df0_ = [slope](double) { return slope; };
        p.F0_ = [slope](double r) { return 0.5 * slope * r * r; };
        return p;
    }

    /// f0 = 0; reduces the order-parameter equation to a linear one.
    static Potential zero() { return linear(0.0); }

    static Potential regularize(const Potential& base, double delta);

private:
    void check_domain(double r) const {
        if (kind == PotentialKind::Singular && !(r > r_minus && r < r_plus))
            throw std::domain_error("Potential: argument outside the domain I of f0");
    }

    std::function<double(double)> f0_, df0_, F0_;
    std::function<double(double)> f0_inverse_, f0_inverse_deriv_;
    std::shared_ptr<const Potential> base_;

    friend double yosida(const Potential&, double, double);
};

/// Resolvent regularization g of f0 at parameter delta: the unique g with
/// g = f0(r - delta * g). Monotone, Lipschitz with constant 1/delta, and
/// |g| <= |f0(r)| on I.
///
/// Solved through the inverse when f0 has one (the equation becomes
/// f0^{-1}(g) + delta g = r, well conditioned for every real r); otherwise by
/// a bracketed solve in p = r - delta g, which confines evaluations to I.
inline double yosida(const Potential& pot, double delta, double r) {
    if (pot.kind != PotentialKind::Singular)
        throw std::invalid_argument("yosida: potential must be the singular kind");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("yosida: delta must lie in (0, 1)");
    if (r == 0.0) return 0.0;

    if (pot.has_inverse()) {
        const double glo = std::min(0.0, r / delta), ghi = std::max(0.0, r / delta);
        auto phi = [&](double g) { return pot.f0_inverse(g) + delta * g - r; };
        auto dphi = [&](double g) { return pot.f0_inverse_deriv(g) + delta; };
        const double ftol = 1e-15 * (1.0 + std::abs(r));
        return detail::newton_bisect(phi, dphi, glo, ghi, r / (1.0 + delta), ftol, 200,
                                     "yosida");
    }

    const double tiny = 1e-15;
    double plo, phi_hi;
    if (r > 0.0) {
        plo = 0.0;
        phi_hi = std::min(r, pot.r_plus - tiny * std::max(1.0, std::abs(pot.r_plus)));
    } else {
        plo = std::max(r, pot.r_minus + tiny * std::max(1.0, std::abs(pot.r_minus)));
        phi_hi = 0.0;
    }
    auto eta = [&](double p) { return p + delta * pot.f0(p) - r; };
    auto deta = [&](double p) { return 1.0 + delta * pot.df0(p); };
    const double ftol = 1e-14 * (1.0 + std::abs(r));
    const double p = detail::newton_bisect(eta, deta, plo, phi_hi, std::clamp(r, plo, phi_hi),
                                           ftol, 200, "yosida");
    return (r - p) / delta;
}

namespace detail {

inline double barrier(double delta, double r) {
    const double up = std::max(r - (1.0 - delta), 0.0);
    const double dn = std::max(-r - (1.0 - delta), 0.0);
    return (up * up - dn * dn) / delta;
}
inline double barrier_deriv(double delta, double r) {
    const double up = std::max(r - (1.0 - delta), 0.0);
    const double dn = std::max(-r - (1.0 - delta), 0.0);
    return 2.0 * (up + dn) / delta;
}
inline double barrier_primitive(double delta, double r) {
    const double up = std::max(r - (1.0 - delta), 0.0);
    const double dn = std::max(-r - (1.0 - delta), 0.0);
    return (up * up * up + dn * dn * dn) / (3.0 * delta);
}

} // namespace detail

/// Regularized family member f_delta = g_delta + quadratic barrier beyond
/// |r| = 1 - delta. The primitive uses the envelope identity
/// integral of g_delta = F0(p) + delta g^2 / 2 at p = r - delta g.
inline Potential Potential::regularize(const Potential& base, double delta) {
    if (base.kind != PotentialKind::Singular)
        throw std::invalid_argument("regularize: base must be a singular potential");
    if (base.r_minus != -1.0 || base.r_plus != 1.0)
        throw std::invalid_argument("regularize: only the domain (-1, 1) is supported");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("regularize: delta must lie in (0, 1)");

    auto bp = std::make_shared<const Potential>(base);
    Potential p;
    p.kind = PotentialKind::Regularized;
    p.name = base.name + "_regularized";
    p.delta = delta;
    p.gamma = base.gamma;
    p.linear_coefficient = base.linear_coefficient;
    p.base_ = bp;
    p.f0_ = [bp, delta](double r) { return yosida(*bp, delta, r) + detail::barrier(delta, r); };
    p.df0_ = [bp, delta](double r) {
        double gprime;
        if (bp->has_inverse()) {
            const double g = yosida(*bp, delta, r);
            gprime = 1.0 / (bp->f0_inverse_deriv(g) + delta);
        } else {
            const double g = yosida(*bp, delta, r);
            const double q = bp->df0(std::clamp(r - delta * g, bp->r_minus + 1e-15,
                                                bp->r_plus - 1e-15));
            gprime = q / (1.0 + delta * q);
        }
        return gprime + detail::barrier_deriv(delta, r);
    };
    p.F0_ = [bp, delta](double r) {
        const double g = yosida(*bp, delta, r);
        const double pr = bp->has_inverse() ? bp->f0_inverse(g) : r - delta * g;
        return bp->F0(std::clamp(pr, bp->r_minus, bp->r_plus)) + 0.5 * delta * g * g +
               detail::barrier_primitive(delta, r);
    };

    // Family-wide coercivity: kappa0 |r|^2 - c0 <= f_delta(r) sign r with
    // constants independent of delta (barrier beats the quadratic outside I,
    // monotonicity covers the inside).
    p.bounds = {1.0, 0.5, 1.0, 0.0};
    double c_upper = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double r = -2.0 + 4.0 * i / 400.0;
        if (r == 0.0) continue;
        const double val = p.f0_(r) * (r > 0 ? 1.0 : -1.0);
        c_upper = std::max(c_upper, val / (r * r + 1.0));
    }
    p.bounds.C_f = c_upper;
    p.has_bounds = true;
    return p;
}

/// Data-independent ceiling produced by the comparison argument for smooth
/// potentials: (8 / (kappa_f * eps))^{1/eps}.
inline double comparison_limit(const Potential& pot) {
    if (!pot.has_bounds)
        throw std::invalid_argument("comparison_limit: potential carries no coercivity bracket");
    const double e = pot.bounds.epsilon, kf = pot.bounds.kappa_f;
    return std::pow(8.0 / (kf * e), 1.0 / e);
}

/// Threshold above which the frozen-x comparison inequality forces pointwise
/// decrease of |chi|, given monitored sup bounds Theta (temperature), M
/// (nonlocal term) and the positive part of sup lambda. Together with
/// comparison_limit it caps limsup max|chi| by max(Lambda, Lambda').
inline double comparison_threshold(const Potential& pot, double theta_sup, double nonlocal_sup,
                                   double lambda_sup) {
    if (!pot.has_bounds)
        throw std::invalid_argument("comparison_threshold: potential carries no coercivity bracket");
    const double e = pot.bounds.epsilon, kf = pot.bounds.kappa_f, cf = pot.bounds.c_f;
    const double lam_plus = std::max(lambda_sup, 0.0);
    const double a = std::pow(4.0 * lam_plus / kf, 1.0 / e);
    const double b = std::pow(4.0 * (theta_sup + nonlocal_sup + cf) / kf, 1.0 / (1.0 + e));
    return std::max(a, b);
}

// ---------------------------------------------------------------------------
// lambda(x)
// ---------------------------------------------------------------------------

/// Spatial linear coefficient lambda(x) of f(x, r) = f0(r) - lambda(x) r,
/// together with its essential sup and the damping rate -sup. The model is
/// dissipative when lambda_sup < 0, i.e. damping_rate > 0.
struct LambdaField {
    Field lambda;
    double lambda_sup = 0.0;
    double damping_rate = 0.0;
    double linear_coefficient = 0.0;
    bool kernel_folded = false;

    static LambdaField from_field(Field lam) {
        LambdaField out;
        out.lambda = std::move(lam);
        out.lambda_sup = -kInf;
        for (double v : out.lambda.values) {
            if (!std::isfinite(v)) throw std::invalid_argument("LambdaField: lambda must be bounded");
            out.lambda_sup = std::max(out.lambda_sup, v);
        }
        out.damping_rate = -out.lambda_sup;
        return out;
    }
    static LambdaField constant(const DomainSpec& d, double value) {
        return from_field(Field(d, value));
    }
};

/// lambda(x) = (potential linear coefficient) - kappa(x) + extra(x).
inline LambdaField build_lambda(const DomainSpec& d, const NonlocalOperator& op,
                                const Potential& pot, const Field& extra) {
    if (!(op.domain() == d) || !(*extra.domain == d))
        throw std::invalid_argument("build_lambda: domain mismatch");
    Field lam(d, pot.linear_coefficient);
    for (int i = 0; i < lam.size(); ++i)
        lam.values[i] += extra.values[i] - op.kappa().values[i];
    LambdaField out = LambdaField::from_field(std::move(lam));
    out.linear_coefficient = pot.linear_coefficient;
    out.kernel_folded = true;
    return out;
}

inline LambdaField build_lambda(const DomainSpec& d, const NonlocalOperator& op,
                                const Potential& pot, double extra = 0.0) {
    return build_lambda(d, op, pot, Field(d, extra));
}

// ---------------------------------------------------------------------------
// Family certification
// ---------------------------------------------------------------------------

/// Sampled verification of the delta-family inequalities. All clauses carry
/// a 1e-9 slack; margins are reported signed (negative = satisfied strictly).
struct FamilyReport {
    std::vector<double> deltas;

    double kappa0 = 0.5, c0 = 1.0;   // pinned uniform lower-bound constants
    double lower_bound_excess = 0.0; // max (kappa0 r^2 - c0) - f_d(r) sign r
    bool lower_bound_pass = false;

    double monotonicity_excess = 0.0; // max (f_{d1} - f_{d2}) sign r on I, d2 < d1
    bool monotone_pass = false;

    double f_ordering_excess = 0.0; // max F_{d1} - F_{d2}, d2 < d1
    double f_vs_base_excess = 0.0;  // max F_d - F0 on I
    bool f_ordering_pass = false;

    double growth_kappa = 0.5; // f_d(r) r - lambda r^2 >= growth_kappa F_d(r) - growth_c
    double growth_c = 0.0;
    double growth_excess = 0.0;
    bool growth_pass = false;
    double lambda_bound = 0.0;

    double divergence_min_increase = 0.0; // min over |r|>1 of f_{d+} - f_d, d+ finer
    bool divergence_pass = false;

    std::vector<double> lipschitz_c; // reported C_delta per family member

    bool pass() const {
        return lower_bound_pass && monotone_pass && f_ordering_pass && growth_pass &&
               divergence_pass;
    }
};

/// Certify a decreasing delta schedule of regularized members of `base` on a
/// sample grid covering I and an extended range beyond it.
inline FamilyReport certify_family(const Potential& base, std::vector<double> deltas,
                                   int samples_inside = 1000, int samples_extended = 400,
                                   double extended_reach = 1.5, double lambda_bound = 0.0) {
    if (base.kind != PotentialKind::Singular)
        throw std::invalid_argument("certify_family: base must be singular");
    if (deltas.empty()) throw std::invalid_argument("certify_family: empty delta schedule");
    for (std::size_t k = 0; k + 1 < deltas.size(); ++k)
        if (!(deltas[k + 1] < deltas[k]))
            throw std::invalid_argument("certify_family: schedule must be strictly decreasing");

    FamilyReport rep;
    rep.deltas = deltas;
    rep.lambda_bound = lambda_bound;

    std::vector<Potential> fam;
    fam.reserve(deltas.size());
    for (double d : deltas) fam.push_back(Potential::regularize(base, d));
    for (const auto& p : fam) rep.lipschitz_c.push_back(p.bounds.C_f);

    std::vector<double> grid_I, grid_ext;
    for (int i = 0; i < samples_inside; ++i) {
        const double t = (i + 0.5) / samples_inside;
        grid_I.push_back(-1.0 + 2.0 * t + 0.0);
    }
    // endpoint refinement: approach the blow-up geometrically
    for (int k = 2; k <= 12; ++k) {
        grid_I.push_back(1.0 - std::pow(10.0, -k));
        grid_I.push_back(-1.0 + std::pow(10.0, -k));
    }
    for (int i = 0; i <= samples_extended; ++i)
        grid_ext.push_back(-extended_reach + 2.0 * extended_reach * i / samples_extended);

    const double slack = 1e-9;
    auto sgn = [](double r) { return r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0); };

    // uniform quadratic lower bound, all deltas, inside and out
    rep.lower_bound_excess = -kInf;
    for (const auto& p : fam)
        for (double r : grid_ext) {
            if (r == 0.0) continue;
            rep.lower_bound_excess = std::max(
                rep.lower_bound_excess, (rep.kappa0 * r * r - rep.c0) - p.f0(r) * sgn(r));
        }
    for (const auto& p : fam)
        for (double r : grid_I)
            rep.lower_bound_excess = std::max(
                rep.lower_bound_excess, (rep.kappa0 * r * r - rep.c0) - p.f0(r) * sgn(r));
    rep.lower_bound_pass = rep.lower_bound_excess <= slack;

    // ordering in delta on I, and divergence outside
    rep.monotonicity_excess = -kInf;
    rep.f_ordering_excess = -kInf;
    rep.divergence_min_increase = kInf;
    if (fam.size() < 2) {
        rep.monotonicity_excess = 0.0;
        rep.f_ordering_excess = 0.0;
        rep.divergence_min_increase = 0.0;
        rep.monotone_pass = true;   // vacuous for a single member
        rep.f_ordering_pass = true;
        rep.divergence_pass = true;
    } else {
        for (std::size_t k = 0; k + 1 < fam.size(); ++k) {
            const auto& coarse = fam[k];
            const auto& fine = fam[k + 1];
            for (double r : grid_I) {
                if (r == 0.0) continue;
                rep.monotonicity_excess = std::max(
                    rep.monotonicity_excess, (coarse.f0(r) - fine.f0(r)) * sgn(r));
                rep.f_ordering_excess =
                    std::max(rep.f_ordering_excess, coarse.F0(r) - fine.F0(r));
            }
            for (double r : grid_ext)
                if (std::abs(r) > 1.0)
                    rep.divergence_min_increase =
                        std::min(rep.divergence_min_increase,
                                 (fine.f0(r) - coarse.f0(r)) * sgn(r));
        }
        rep.monotone_pass = rep.monotonicity_excess <= slack;
        rep.divergence_pass = rep.divergence_min_increase > 0.0;
        rep.f_ordering_pass = rep.f_ordering_excess <= slack;
    }

    // F_delta below the singular primitive on I
    rep.f_vs_base_excess = -kInf;
    for (const auto& p : fam)
        for (double r : grid_I)
            rep.f_vs_base_excess = std::max(rep.f_vs_base_excess, p.F0(r) - base.F0(r));
    rep.f_ordering_pass = rep.f_ordering_pass && rep.f_vs_base_excess <= slack;

    // growth control: f_d(r) r - lambda r^2 >= kappa F_d(r) - c with
    // kappa = 1/2 and c from the cubic  kappa0 s^3/2 - lam+ s^2 - c0 s/2,
    // whose minimum over s >= 0 is attained at the positive critical point.
    {
        const double lam_plus = std::max(lambda_bound, 0.0);
        const double k0 = rep.kappa0, c0 = rep.c0;
        const double s_star =
            (2.0 * lam_plus + std::sqrt(4.0 * lam_plus * lam_plus + 3.0 * k0 * c0)) /
            (3.0 * k0);
        const double phi_min = 0.5 * k0 * s_star * s_star * s_star -
                               lam_plus * s_star * s_star - 0.5 * c0 * s_star;
        rep.growth_c = std::max(0.0, -phi_min);
        rep.growth_excess = -kInf;
        for (const auto& p : fam)
            for (double r : grid_ext) {
                const double lhs = p.f0(r) * r - lambda_bound * r * r;
                const double rhs = rep.growth_kappa * p.F0(r) - rep.growth_c;
                rep.growth_excess = std::max(rep.growth_excess, rhs - lhs);
            }
        rep.growth_pass = rep.growth_excess <= slack;
    }

    return rep;
}

} // namespace npf
