#pragma once

#include <complex>
#include <memory>

#include <fftw3.h>

#include "npf/grid.hpp"
#include "npf/kernel.hpp"

namespace npf {

namespace detail {

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
using RealBuf = std::unique_ptr<double[], FftwFree>;
using ComplexBuf = std::unique_ptr<fftw_complex[], FftwFree>;

inline RealBuf alloc_real(std::size_t n) {
    return RealBuf(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
}
inline ComplexBuf alloc_complex(std::size_t n) {
    return ComplexBuf(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

struct PlanDestroy {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDestroy>;

} // namespace detail

/// The nonlocal coupling J[u](x) = -(K_s * u)(x), integrated over the box
/// only (zero extension outside, no periodic wraparound). Realized as a
/// zero-padded linear convolution via FFT, with a direct-sum route kept as an
/// independent cross-check.
///
/// Construction certifies the operator constants:
///   bound_L      padded-table l1 mass of K_s; a Schur bound valid for every
///                L^p -> L^p norm, p in [1, inf]
///   bound_Cinf   max |K_s| over the table; bounds L^1 -> L^inf
///   kappa        kappa(x) = integral over the box of K_s(x - y) dy
///
/// Immutable after construction; apply_J uses per-call scratch buffers and
/// may be invoked concurrently.
class NonlocalOperator {
public:
    NonlocalOperator(KernelSpec kernel, const DomainSpec& domain)
        : kernel_(std::move(kernel)), domain_(&domain) {
        build_tables();
        kappa_ = apply_J(Field(domain, 1.0));
        for (double& v : kappa_.values) v = -v;
        double kmin = 0.0;
        for (double v : kappa_.values) kmin = std::min(kmin, v);
        if (kmin < -1e-10 * std::max(1.0, bound_L_))
            throw std::invalid_argument("NonlocalOperator: kernel mass kappa(x) is negative");
    }

    NonlocalOperator(const NonlocalOperator&) = delete;
    NonlocalOperator& operator=(const NonlocalOperator&) = delete;
    NonlocalOperator(NonlocalOperator&&) = default;
    NonlocalOperator& operator=(NonlocalOperator&&) = default;

    const KernelSpec& kernel() const { return kernel_; }
    const DomainSpec& domain() const { return *domain_; }
    const Field& kappa() const { return kappa_; }
    double bound_L() const { return bound_L_; }
    double bound_Cinf() const { return bound_Cinf_; }
    double p_star() const { return 1.0; }

    /// Sampled kernel value at a cell-offset (o1, o2), o_a in [-(n_a-1), n_a-1].
    double kernel_sample(int o1, int o2 = 0) const {
        const int n1 = domain_->cell_counts[0], n2 = domain_->cell_counts[1];
        return ksamp_[(o1 + n1 - 1) * (2 * n2 - 1) + (o2 + n2 - 1)];
    }

    /// FFT route. Bit-reproducible for identical input.
    Field apply_J(const Field& u) const {
        if (!(*u.domain == *domain_))
            throw std::invalid_argument("apply_J: field domain does not match operator domain");
        const int n1 = domain_->cell_counts[0], n2 = domain_->cell_counts[1];
        const std::size_t nreal = static_cast<std::size_t>(p1_) * p2_;
        const std::size_t ncplx = static_cast<std::size_t>(p1_) * (p2_ / 2 + 1);
        auto in = detail::alloc_real(nreal);
        auto hat = detail::alloc_complex(ncplx);
        std::fill(in.get(), in.get() + nreal, 0.0);
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j)
                in[static_cast<std::size_t>(i) * p2_ + j] = u.values[u.domain->index(i, j)];
        fftw_execute_dft_r2c(fwd_.get(), in.get(), hat.get());
        for (std::size_t k = 0; k < ncplx; ++k) {
            const double re = hat[k][0], im = hat[k][1];
            const double tr = khat_[k][0], ti = khat_[k][1];
            hat[k][0] = re * tr - im * ti;
            hat[k][1] = re * ti + im * tr;
        }
        fftw_execute_dft_c2r(bwd_.get(), hat.get(), in.get());
        Field out(*domain_);
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j)
                out.values[out.domain->index(i, j)] = in[static_cast<std::size_t>(i) * p2_ + j];
        return out;
    }

    /// Direct double-sum quadrature route, O(N^2). Same kernel samples as the
    /// FFT route, so the two may differ only by summation arithmetic.
    Field apply_J_direct(const Field& u) const {
        if (!(*u.domain == *domain_))
            throw std::invalid_argument("apply_J_direct: field domain does not match operator domain");
        const int n1 = domain_->cell_counts[0], n2 = domain_->cell_counts[1];
        const double w = -domain_->cell_volume();
        Field out(*domain_);
        for (int i1 = 0; i1 < n1; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) {
                double acc = 0.0;
                for (int j1 = 0; j1 < n1; ++j1) {
                    const int base = (i1 - j1 + n1 - 1) * (2 * n2 - 1) + (i2 + n2 - 1);
                    const double* urow = &u.values[u.domain->index(j1, 0)];
                    for (int j2 = 0; j2 < n2; ++j2) acc += ksamp_[base - j2] * urow[j2];
                }
                out.values[out.domain->index(i1, i2)] = w * acc;
            }
        return out;
    }

private:
    void build_tables() {
        const int n1 = domain_->cell_counts[0], n2 = domain_->cell_counts[1];
        p1_ = (n1 > 1) ? 2 * n1 : 1;
        p2_ = (n2 > 1) ? 2 * n2 : 1;
        const double h1 = domain_->spacing(0);
        const double h2 = domain_->dimension == 2 ? domain_->spacing(1) : 0.0;

        ksamp_.assign(static_cast<std::size_t>(2 * n1 - 1) * (2 * n2 - 1), 0.0);
        double l1_mass = 0.0, peak = 0.0;
        for (int o1 = -(n1 - 1); o1 <= n1 - 1; ++o1)
            for (int o2 = -(n2 - 1); o2 <= n2 - 1; ++o2) {
                const double v = kernel_.evaluate(o1 * h1, o2 * h2, domain_->dimension);
                if (!std::isfinite(v))
                    throw std::invalid_argument("NonlocalOperator: kernel is not finite on the offset grid");
                ksamp_[(o1 + n1 - 1) * (2 * n2 - 1) + (o2 + n2 - 1)] = v;
                l1_mass += std::abs(v);
                peak = std::max(peak, std::abs(v));
            }
        bound_L_ = l1_mass * domain_->cell_volume();
        bound_Cinf_ = peak;

        const std::size_t nreal = static_cast<std::size_t>(p1_) * p2_;
        const std::size_t ncplx = static_cast<std::size_t>(p1_) * (p2_ / 2 + 1);
        auto kpad = detail::alloc_real(nreal);
        khat_ = detail::alloc_complex(ncplx);
        std::fill(kpad.get(), kpad.get() + nreal, 0.0);
        // Negative offsets wrap to the top of the padded box; the padded size
        // 2n exceeds the 2n-1 linear-convolution support, so no aliasing.
        const double scale = -domain_->cell_volume() / (static_cast<double>(p1_) * p2_);
        for (int o1 = -(n1 - 1); o1 <= n1 - 1; ++o1)
            for (int o2 = -(n2 - 1); o2 <= n2 - 1; ++o2) {
                const int i1 = (o1 + p1_) % p1_;
                const int i2 = (o2 + p2_) % p2_;
                kpad[static_cast<std::size_t>(i1) * p2_ + i2] =
                    scale * ksamp_[(o1 + n1 - 1) * (2 * n2 - 1) + (o2 + n2 - 1)];
            }

        auto scratch = detail::alloc_real(nreal);
        fwd_.reset(fftw_plan_dft_r2c_2d(p1_, p2_, scratch.get(), khat_.get(), FFTW_ESTIMATE));
        bwd_.reset(fftw_plan_dft_c2r_2d(p1_, p2_, khat_.get(), scratch.get(), FFTW_ESTIMATE));
        if (!fwd_ || !bwd_) throw std::runtime_error("NonlocalOperator: FFT planning failed");
        // Transform the (sign/quadrature/normalization-folded) kernel once.
        auto tmp = detail::alloc_complex(ncplx);
        fftw_execute_dft_r2c(fwd_.get(), kpad.get(), tmp.get());
        std::copy(&tmp[0][0], &tmp[0][0] + 2 * ncplx, &khat_[0][0]);
    }

    KernelSpec kernel_;
    const DomainSpec* domain_;
    std::vector<double> ksamp_;
    detail::ComplexBuf khat_;
    detail::PlanHandle fwd_, bwd_;
    int p1_ = 0, p2_ = 0;
    Field kappa_;
    double bound_L_ = 0.0;
    double bound_Cinf_ = 0.0;
};

/// Randomized certification of the operator norm bounds and self-adjointness.
struct BoundReport {
    double bound_L = 0.0;
    double bound_Cinf = 0.0;
    double p_star = 1.0;
    // max over samples of ||Ju||_p / ||u||_p, keyed as stored in `ps`
    std::array<double, 4> ps{1.0, 2.0, 4.0, kInf};
    std::array<double, 4> p_ratios{};
    double smoothing_ratio = 0.0;      // max ||Ju||_inf / ||u||_1
    double self_adjoint_residual = 0.0; // max |(Ju,v)-(u,Jv)| / (||u|| ||v||)
    double kernel_even_violation = 0.0;
    int samples = 0;
    std::uint64_t seed = 0;
    bool p_bound_pass = false;
    bool smoothing_pass = false;
    bool self_adjoint_pass = false;
    bool pass() const { return p_bound_pass && smoothing_pass && self_adjoint_pass; }
};

inline BoundReport certify_bounds(const NonlocalOperator& op, int sample_count,
                                  std::uint64_t seed = 2024) {
    if (sample_count < 1) throw std::invalid_argument("certify_bounds: sample_count must be >= 1");
    BoundReport rep;
    rep.bound_L = op.bound_L();
    rep.bound_Cinf = op.bound_Cinf();
    rep.samples = sample_count;
    rep.seed = seed;
    rep.kernel_even_violation = op.kernel().even_violation();

    std::mt19937_64 rng(seed);
    const DomainSpec& d = op.domain();
    auto random_field = [&] {
        Field f(d);
        for (double& v : f.values) v = uniform(rng, -1.0, 1.0);
        return f;
    };

    for (int s = 0; s < sample_count; ++s) {
        Field u = random_field();
        Field Ju = op.apply_J(u);
        for (std::size_t k = 0; k < rep.ps.size(); ++k) {
            const double nu = lp_norm(u, rep.ps[k]);
            if (nu > 0.0)
                rep.p_ratios[k] = std::max(rep.p_ratios[k], lp_norm(Ju, rep.ps[k]) / nu);
        }
        const double n1u = lp_norm(u, 1.0);
        if (n1u > 0.0)
            rep.smoothing_ratio = std::max(rep.smoothing_ratio, lp_norm(Ju, kInf) / n1u);

        Field v = random_field();
        Field Jv = op.apply_J(v);
        const double denom = l2_norm(u) * l2_norm(v);
        if (denom > 0.0)
            rep.self_adjoint_residual = std::max(
                rep.self_adjoint_residual, std::abs(inner(Ju, v) - inner(u, Jv)) / denom);
    }

    const double slack = 1e-9;
    rep.p_bound_pass = true;
    for (double r : rep.p_ratios) rep.p_bound_pass = rep.p_bound_pass && (r <= rep.bound_L + slack);
    rep.smoothing_pass = rep.smoothing_ratio <= rep.bound_Cinf + slack;
    rep.self_adjoint_pass = rep.self_adjoint_residual <= 1e-11;
    return rep;
}

} // namespace npf
