#include <catch2/catch_amalgamated.hpp>

#include "npf/longtime.hpp"

using namespace npf;

namespace {

struct Fixture {
    DomainSpec d;
    NonlocalOperator op;
    ModelSpec model;
    SchemeConfig cfg;

    Fixture(DomainSpec dom, KernelSpec kernel, Potential pot, double dt)
        : d(dom), op(std::move(kernel), d) {
        model.domain = &d;
        model.op = &op;
        model.potential = std::move(pot);
        model.lambda = build_lambda(d, op, model.potential);
        cfg.dt = dt;
    }
};

} // namespace

TEST_CASE("steady_state: trivial and symmetric fixed points", "[longtime]") {
    SECTION("J = 0, lambda = -1: only the origin solves") {
        Fixture fx(DomainSpec::line(32), KernelSpec::gaussian(0.0, 0.1),
                   Potential::double_well(), 0.01);
        fx.model.lambda = LambdaField::constant(fx.d, -1.0);
        Field init = Field::sample(fx.d, [](double x) { return 0.7 * std::sin(M_PI * x); });
        const auto res = steady_state(fx.model, init, 1e-10);
        CHECK(res.converged);
        CHECK(lp_norm(res.chi_inf, kInf) <= 1e-9);
    }

    SECTION("symmetric model from zero stays at zero") {
        Fixture fx(DomainSpec::line(32), KernelSpec::gaussian(0.5, 0.1),
                   Potential::logarithmic(), 0.01);
        const auto res = steady_state(fx.model, Field(fx.d), 1e-10);
        CHECK(res.converged);
        CHECK(res.residual <= 1e-10);
        CHECK(lp_norm(res.chi_inf, kInf) == 0.0);
    }
}

TEST_CASE("steady_state: residual certified with the direct operator", "[longtime]") {
    const auto d = DomainSpec::line(64);
    NonlocalOperator op(KernelSpec::gaussian(0.2, 0.1), d);
    ModelSpec model;
    model.domain = &d;
    model.op = &op;
    model.potential = Potential::double_well();
    model.lambda = LambdaField::constant(d, -0.1);
    Field init = Field::sample(d, [](double x) { return 0.4 * std::sin(M_PI * x); });
    const double tol = 1e-9;
    const auto res = steady_state(model, init, tol);
    REQUIRE(res.converged);
    CHECK(stationary_residual(model, res.chi_inf, /*direct=*/true) <= 2.0 * tol);
}

TEST_CASE("steady_state: iteration cap reports instead of throwing", "[longtime]") {
    Fixture fx(DomainSpec::line(32), KernelSpec::gaussian(0.5, 0.1),
               Potential::double_well(), 0.01);
    Field init = Field::sample(fx.d, [](double x) { return 0.5 * std::sin(M_PI * x); });
    const auto res = steady_state(fx.model, init, 1e-13, 100.0, 2);
    CHECK_FALSE(res.converged);
    CHECK(std::isfinite(res.residual));
}

TEST_CASE("omega_limit_check: rest point and a wrong candidate", "[longtime]") {
    const auto d = DomainSpec::line(32);
    NonlocalOperator op(KernelSpec::gaussian(0.0, 0.1), d);
    ModelSpec model;
    model.domain = &d;
    model.op = &op;
    model.potential = Potential::double_well();
    model.lambda = LambdaField::constant(d, 0.5); // bistable: chi = +-1 rest points
    SchemeConfig cfg;
    cfg.dt = 0.01;

    // trajectory already at a rest point passes against itself
    Field plus(d, 1.0);
    std::vector<State> still{{Field(d), plus, 0.0}, {Field(d), plus, 1.0}};
    CHECK(omega_limit_check(still, plus, 1e-12, 1e-12).pass);

    // run from the positive basin, compare against the wrong (negative) state
    State init{Field(d), Field(d, 0.6), 0.0};
    const auto traj = run_collect(init, model, cfg, 30.0);
    Field minus(d, -1.0);
    const auto bad = omega_limit_check(traj, minus, 1e-4, 1e-3);
    CHECK_FALSE(bad.pass);
    const auto good = omega_limit_check(traj, plus, 1e-4, 1e-2);
    CHECK(good.theta_norm <= 1e-4);
    CHECK(good.chi_distance <= 1e-2);
}

TEST_CASE("squeezing: equal data, full rank, and the scalar-decay regime", "[longtime]") {
    const auto d = DomainSpec::line(48);

    SECTION("identical initial pair: all distances vanish") {
        NonlocalOperator op(KernelSpec::gaussian(0.2, 0.1), d);
        ModelSpec model;
        model.domain = &d;
        model.op = &op;
        model.potential = Potential::double_well();
        model.lambda = LambdaField::constant(d, -1.0);
        SchemeConfig cfg;
        cfg.dt = 0.01;
        auto dec = eigendecompose(op, 48);
        State s{Field::sample(d, [](double x) { return std::sin(M_PI * x); }),
                Field(d, 0.3), 0.0};
        const auto rep = squeezing_experiment(model, cfg, s, s, 8, 1.0, dec);
        CHECK(rep.distance_initial == 0.0);
        CHECK(rep.distance_final == 0.0);
        CHECK(rep.d_T == 0.0);
        CHECK(rep.required_c == 0.0);
        CHECK(rep.holds_with_c(0.0));
    }

    SECTION("J = 0, lambda = -1: contraction beats 1/2 past log 2") {
        NonlocalOperator op(KernelSpec::gaussian(0.0, 0.1), d);
        ModelSpec model;
        model.domain = &d;
        model.op = &op;
        model.potential = Potential::zero();
        model.lambda = LambdaField::constant(d, -1.0);
        SchemeConfig cfg;
        cfg.dt = 0.005;
        auto dec = eigendecompose(op, 48); // null spectrum: rank 0 projector
        std::mt19937_64 rng(23);
        State s1{Field(d), Field(d), 0.0}, s2{Field(d), Field(d), 0.0};
        for (double& v : s1.theta.values) v = uniform(rng, -1.0, 1.0);
        for (double& v : s1.chi.values) v = uniform(rng, -1.0, 1.0);
        for (double& v : s2.theta.values) v = uniform(rng, -1.0, 1.0);
        for (double& v : s2.chi.values) v = uniform(rng, -1.0, 1.0);
        const double t_star = 1.0; // > log 2
        const auto rep = squeezing_experiment(model, cfg, s1, s2, 0, t_star, dec);
        CHECK(rep.distance_final <= 0.5 * rep.distance_initial);
        // with a null projector d_T reduces to the temperature history
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < rep.theta_distance.size(); ++k)
            acc += 0.5 * cfg.dt *
                   (rep.theta_distance[k] * rep.theta_distance[k] +
                    rep.theta_distance[k + 1] * rep.theta_distance[k + 1]);
        CHECK_THAT(rep.d_T, Catch::Matchers::WithinRel(std::sqrt(acc), 1e-12));
    }

    SECTION("full-rank projection dominates the difference history") {
        NonlocalOperator op(KernelSpec::gaussian(0.3, 0.1), d);
        ModelSpec model;
        model.domain = &d;
        model.op = &op;
        model.potential = Potential::double_well();
        model.lambda = LambdaField::constant(d, -1.0);
        SchemeConfig cfg;
        cfg.dt = 0.01;
        auto dec = eigendecompose(op, 48);
        std::mt19937_64 rng(29);
        State s1{Field(d), Field(d), 0.0}, s2{Field(d), Field(d), 0.0};
        for (double& v : s1.chi.values) v = uniform(rng, -0.5, 0.5);
        for (double& v : s2.chi.values) v = uniform(rng, -0.5, 0.5);
        const auto full = squeezing_experiment(model, cfg, s1, s2, 48, 1.0, dec);
        const auto none = squeezing_experiment(model, cfg, s1, s2, 0, 1.0, dec);
        CHECK(full.d_T >= none.d_T);
        CHECK(std::isfinite(full.required_c));
        CHECK(full.holds_with_c(full.required_c));
    }
}

TEST_CASE("delta continuation: Cauchy tail and energy ordering", "[longtime]") {
    const auto d = DomainSpec::line(64);
    NonlocalOperator op(KernelSpec::gaussian(0.5, 0.1), d);
    ModelSpec model;
    model.domain = &d;
    model.op = &op;
    model.potential = Potential::logarithmic();
    model.lambda = build_lambda(d, op, model.potential, -0.5);
    SchemeConfig cfg;
    cfg.dt = 0.01;
    State init{Field::sample(d, [](double x) { return 0.3 * std::sin(2 * M_PI * x); }),
               Field::sample(d, [](double x) { return 0.5 * std::sin(M_PI * x); }), 0.0};

    SECTION("single-member schedule reports only the reference difference") {
        const auto rep = delta_continuation(model, init, {0.1}, cfg, 1.0, 1.0, 0.5);
        CHECK(rep.diff_to_reference.size() == 1);
        CHECK(rep.consecutive_diff.empty());
    }

    SECTION("full schedule: monotone approach, uniform sups, energy ordering") {
        const auto rep =
            delta_continuation(model, init, {0.2, 0.1, 0.05, 0.025}, cfg, 2.0, 1.0, 1.0);
        REQUIRE(rep.diff_to_reference.size() == 4);
        CHECK(rep.diffs_monotone);
        for (std::size_t k = 0; k + 1 < 4; ++k)
            CHECK(rep.diff_to_reference[k + 1] < rep.diff_to_reference[k]);
        CHECK(rep.energy_ordering_pass);
        for (double e : rep.energy_initial) CHECK(e <= rep.reference_energy_initial + 1e-12);
        // family-wide sup bound: no blow-up as delta shrinks
        double worst = 0.0;
        for (std::size_t k = 0; k < 4; ++k)
            worst = std::max(worst, std::max(rep.sup_theta[k], rep.sup_chi[k]));
        CHECK(worst <= 2.0 * std::max({rep.reference_sup_theta, rep.reference_sup_chi, 0.5}));
    }
}
