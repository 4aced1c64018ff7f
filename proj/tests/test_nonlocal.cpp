#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "npf/nonlocal.hpp"

using namespace npf;

namespace {

Field random_field(const DomainSpec& d, std::mt19937_64& rng) {
    Field f(d);
    for (double& v : f.values) v = uniform(rng, -1.0, 1.0);
    return f;
}

double sup_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

KernelSpec lopsided_table() {
    // deliberately uneven profile: violates K(x) = K(-x)
    return KernelSpec::tabulated(
        {{-0.5, 0.1}, {-0.2, 0.4}, {0.0, 1.0}, {0.2, 0.9}, {0.5, 0.3}}, 1.0, 1.0, false);
}

} // namespace

TEST_CASE("apply_J: zero field, unit field against the mass oracle", "[nonlocal]") {
    const auto d = DomainSpec::line(64);
    NonlocalOperator op(KernelSpec::gaussian(1.0, 0.1), d);

    CHECK(l2_norm(op.apply_J(Field(d, 0.0))) == 0.0);

    // J[1] = -kappa, with kappa recomputed here by direct quadrature
    const Field J1 = op.apply_J(Field(d, 1.0));
    const double h = d.cell_volume();
    for (int i = 0; i < d.cells(); ++i) {
        double kap = 0.0;
        for (int j = 0; j < d.cells(); ++j)
            kap += op.kernel().evaluate((i - j) * h, 0.0, 1) * h;
        CHECK_THAT(J1.values[i], Catch::Matchers::WithinAbs(-kap, 1e-10));
        CHECK_THAT(op.kappa().values[i], Catch::Matchers::WithinAbs(kap, 1e-10));
    }
}

TEST_CASE("FFT route equals the direct double sum", "[nonlocal]") {
    struct Case { DomainSpec d; KernelSpec k; };
    const Case cases[] = {
        {DomainSpec::line(64), KernelSpec::gaussian(1.0, 0.1)},
        {DomainSpec::line(193), KernelSpec::bump(2.0, 0.15)}, // odd, non power of two
        {DomainSpec::line(256), KernelSpec::gaussian(0.7, 0.05)},
        {DomainSpec::box(32, 48, 1.5, 1.0 / 1.5), KernelSpec::gaussian(1.0, 0.2)},
        {DomainSpec::line(128), lopsided_table()},
    };
    for (const auto& c : cases) {
        NonlocalOperator op(c.k, c.d);
        std::mt19937_64 rng(99);
        for (int s = 0; s < 5; ++s) {
            const Field u = random_field(c.d, rng);
            const Field a = op.apply_J(u);
            const Field b = op.apply_J_direct(u);
            CHECK(sup_diff(a, b) <= 1e-11 * std::max(1.0, lp_norm(b, kInf)));
        }
    }
}

TEST_CASE("direct route: delta-like input picks out a kernel column", "[nonlocal]") {
    const auto d = DomainSpec::line(48);
    NonlocalOperator op(KernelSpec::gaussian(1.3, 0.12), d);
    const int j0 = 17;
    Field u(d);
    u.values[j0] = 1.0 / d.cell_volume();
    const Field col = op.apply_J_direct(u);
    for (int i = 0; i < d.cells(); ++i)
        CHECK_THAT(col.values[i],
                   Catch::Matchers::WithinAbs(-op.kernel_sample(i - j0), 1e-12));
}

TEST_CASE("self-adjointness for even kernels", "[nonlocal]") {
    for (const auto& k : {KernelSpec::gaussian(1.0, 0.1), KernelSpec::bump(1.0, 0.2)}) {
        const auto d = DomainSpec::line(96);
        NonlocalOperator op(k, d);
        std::mt19937_64 rng(7);
        for (int s = 0; s < 20; ++s) {
            const Field u = random_field(d, rng), v = random_field(d, rng);
            const double r = std::abs(inner(op.apply_J_direct(u), v) -
                                      inner(u, op.apply_J_direct(v)));
            CHECK(r <= 1e-11 * l2_norm(u) * l2_norm(v));
        }
    }
}

TEST_CASE("certify_bounds: zero amplitude passes trivially", "[nonlocal]") {
    const auto d = DomainSpec::line(32);
    NonlocalOperator op(KernelSpec::gaussian(0.0, 0.1), d);
    const auto rep = certify_bounds(op, 10);
    CHECK(rep.pass());
    CHECK(rep.bound_L == 0.0);
    for (double r : rep.p_ratios) CHECK(r == 0.0);
}

TEST_CASE("certify_bounds: gaussian kernel, one L for every p", "[nonlocal]") {
    const auto d = DomainSpec::line(128);
    NonlocalOperator op(KernelSpec::gaussian(1.0, 0.1), d);
    const auto rep = certify_bounds(op, 200);
    CHECK(rep.pass());
    CHECK(rep.p_bound_pass);
    CHECK(rep.smoothing_pass);
    CHECK(rep.self_adjoint_pass);

    // L is the padded-table l1 kernel mass; recompute independently
    double mass = 0.0;
    const double h = d.cell_volume();
    for (int o = -(d.cells() - 1); o <= d.cells() - 1; ++o)
        mass += std::abs(op.kernel().evaluate(o * h, 0.0, 1)) * h;
    CHECK_THAT(rep.bound_L, Catch::Matchers::WithinRel(mass, 1e-12));
    for (double r : rep.p_ratios) CHECK(r <= rep.bound_L + 1e-9);
}

TEST_CASE("certify_bounds: bump kernel passes", "[nonlocal]") {
    const auto d = DomainSpec::box(24, 24);
    NonlocalOperator op(KernelSpec::bump(1.5, 0.25), d);
    const auto rep = certify_bounds(op, 60);
    CHECK(rep.pass());
}

TEST_CASE("certify_bounds: lopsided table kernel fails self-adjointness", "[nonlocal]") {
    const auto d = DomainSpec::line(64);
    NonlocalOperator op(lopsided_table(), d);
    const auto rep = certify_bounds(op, 50);
    CHECK_FALSE(rep.self_adjoint_pass);
    CHECK(rep.self_adjoint_residual > 1e-11);
    CHECK(rep.kernel_even_violation > 1e-12);
    CHECK_FALSE(rep.pass());
    CHECK(KernelSpec::gaussian(1.0, 0.1).is_even());
    CHECK_FALSE(lopsided_table().is_even());
}

TEST_CASE("apply_J is bit-reproducible across calls", "[nonlocal]") {
    const auto d = DomainSpec::box(24, 24);
    NonlocalOperator op(KernelSpec::gaussian(0.8, 0.15), d);
    std::mt19937_64 rng(12);
    const Field u = random_field(d, rng);
    const Field a = op.apply_J(u), b = op.apply_J(u);
    CHECK(std::memcmp(a.values.data(), b.values.data(), sizeof(double) * a.values.size()) == 0);
}

TEST_CASE("kernel table round-trips through CSV", "[nonlocal]") {
    const auto k = lopsided_table();
    const std::string path = "/tmp/npf_test_kernel_table.csv";
    save_kernel_table(k, path);
    const auto k2 = load_kernel_table(path, k.amplitude, k.sigma, k.table_radial);
    REQUIRE(k2.table.size() == k.table.size());
    for (std::size_t i = 0; i < k.table.size(); ++i) {
        CHECK(k2.table[i].first == k.table[i].first);
        CHECK(k2.table[i].second == k.table[i].second);
    }
}

TEST_CASE("negative kernels are rejected at construction", "[nonlocal]") {
    const auto d = DomainSpec::line(32);
    const auto k = KernelSpec::tabulated({{-0.5, -1.0}, {0.0, -2.0}, {0.5, -1.0}});
    CHECK_THROWS_AS(NonlocalOperator(k, d), std::invalid_argument);
}
