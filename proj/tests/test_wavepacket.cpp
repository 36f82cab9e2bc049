#include "catch_amalgamated.hpp"

#include "gbo/wavepacket.hpp"

#include <random>
#include <sstream>

using namespace gbo;

namespace {

CosineField single(double amp, double k, double omega = 0.5, double phase = 0.3) {
    CosineField b;
    b.terms.push_back({amp, k, omega, phase});
    return b;
}

double jac_norm(const FlowSample& s) {
    return std::sqrt(s.xx * s.xx + s.xix * s.xix + s.xxi * s.xxi + s.xixi * s.xixi);
}

struct Case {
    double m, lambda;
};

const Case cases[] = {{2.0, 16}, {2.0, 128}, {2.5, 16}, {2.5, 64}, {3.0, 16}, {3.0, 128}};

} // namespace

TEST_CASE("cosine field derivatives", "[transport]") {
    CosineField b = single(0.7, 1.3, 0.4, 0.2);
    const double t = 0.6, x = 1.1, arg = 1.3 * x + 0.4 * t + 0.2;
    CHECK(b.eval(t, x) == Catch::Approx(0.7 * std::cos(arg)));
    CHECK(b.eval(t, x, 1) == Catch::Approx(-0.7 * 1.3 * std::sin(arg)));
    CHECK(b.eval(t, x, 2) == Catch::Approx(-0.7 * 1.69 * std::cos(arg)));
    CHECK(b.eval(t, x, 1, 1) == Catch::Approx(-0.7 * 1.3 * 0.4 * std::cos(arg)));
    CHECK(b.eval(t, x, 0, 1) == Catch::Approx(-0.7 * 0.4 * std::sin(arg)));
}

TEST_CASE("admissibility of sampled transport", "[transport]") {
    std::mt19937_64 rng(11);
    for (const auto& c : cases) {
        for (int trial = 0; trial < 5; ++trial) {
            auto b = random_transport(c.lambda, c.m, 0, rng);
            auto rep = check_admissible(b, c.lambda, c.m);
            CHECK(rep.admissible());
            CHECK(rep.linf_constant > 0);
        }
    }
    // a coefficient oscillating faster than lambda^delta is rejected for m = 3
    auto bad = single(0.4, 4.0);
    CHECK_FALSE(check_admissible(bad, 64, 3.0).admissible());
    CHECK_FALSE(check_admissible(single(2.0, 0.1), 16, 2.0).admissible());
    CHECK(check_admissible(CosineField{}, 16, 2.0).admissible());
}

TEST_CASE("rescaled symbol scales", "[symbol]") {
    for (const auto& c : cases) {
        const double tau = std::pow(c.lambda, -c.m / 2);
        RescaledSymbol s({}, c.lambda, c.m, tau);
        const double delta = (2 - c.m) / 2;
        CHECK(s.mu() == Catch::Approx(std::sqrt(tau) * std::pow(c.lambda, -delta)));
        CHECK(s.frequency() == Catch::Approx(s.mu() * c.lambda));
        CHECK(s.a(0.1, 0.2, 3.0) == Catch::Approx(s.dispersion() * std::pow(3.0, c.m)));
    }
    CHECK_THROWS_AS(RescaledSymbol({}, 16, 2, 2.0), InvalidArgument);
    CHECK_THROWS_AS(RescaledSymbol({}, 16, 2, 1e-4), InvalidArgument);
}

TEST_CASE("flow without transport is a straight line", "[flow]") {
    for (const auto& c : cases) {
        const double tau = std::pow(c.lambda, -c.m / 2);
        RescaledSymbol s({}, c.lambda, c.m, tau);
        const double xi0 = s.frequency(), T = 0.1 / tau;
        auto path = hamilton_flow({0.4, xi0}, s, T);
        const auto& e = path.back();
        const double speed = s.dispersion() * c.m * std::pow(xi0, c.m - 1);
        CHECK(e.xi == xi0);
        CHECK(e.x == Catch::Approx(0.4 + T * speed).epsilon(1e-12));
        CHECK(e.xx == 1.0);
        CHECK(e.xix == 0.0);
        CHECK(e.xxi == Catch::Approx(T * s.dispersion() * c.m * (c.m - 1) * std::pow(xi0, c.m - 2)));
        // negative frequencies drift the other way
        auto back = hamilton_flow({0.4, -xi0}, s, T);
        CHECK(back.back().x == Catch::Approx(0.4 - T * speed).epsilon(1e-12));
    }
}

TEST_CASE("flow under admissible transport", "[flow]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u01(0, 1);
    int samples = 0;
    for (const auto& c : cases) {
        for (int trial = 0; trial < 9; ++trial, ++samples) {
            const double tau = std::pow(c.lambda, -c.m * u01(rng));
            auto b = random_transport(c.lambda, c.m, 0, rng);
            REQUIRE(check_admissible(b, c.lambda, c.m).admissible());
            RescaledSymbol s(b, c.lambda, c.m, tau);
            const PhasePoint p0{5 * u01(rng), s.frequency() * (0.8 + 0.4 * u01(rng))};
            const double T = 0.1 / tau;
            auto path = flow_jacobian(p0, s, T);
            const double target = s.dispersion() * c.m * (c.m - 1) * std::pow(p0.xi, c.m - 2);
            for (const auto& p : path) {
                CHECK(std::abs(p.xx - 1) <= 0.5);
                CHECK(p.xi / p0.xi >= 0.5);
                CHECK(p.xi / p0.xi <= 2.0);
                if (p.t > 0) {
                    const double ratio = p.xxi / (p.t * target);
                    CHECK(ratio >= 0.5);
                    CHECK(ratio <= 2.0);
                }
            }
        }
    }
    CHECK(samples >= 50);
}

TEST_CASE("flow reversibility", "[flow]") {
    std::mt19937_64 rng(8);
    for (const auto& c : cases) {
        const double tau = std::pow(c.lambda, -c.m / 2);
        auto b = random_transport(c.lambda, c.m, 0, rng);
        // time-independent coefficient so the backward clock needs no shift
        for (auto& term : b.terms) term.omega = 0;
        RescaledSymbol s(b, c.lambda, c.m, tau);
        const PhasePoint p0{1.2, s.frequency()};
        const double T = 0.1 / tau;
        const auto e = hamilton_flow(p0, s, T).back();
        const auto r = hamilton_flow({e.x, e.xi}, s, -T).back();
        CHECK(std::abs(r.x - p0.x) <= 1e-8 * (1 + std::abs(e.x)));
        CHECK(std::abs(r.xi - p0.xi) <= 1e-8 * p0.xi);
    }
}

TEST_CASE("variational Jacobian matches finite differences", "[flow]") {
    std::mt19937_64 rng(2);
    for (const auto& c : cases) {
        const double tau = std::pow(c.lambda, -c.m / 3);
        RescaledSymbol s(random_transport(c.lambda, c.m, 0, rng), c.lambda, c.m, tau);
        const PhasePoint p0{0.7, s.frequency()};
        const double T = 0.1 / tau;
        const auto e = flow_jacobian(p0, s, T).back();
        const auto fd = fd_jacobian(p0, s, T);
        const double scale = jac_norm(e);
        CHECK(std::abs(fd.xx - e.xx) <= 1e-4 * scale);
        CHECK(std::abs(fd.xix - e.xix) <= 1e-4 * scale);
        CHECK(std::abs(fd.xxi - e.xxi) <= 1e-4 * scale);
        CHECK(std::abs(fd.xixi - e.xixi) <= 1e-4 * scale);
        // determinant one: the flow is symplectic
        CHECK(e.xx * e.xixi - e.xxi * e.xix == Catch::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("flow errors", "[flow]") {
    RescaledSymbol s({}, 16, 2, 1.0);
    CHECK_THROWS_AS(hamilton_flow({0, 100}, s, 1.0), NumericalError);
    CHECK_THROWS_AS(hamilton_flow({0, 16}, s, 0.0), InvalidArgument);
    FlowOptions coarse;
    coarse.dt = 0.01;
    CHECK_THROWS_AS(hamilton_flow({0, 16}, s, 1.0, coarse), InvalidArgument);
    // a strong compressive coefficient drives the frequency out of the window
    RescaledSymbol strong(single(200.0, 0.01, 0, pi / 2), 16, 2, 1.0);
    CHECK_THROWS_AS(hamilton_flow({0, 16}, strong, 2.0), NumericalError);
}

TEST_CASE("eikonal phase without transport", "[eikonal]") {
    for (const auto& c : cases) {
        const double tau = std::pow(c.lambda, -c.m / 2);
        RescaledSymbol s({}, c.lambda, c.m, tau);
        const double xi0 = s.frequency(), x0 = 0.5, T = 0.1 / tau;
        std::vector<double> launch;
        for (int i = 0; i < 41; ++i) launch.push_back(-2 + 0.1 * i);
        auto tabs = eikonal_solve(x0, xi0, s, launch, {T / 2, T});
        for (const auto& tab : tabs) {
            for (std::size_t i = 0; i < tab.y.size(); ++i) {
                const double exact = xi0 * (tab.y[i] - x0) - tab.t * s.dispersion() * std::pow(xi0, c.m);
                CHECK(std::abs(tab.psi[i] - exact) <= 1e-6 * (1 + std::abs(exact)));
                CHECK(tab.dpsi[i] == Catch::Approx(xi0));
            }
            const double mid = 0.5 * (tab.lo() + tab.hi());
            const auto v = tab.eval(mid);
            const double exact = xi0 * (mid - x0) - tab.t * s.dispersion() * std::pow(xi0, c.m);
            CHECK(std::abs(v[0] - exact) <= 1e-6 * (1 + std::abs(exact)));
        }
    }
}

TEST_CASE("eikonal phase under admissible transport", "[eikonal]") {
    std::mt19937_64 rng(21);
    for (const auto& c : cases) {
        const double tau = std::pow(c.lambda, -c.m / 2);
        RescaledSymbol s(random_transport(c.lambda, c.m, 0, rng), c.lambda, c.m, tau);
        const double xi0 = s.frequency(), x0 = 0.0, T = 0.1 / tau;
        std::vector<double> launch;
        for (int i = 0; i < 201; ++i) launch.push_back(-3 + 0.03 * i);
        // the table shifts by about 2 h a_xi between the outer times; keep that below the launch width
        const double h = std::min(1e-3 * T, 0.5 / std::abs(s.a_xi(0, x0, xi0)));
        auto tabs = eikonal_solve(x0, xi0, s, launch, {T / 2 - h, T / 2, T / 2 + h, T}, T / 4000);
        const auto& tab = tabs[1];

        // d_y psi along the Hamilton flow from (x, xi0) is xi^t
        const double y0 = 0.4;
        const auto e = hamilton_flow({y0, xi0}, s, T / 2, {T / 4000, 1, true}).back();
        CHECK(std::abs(tab.eval(e.x)[1] - e.xi) <= 1e-4 * std::abs(e.xi));

        // the eikonal equation itself at interior points
        for (double q : {0.25, 0.5, 0.75}) {
            const double lo = std::max(tabs[0].lo(), tabs[2].lo()), hi = std::min(tabs[0].hi(), tabs[2].hi());
            const double y = lo + q * (hi - lo);
            const double dt_psi = (tabs[2].eval(y)[0] - tabs[0].eval(y)[0]) / (2 * h);
            const double a = s.a(T / 2, y, tab.eval(y)[1]);
            CHECK(std::abs(dt_psi + a) <= 1e-3 * std::abs(a));
        }

        // bounded second derivative, consistent with the tabulated slopes
        for (const auto& t : tabs) {
            for (std::size_t i = 1; i + 1 < t.y.size(); ++i) {
                CHECK(std::abs(t.d2psi[i]) <= 1.0);
                const double fd = (t.dpsi[i + 1] - t.dpsi[i - 1]) / (t.y[i + 1] - t.y[i - 1]);
                CHECK(std::abs(fd - t.d2psi[i]) <= 1e-2 * (1 + std::abs(t.d2psi[i])));
            }
        }
    }
}

TEST_CASE("eikonal rejects crossing characteristics", "[eikonal]") {
    // a well of b holding the packets in place focuses neighbouring characteristics
    RescaledSymbol s(single(32.0, 0.05, 0, pi), 16, 2, 1.0);
    std::vector<double> launch;
    for (int i = 0; i < 81; ++i) launch.push_back(-40 + i);
    CHECK_THROWS_AS(eikonal_solve(0, 16, s, launch, {2.0}), NumericalError);
    CHECK_THROWS_AS(eikonal_solve(0, 16, s, {0, 1, 2}, {0.5}), InvalidArgument);
    CHECK_THROWS_AS(eikonal_solve(0, 16, s, launch, {0.0}), InvalidArgument);
}

TEST_CASE("FBI transform isometry and inversion", "[fbi]") {
    for (int K : {1, 2}) {
        Grid g = make_grid(K, 256 << (K - 1));
        Field f = Field::sample(g, [](double x) {
            return std::exp(-0.5 * (x - 6) * (x - 6)) * cplx(std::cos(5 * x), std::sin(3 * x)) + 0.3 * std::sin(2 * x);
        });
        auto F = fbi_transform(f);
        CHECK(std::abs(F.l2_norm() / l2_norm(f) - 1) <= 1e-6);
        auto back = fbi_inverse(F);
        CHECK(l2_norm(back - f) <= 1e-6 * l2_norm(f));
    }
}

TEST_CASE("FBI of a pure mode is a Gaussian ridge", "[fbi]") {
    Grid g = make_grid(1, 256);
    const double xi0 = 7.0;
    Field f = Field::sample(g, [&](double x) { return std::exp(cplx(0, xi0 * x)); });
    auto F = fbi_transform(f);
    double worst = 0;
    for (int j = 0; j < g.size(); ++j) {
        const double xi = g.freq(j);
        const double expect = fbi_constant * std::sqrt(2 * pi) * std::exp(-0.5 * (xi - xi0) * (xi - xi0));
        for (int n = 0; n < g.size(); n += 17) worst = std::max(worst, std::abs(std::abs(F.at(j, n)) - expect));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("FBI adjoint and linearity", "[fbi]") {
    Grid g = make_grid(1, 256);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    auto random_field = [&] {
        std::vector<cplx> c(g.size());
        for (int j = 0; j < g.size(); ++j)
            if (std::abs(g.freq(j)) < 20) c[j] = cplx(nd(rng), nd(rng)) / (1.0 + std::abs(g.freq(j)));
        return Field::from_spectrum(g, c, false);
    };
    Field f = random_field(), h = random_field();
    auto Tf = fbi_transform(f), Th = fbi_transform(h);
    // <Tf, Th> = <f, T* T h>
    cplx lhs = 0;
    for (int j = 0; j < g.size(); ++j)
        for (int n = 0; n < g.size(); ++n) lhs += std::conj(Tf.at(j, n)) * Th.at(j, n) * Tf.cell();
    const cplx rhs = inner(fbi_inverse(Th), f);
    CHECK(std::abs(lhs - rhs) <= 1e-8 * l2_norm(f) * l2_norm(h));

    auto Tsum = fbi_transform(cplx(2, -1) * f + h);
    double worst = 0;
    for (int j = 0; j < g.size(); ++j)
        for (int n = 0; n < g.size(); ++n)
            worst = std::max(worst, std::abs(Tsum.at(j, n) - (cplx(2, -1) * Tf.at(j, n) + Th.at(j, n))));
    CHECK(worst <= 1e-12);

    // phase-space grid too coarse in frequency, and energy at the Nyquist edge
    CHECK_THROWS_AS(fbi_transform(Field::sample(make_grid(0, 256), [](double x) { return std::cos(x); })),
                    InvalidArgument);
    CHECK_THROWS_AS(fbi_transform(Field::sample(make_grid(1, 64), [](double x) { return std::cos(15 * x); })),
                    InvalidArgument);

    std::ostringstream os;
    write_phase_space_csv(fbi_transform(Field::sample(make_grid(1, 64), [](double x) { return std::cos(x); })), os);
    CHECK(os.str().rfind("x,xi,density\n", 0) == 0);
}

TEST_CASE("coherent state is a normalized phase-space bump", "[fbi]") {
    Grid g = make_grid(3, 512);
    Field u = coherent_state(g, 20.0, 8.0);
    CHECK(l2_norm(u) == Catch::Approx(1.0 / (std::sqrt(2.0) * std::pow(pi, 0.75)) * std::pow(pi, 0.25)).epsilon(1e-8));
    auto rep = packet_coherence_check(RescaledSymbol({}, 16, 2, 0.25), g, {20.0, 8.0}, 0.0, 5.0);
    CHECK(rep.fraction >= 0.99);
    CHECK(std::abs(rep.centroid.x - 20.0) <= 1e-6);
    CHECK(std::abs(rep.centroid.xi - 8.0) <= 1e-6);
}

TEST_CASE("packet coherence along the flow", "[coherence]") {
    Grid g = make_grid(3, 512);
    const double lambda = 16, m = 2, tau = 0.25;
    RescaledSymbol free({}, lambda, m, tau);
    const PhasePoint p0{10.0, free.frequency()};
    const double T = 0.1 / tau;
    auto rep = packet_coherence_check(free, g, p0, T, 5.0);
    CHECK(rep.predicted.x == Catch::Approx(p0.x - T * free.dispersion() * m * p0.xi).epsilon(1e-12));
    CHECK(rep.fraction >= 0.9);
    CHECK(std::abs(torus_offset(rep.centroid.x, rep.predicted.x, g.period())) <= 0.1);
    CHECK(rep.norm_drift <= 1e-8);

    // tau = 1/4 keeps the phase-space shear m (m - 1) t below the radius
    Grid wide = make_grid(3, 1024);
    std::mt19937_64 rng(3);
    for (double mm : {2.0, 2.5, 3.0}) {
        const double t = 0.25;
        RescaledSymbol probe({}, lambda, mm, t);
        auto b = random_transport(lambda, mm, wide.dk() / probe.mu(), rng);
        REQUIRE(check_admissible(b, lambda, mm).admissible());
        RescaledSymbol s(b, lambda, mm, t);
        const PhasePoint q{40.0, s.frequency()};
        auto r = packet_coherence_check(s, wide, q, 0.1 / t, 10.0);
        CHECK(r.fraction >= 0.8);
        CHECK(r.norm_drift <= 1e-8);
    }
}

TEST_CASE("dispersive decay without transport", "[decay]") {
    DecayOptions o;
    o.with_b = false;
    auto ex = dispersive_decay_experiment(2.0, {16, 32}, o);
    for (const auto& r : ex.runs) {
        CHECK(std::abs(r.slope + 0.5) <= 0.05);
        CHECK(r.wrap <= 1e-3);
        CHECK(r.lateral <= 1.0);
    }
    CHECK(std::abs(ex.lambda_exponent - ex.delta()) <= 0.15);
}

TEST_CASE("dispersive decay with admissible transport", "[decay]") {
    DecayOptions o;
    auto ex = dispersive_decay_experiment(2.5, {16, 32}, o);
    for (const auto& r : ex.runs) {
        CHECK(r.admissible);
        CHECK(std::abs(r.slope + 0.5) <= 0.1);
        CHECK(r.wrap <= 1e-3);
    }
    CHECK(std::abs(ex.lambda_exponent - ex.delta()) <= 0.15);
    std::ostringstream os;
    write_decay_csv(ex, os);
    CHECK(os.str().rfind("m,lambda,slope", 0) == 0);
    CHECK_THROWS_AS(dispersive_decay_run(16, 1.5, o), InvalidArgument);
}
