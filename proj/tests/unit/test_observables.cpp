#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bohm/observables.hpp"
#include "bohm/sampling.hpp"
#include "fixtures.hpp"

using namespace bohm;

namespace {

Superposition random_superposition(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> q(0, 6), count(1, 5);
    std::normal_distribution<double> c(0.0, 1.0);
    std::vector<Term> terms;
    const int k = count(rng);
    while (static_cast<int>(terms.size()) < k) {
        const Mode m{q(rng), q(rng)};
        bool dup = false;
        for (const auto& t : terms) dup |= t.mode == m;
        if (!dup) terms.push_back({cplx(c(rng), c(rng)), m});
    }
    return Superposition(terms);
}

}  // namespace

TEST_CASE("closed-form energies of the three configurations") {
    const auto cfg = fx::anisotropic_oscillator();
    CHECK(sqm_energy(cfg, fx::single_node()) == doctest::Approx(1.595).epsilon(5e-4 / 1.595));
    CHECK(sqm_energy(cfg, fx::case_a()) == doctest::Approx(5.7406).epsilon(5e-4 / 5.7406));
    CHECK(sqm_energy(cfg, fx::case_b()) == doctest::Approx(11.248).epsilon(5e-4 / 11.248));
    // Weighted mean of the mode energies with weights 1, 1, 1/2.
    const double e = (mode_energy(cfg, {0, 0}) + mode_energy(cfg, {1, 0}) + 0.5 * mode_energy(cfg, {1, 1})) / 2.5;
    CHECK(sqm_energy(cfg, fx::single_node()) == doctest::Approx(e).epsilon(1e-15));
}

TEST_CASE("selection rules") {
    SUBCASE("single node") {
        const auto r = selection_rules(fx::single_node());
        CHECK_FALSE(r.px.identically_zero);
        CHECK_FALSE(r.py.identically_zero);
        CHECK_FALSE(r.L.identically_zero);
        CHECK_FALSE(r.x.identically_zero);
        CHECK_FALSE(r.y.identically_zero);
        CHECK(r.px.pairs == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}});
        CHECK(r.py.pairs == std::vector<std::pair<std::size_t, std::size_t>>{{1, 2}});
        CHECK(r.L.pairs == std::vector<std::pair<std::size_t, std::size_t>>{{0, 2}});
    }
    SUBCASE("(0,2), (3,4), (5,7)") {
        const auto r = selection_rules(fx::case_a());
        for (const auto* e : {&r.px, &r.py, &r.L, &r.x, &r.y}) CHECK(e->identically_zero);
    }
    SUBCASE("(4,6), (5,6), (7,8)") {
        const auto r = selection_rules(fx::three_terms({4, 6}, {5, 6}, {7, 8}));
        CHECK_FALSE(r.px.identically_zero);
        CHECK(r.py.identically_zero);
    }
}

TEST_CASE("single-node closed forms") {
    const auto cfg = fx::anisotropic_oscillator();
    const auto sup = fx::single_node();
    const double wx = cfg.omega_x, wy = cfg.omega_y, a = 1.0, b = 1.0, c = fx::kRoot2Half, s = 2.5;
    const auto e0 = sqm_expectations_closed(cfg, sup, 0.0);
    CHECK(e0.px == 0.0);
    CHECK(e0.py == 0.0);
    CHECK(e0.L == 0.0);
    CHECK(e0.x == doctest::Approx(std::sqrt(2.0) / 2.5).epsilon(1e-14));
    CHECK(e0.x == doctest::Approx(0.566).epsilon(1e-3));
    for (double t : {0.3, 1.7, 4.0, 11.2}) {
        const auto e = sqm_expectations_closed(cfg, sup, t);
        CHECK(e.px == doctest::Approx(-std::sqrt(2 * wx) * a * b * std::sin(wx * t) / s).epsilon(1e-12));
        CHECK(e.py == doctest::Approx(-std::sqrt(2 * wy) * b * c * std::sin(wy * t) / s).epsilon(1e-12));
        CHECK(e.x == doctest::Approx(std::sqrt(2 / wx) * a * b * std::cos(wx * t) / s).epsilon(1e-12));
        CHECK(e.L == doctest::Approx(a * c * (wx - wy) * std::sin((wx + wy) * t) / (std::sqrt(wx * wy) * s)).epsilon(1e-12));
        CHECK(e.E == doctest::Approx(1.5949747468305833).epsilon(1e-12));
    }
}

TEST_CASE("single-node <y> follows the b c pair") {
    // The y-dipole couples Psi_10 and Psi_11, so its amplitude carries b c.
    const auto cfg = fx::anisotropic_oscillator();
    const double wy = cfg.omega_y, b = 1.0, c = fx::kRoot2Half;
    for (double t : {0.0, 2.2, 7.5}) {
        const auto e = sqm_expectations_closed(cfg, fx::single_node(), t);
        CHECK(e.y == doctest::Approx(std::sqrt(2 / wy) * b * c * std::cos(wy * t) / 2.5).epsilon(1e-12));
    }
}

TEST_CASE("closed form agrees with quadrature on random superpositions") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> w(0.4, 2.0), time(0.0, 50.0);
    for (int k = 0; k < 10; ++k) {
        OscillatorConfig cfg;
        cfg.omega_x = w(rng);
        cfg.omega_y = w(rng);
        cfg.mass_x = w(rng);
        const auto sup = random_superposition(rng);
        for (int j = 0; j < 3; ++j) {
            const double t = time(rng);
            const auto a = sqm_expectations_closed(cfg, sup, t);
            const auto q = sqm_expectations_quadrature(cfg, sup, t);
            for (auto o : kObservables) CHECK(std::abs(a.get(o) - q.get(o)) < 1e-10);
        }
    }
}

TEST_CASE("eigenstates have zero moments and their own energy") {
    const auto cfg = fx::anisotropic_oscillator();
    const auto e = sqm_expectations_closed(cfg, fx::eigenstate(3, 1), 2.0);
    CHECK(e.x == 0.0);
    CHECK(e.y == 0.0);
    CHECK(e.px == 0.0);
    CHECK(e.py == 0.0);
    CHECK(e.L == 0.0);
    CHECK(e.E == doctest::Approx(mode_energy(cfg, {3, 1})));
}

TEST_CASE("Ehrenfest relation d<x>/dt = <p_x>/M") {
    auto cfg = fx::anisotropic_oscillator();
    cfg.mass_y = 1.7;
    const Superposition sup(std::vector<Term>{{1.0, {0, 0}}, {cplx(0.4, 0.9), {1, 0}}, {0.6, {1, 1}}, {cplx(-0.2, 0.3), {2, 1}}});
    const double h = 1e-5;
    for (double t = 0.0; t <= 20.0; t += 0.5) {
        const auto lo = sqm_expectations_closed(cfg, sup, t - h), hi = sqm_expectations_closed(cfg, sup, t + h);
        const auto mid = sqm_expectations_closed(cfg, sup, t);
        CHECK((hi.x - lo.x) / (2 * h) == doctest::Approx(mid.px / cfg.mass_x).epsilon(1e-6).scale(1.0));
        CHECK((hi.y - lo.y) / (2 * h) == doctest::Approx(mid.py / cfg.mass_y).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("single-node expectations are periodic") {
    const auto cfg = fx::anisotropic_oscillator();
    const auto a = sqm_expectations_closed(cfg, fx::single_node(), 1.1);
    const auto b = sqm_expectations_closed(cfg, fx::single_node(), 1.1 + 2 * std::numbers::pi);
    const auto c = sqm_expectations_closed(cfg, fx::single_node(), 1.1 + 2 * std::numbers::pi * std::sqrt(2.0));
    CHECK(a.px == doctest::Approx(b.px).epsilon(1e-12));
    CHECK(a.x == doctest::Approx(b.x).epsilon(1e-12));
    CHECK(a.py == doctest::Approx(c.py).epsilon(1e-12));
    CHECK(a.y == doctest::Approx(c.y).epsilon(1e-12));
}

TEST_CASE("gauss-hermite rule integrates polynomials exactly") {
    const auto [u, w] = gauss_hermite(12);
    double m0 = 0.0, m2 = 0.0, m4 = 0.0, m5 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        m0 += w[i];
        m2 += w[i] * u[i] * u[i];
        m4 += w[i] * std::pow(u[i], 4);
        m5 += w[i] * std::pow(u[i], 5);
    }
    const double sp = std::sqrt(std::numbers::pi);
    CHECK(m0 == doctest::Approx(sp).epsilon(1e-14));
    CHECK(m2 == doctest::Approx(sp / 2).epsilon(1e-14));
    CHECK(m4 == doctest::Approx(3 * sp / 4).epsilon(1e-14));
    CHECK(std::abs(m5) < 1e-12);
}

TEST_CASE("ensemble means and zone decomposition") {
    const auto cfg = fx::anisotropic_oscillator();
    const Wavefunction wf(cfg, fx::single_node());
    const auto e = born_sample(wf, working_region(wf), 4000, 77);
    const auto avg = ensemble_expectations(wf, e.particles);
    CHECK(avg.excluded == 0);
    const auto zones = zone_decomposition(wf, e.particles, 0.03);
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& z : zones) {
        total += z.contribution;
        count += z.count;
        if (z.count) CHECK(z.mean_energy == doctest::Approx(z.contribution * 4000.0 / static_cast<double>(z.count)));
        CHECK(z.hi - z.lo == doctest::Approx(0.03));
    }
    CHECK(count == 4000);
    CHECK(total == doctest::Approx(avg.E).epsilon(1e-12));
    CHECK(zones.size() >= 11);
    CHECK(zones.size() <= 12);
}

TEST_CASE("multi-node Born ensemble energy near the quantum value") {
    const auto cfg = fx::anisotropic_oscillator();
    const Wavefunction wf(cfg, fx::case_a());
    const auto e = born_sample(wf, working_region(wf), 10000, 31);
    double s = 0.0, s2 = 0.0;
    for (const auto& p : e.particles) {
        const double v = particle_energy(wf, p).total;
        s += v;
        s2 += v * v;
    }
    const double mean = s / 1e4, sem = std::sqrt((s2 / 1e4 - mean * mean) / 1e4);
    MESSAGE("E_av=" << mean << " sem=" << sem);
    CHECK(std::abs(mean - 5.7406) < 4 * sem);
}

TEST_CASE("deviation table and time grid") {
    CHECK(time_grid(100.0, 50.0) == std::vector<double>{0.0, 50.0, 100.0});
    const auto cfg = fx::anisotropic_oscillator();
    const Wavefunction wf(cfg, fx::eigenstate(1, 0));
    std::vector<std::vector<ParticleState>> snaps(2);
    for (auto& s : snaps) s = {{0.5, 0.1, 0.0}, {-0.5, -0.1, 0.0}};
    snaps[1][0].t = snaps[1][1].t = 1.0;
    const auto d = deviation_table(wf, {0.0, 1.0}, snaps);
    CHECK(d.get(Observable::E) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(d.get(Observable::X) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
}
