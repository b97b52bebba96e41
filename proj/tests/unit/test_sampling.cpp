#include <doctest.h>

#include <cmath>
#include <numeric>

#include "bohm/errors.hpp"
#include "bohm/observables.hpp"
#include "bohm/sampling.hpp"
#include "fixtures.hpp"

using namespace bohm;

namespace {

struct Moments {
    double mean = 0.0, sem = 0.0;
};

template <class Get>
Moments moments(const std::vector<ParticleState>& ps, Get get) {
    double s = 0.0, s2 = 0.0;
    for (const auto& p : ps) {
        s += get(p);
        s2 += get(p) * get(p);
    }
    const double n = static_cast<double>(ps.size());
    const double mean = s / n;
    return {mean, std::sqrt((s2 / n - mean * mean) / n)};
}

// Upper tail of chi-square via the Wilson-Hilferty normal approximation.
double chi2_pvalue(double chi2, double dof) {
    const double z = (std::cbrt(chi2 / dof) - (1.0 - 2.0 / (9.0 * dof))) / std::sqrt(2.0 / (9.0 * dof));
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
    StreamRng a(42, 3), b(42, 3), c(42, 4);
    for (int i = 0; i < 10; ++i) {
        const auto va = a.next();
        CHECK(va == b.next());
        CHECK(va != c.next());
    }
    StreamRng u(1, 0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("born samples are deterministic and independent of thread count") {
    const Wavefunction wf(fx::anisotropic_oscillator(), fx::single_node());
    const auto region = working_region(wf);
    BornSampleOptions one, four;
    four.threads = 4;
    const auto a = born_sample(wf, region, 3000, 9, one);
    const auto b = born_sample(wf, region, 3000, 9, four);
    const auto c = born_sample(wf, region, 3000, 10, one);
    REQUIRE(a.particles.size() == 3000);
    REQUIRE(b.particles.size() == 3000);
    bool differs = false;
    for (std::size_t i = 0; i < a.particles.size(); ++i) {
        CHECK(a.particles[i].x == b.particles[i].x);
        CHECK(a.particles[i].y == b.particles[i].y);
        differs |= a.particles[i].x != c.particles[i].x;
    }
    CHECK(differs);
    CHECK(a.provenance == Provenance::Born);
}

TEST_CASE("born sample follows |Psi|^2") {
    const auto cfg = fx::anisotropic_oscillator();
    const Wavefunction wf(cfg, fx::single_node());
    const auto region = working_region(wf);
    const std::size_t n = 100000;
    const auto e = born_sample(wf, region, n, 2024);

    {  // no sample in a zero-probability spot
        double pmin = 1.0;
        for (const auto& p : e.particles) pmin = std::min(pmin, wf.density(p.x, p.y, 0.0));
        CHECK(pmin > 0.0);
    }
    {  // mean position matches the quadrature expectation
        const auto q = sqm_expectations_quadrature(cfg, fx::single_node(), 0.0);
        const auto mx = moments(e.particles, [](const ParticleState& p) { return p.x; });
        const auto my = moments(e.particles, [](const ParticleState& p) { return p.y; });
        CHECK(std::abs(mx.mean - q.x) < 3 * mx.sem);
        CHECK(q.x == doctest::Approx(0.566).epsilon(1e-3));
        CHECK(std::abs(my.mean - q.y) < 3 * my.sem);
    }
    {  // chi-square on a 50x50 grid
        const int g = 50, sub = 4;
        std::vector<double> expected(g * g, 0.0);
        std::vector<double> observed(g * g, 0.0);
        const double hx = region.width() / g, hy = region.height() / g;
        double total = 0.0;
        for (int i = 0; i < g; ++i)
            for (int j = 0; j < g; ++j) {
                double s = 0.0;
                for (int a = 0; a < sub; ++a)
                    for (int b = 0; b < sub; ++b)
                        s += wf.density(region.x_lo + (i + (a + 0.5) / sub) * hx, region.y_lo + (j + (b + 0.5) / sub) * hy, 0.0);
                expected[i * g + j] = s;
                total += s;
            }
        for (const auto& p : e.particles) {
            const int i = std::min(g - 1, static_cast<int>((p.x - region.x_lo) / hx));
            const int j = std::min(g - 1, static_cast<int>((p.y - region.y_lo) / hy));
            observed[i * g + j] += 1.0;
        }
        // Pool bins with expected count < 5 into one.
        double chi2 = 0.0, pool_e = 0.0, pool_o = 0.0;
        int bins = 0;
        for (int k = 0; k < g * g; ++k) {
            const double ex = expected[k] / total * static_cast<double>(n);
            if (ex < 5.0) {
                pool_e += ex;
                pool_o += observed[k];
                continue;
            }
            chi2 += (observed[k] - ex) * (observed[k] - ex) / ex;
            ++bins;
        }
        if (pool_e > 0.0) {
            chi2 += (pool_o - pool_e) * (pool_o - pool_e) / pool_e;
            ++bins;
        }
        const double p = chi2_pvalue(chi2, bins - 1);
        MESSAGE("chi2=" << chi2 << " bins=" << bins << " p=" << p);
        CHECK(p > 0.001);
    }
}

TEST_CASE("uniform square sample") {
    const Region box{-1.0, 1.0, -1.0, 1.0};
    const auto e = uniform_square_sample(20000, box, 3);
    REQUIRE(e.particles.size() == 20000);
    for (const auto& p : e.particles) CHECK(box.contains(p.x, p.y));
    const auto mx = moments(e.particles, [](const ParticleState& p) { return p.x; });
    const auto my = moments(e.particles, [](const ParticleState& p) { return p.y; });
    CHECK(std::abs(mx.mean) < 4 * mx.sem);
    CHECK(std::abs(my.mean) < 4 * my.sem);
    CHECK(e.provenance == Provenance::UniformSquare);
}

TEST_CASE("non-Born ensemble energy is far from the quantum expectation") {
    const auto cfg = fx::anisotropic_oscillator();
    const Wavefunction wf(cfg, fx::single_node());
    const auto e = uniform_square_sample(10000, {-1.0, 1.0, -1.0, 1.0}, 8);
    const double eav = ensemble_expectations(wf, e.particles).E;
    MESSAGE("uniform-square E_av = " << eav);
    CHECK(std::abs(eav - 1.595) > 0.1);
}

TEST_CASE("ensemble files round-trip") {
    const Wavefunction wf(fx::anisotropic_oscillator(), fx::single_node());
    const auto e = born_sample(wf, working_region(wf), 50, 4);
    const std::string path = "unit_roundtrip_ensemble.csv";
    write_ensemble(e, path, "abc123");
    std::string hash;
    const auto r = read_ensemble(path, hash);
    CHECK(hash == "abc123");
    CHECK(r.provenance == Provenance::Born);
    CHECK(r.seed == 4);
    REQUIRE(r.particles.size() == 50);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(r.particles[i].x == e.particles[i].x);
        CHECK(r.particles[i].y == e.particles[i].y);
    }
}

TEST_CASE("zero particles is rejected") {
    const Wavefunction wf(fx::anisotropic_oscillator(), fx::single_node());
    CHECK_THROWS(born_sample(wf, working_region(wf), 0, 1));
}
