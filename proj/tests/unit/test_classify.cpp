#include <doctest.h>

#include <random>

#include "bohm/classify.hpp"
#include "bohm/errors.hpp"
#include "bohm/pipeline.hpp"
#include "bohm/sampling.hpp"
#include "fixtures.hpp"

using namespace bohm;

namespace {

const GridSpec kUnit{{0.0, 1.0, 0.0, 1.0}, 10, 10};

Histogram2D random_hist(std::uint64_t seed, int n) {
    Histogram2D h(kUnit);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.1, 1.1);
    for (int i = 0; i < n; ++i) h.add(u(rng), u(rng));
    return h;
}

}  // namespace

TEST_CASE("histogram bins, overflow and merge") {
    Histogram2D h(kUnit);
    h.add(0.05, 0.95);
    h.add(0.05, 0.95);
    h.add(1.0, 0.5);
    h.add(-0.01, 0.5);
    CHECK(h.count(0, 9) == 2);
    CHECK(h.total() == 2);
    CHECK(h.overflow() == 2);
    CHECK(h.occupied() == 1);
    Histogram2D g(kUnit);
    g.add(0.55, 0.15);
    h.merge(g);
    CHECK(h.total() == 3);
    CHECK(h.occupied() == 2);
    CHECK_THROWS_AS(h.merge(Histogram2D({{0.0, 1.0, 0.0, 1.0}, 10, 11})), GridMismatch);
}

TEST_CASE("ergodicity distance is a bounded metric") {
    const auto a = random_hist(1, 500), b = random_hist(2, 700), c = random_hist(3, 300);
    CHECK(ergodicity_distance(a, a) == 0.0);
    const double ab = ergodicity_distance(a, b), ba = ergodicity_distance(b, a);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-15));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(ergodicity_distance(a, c) <= ab + ergodicity_distance(b, c) + 1e-15);

    Histogram2D left(kUnit), right(kUnit);
    left.add(0.1, 0.1);
    right.add(0.9, 0.9);
    CHECK(ergodicity_distance(left, right) == doctest::Approx(1.0));
    CHECK_THROWS_AS(ergodicity_distance(left, Histogram2D(kUnit)), EmptyHistogram);
}

TEST_CASE("classification thresholds") {
    const ClassifyThresholds th;
    CHECK(classify_fraction(0.7, th, 1.0).label == Label::Chaotic);
    CHECK(classify_fraction(0.5, th, 1.0).label == Label::Chaotic);
    CHECK(classify_fraction(0.15, th, 1.0).label == Label::Ordered);
    CHECK(classify_fraction(0.3, th, 1.0).label == Label::Undetermined);
    for (auto l : {Label::Chaotic, Label::Ordered, Label::Undetermined}) CHECK(label_from_string(to_string(l)) == l);

    Histogram2D ref(kUnit), one(kUnit);
    for (int i = 0; i < 10; ++i) ref.add(0.05 + 0.1 * i, 0.5);
    one.add(0.05, 0.5);
    const auto c = classify_trajectory(one, ref, th, 5.0);
    CHECK(c.footprint_fraction == doctest::Approx(0.1));
    CHECK(c.label == Label::Ordered);
    CHECK_THROWS_AS(classify_trajectory(one, Histogram2D(kUnit)), EmptyHistogram);
}

TEST_CASE("sparse footprint matches the dense histogram") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::uint32_t> bin(0, 99);
    SparseFootprint sp;
    Histogram2D dense(kUnit);
    for (int round = 0; round < 5; ++round) {
        std::vector<std::uint32_t> idx;
        for (int i = 0; i < 200; ++i) {
            idx.push_back(bin(rng));
            dense.add_bin(idx.back());
        }
        sp.merge_samples(idx);
        CHECK(idx.empty());
    }
    const auto back = sp.to_histogram(kUnit);
    CHECK(back.counts() == dense.counts());
    CHECK(sp.occupied() == dense.occupied());
}

TEST_CASE("stationary trajectory occupies one bin") {
    const auto cfg = fx::anisotropic_oscillator();
    const Wavefunction wf(cfg, fx::eigenstate(2, 2));
    const GridSpec grid{working_region(wf), 200, 200};
    const auto h = accumulate_footprint(integrate_trajectory(wf, {0.3, 0.4, 0.0}, 50.0, 0.05), grid, 50.0);
    CHECK(h.occupied() == 1);
    CHECK(h.total() == 1001);
}

TEST_CASE("footprints only grow with the horizon") {
    const auto cfg = fx::anisotropic_oscillator();
    const Wavefunction wf(cfg, fx::case_b());
    const GridSpec grid{working_region(wf), 200, 200};
    const auto tr = integrate_trajectory(wf, {0.5, 0.5, 0.0}, 400.0, 0.05);
    std::size_t prev = 0;
    for (double T : {50.0, 100.0, 200.0, 400.0}) {
        const auto occ = accumulate_footprint(tr, grid, T).occupied();
        CHECK(occ >= prev);
        prev = occ;
    }
}

TEST_CASE("ordered multi-node trajectory covers a small area") {
    const auto cfg = fx::anisotropic_oscillator();
    const Wavefunction wf(cfg, fx::case_a());
    const GridSpec grid{working_region(wf), 200, 200};
    const auto h = accumulate_footprint(integrate_trajectory(wf, {0.01, 0.1, 0.0}, 1000.0, 0.05), grid, 1000.0);
    MESSAGE("occupied " << h.occupied() << " of " << grid.nx * grid.ny);
    CHECK(h.occupied() < 0.02 * grid.nx * grid.ny);
}

TEST_CASE("Born ensemble footprint overflow is negligible") {
    const auto cfg = fx::anisotropic_oscillator();
    const Wavefunction wf(cfg, fx::single_node());
    const auto e = born_sample(wf, working_region(wf), 100, 12);
    EvolveSpec spec;
    spec.horizon = 200.0;
    spec.observable_dt = 50.0;
    spec.checkpoint_every = 100.0;
    spec.grid = {working_region(wf), 200, 200};
    const auto recs = evolve_particles(wf, e.particles, spec);
    std::uint64_t inside = 0, outside = 0;
    for (const auto& r : recs) {
        for (const auto& [b, c] : r.footprint.bins) inside += c;
        outside += r.footprint.overflow;
        CHECK(r.observed.size() == 5);
        CHECK(r.flag == ParticleFlag::None);
    }
    CHECK(inside + outside == 100 * 4001);
    CHECK(static_cast<double>(outside) < 1e-3 * static_cast<double>(inside + outside));
}

TEST_CASE("graymap export") {
    Histogram2D h({{0.0, 3.0, 0.0, 2.0}, 3, 2});
    h.add(0.5, 1.5);
    h.add(0.5, 1.5);
    h.add(2.5, 0.5);
    CHECK(to_pgm(h, "note") == "P2\n# note\n3 2\n255\n255 0 0\n0 0 128\n");
    CHECK(to_csv_grid(h) == "2,0,0\n0,0,1\n");
}
