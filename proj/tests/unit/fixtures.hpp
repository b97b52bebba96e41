#pragma once

#include <cmath>
#include <vector>

#include "bohm/wavefunction.hpp"

namespace fx {

inline const double kRoot2Half = std::sqrt(2.0) / 2.0;

inline bohm::OscillatorConfig anisotropic_oscillator() {
    bohm::OscillatorConfig c;
    c.omega_y = kRoot2Half;
    return c;
}

inline bohm::Superposition three_terms(bohm::Mode a, bohm::Mode b, bohm::Mode c) {
    return bohm::Superposition(std::vector<bohm::Term>{{1.0, a}, {1.0, b}, {kRoot2Half, c}});
}

inline bohm::Superposition single_node() { return three_terms({0, 0}, {1, 0}, {1, 1}); }
inline bohm::Superposition case_a() { return three_terms({0, 2}, {3, 4}, {5, 7}); }
inline bohm::Superposition case_b() { return three_terms({10, 3}, {4, 5}, {7, 8}); }

inline bohm::Superposition eigenstate(int m, int n) { return bohm::Superposition(std::vector<bohm::Term>{{1.0, {m, n}}}); }

}  // namespace fx
