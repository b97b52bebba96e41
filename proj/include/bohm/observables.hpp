#pragma once

// Expectation values of E, p_x, p_y, L, x, y: closed form (ladder matrix
// elements), direct Gauss-Hermite quadrature, and Bohmian ensemble means.

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bohm/dynamics.hpp"
#include "bohm/wavefunction.hpp"

namespace bohm {

enum class Observable { E = 0, Px, Py, L, X, Y };
inline constexpr std::array<Observable, 6> kObservables{Observable::E, Observable::Px,
                                                        Observable::Py, Observable::L,
                                                        Observable::X, Observable::Y};
std::string to_string(Observable o);

enum class ExpectationSource { ClosedForm, Quadrature, Ensemble };

struct ExpectationSet {
    double E = 0.0, px = 0.0, py = 0.0, L = 0.0, x = 0.0, y = 0.0;
    double t = 0.0;
    ExpectationSource source = ExpectationSource::ClosedForm;
    std::size_t excluded = 0;  // Ensemble only: particles skipped at a node

    double get(Observable o) const;
};

struct SelectionEntry {
    bool identically_zero = true;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // term indices j < k
};

struct SelectionReport {
    SelectionEntry px, py, L, x, y;
};

/// M^2 sum_j |c_j|^2 E_{m_j,n_j}.
double sqm_energy(const OscillatorConfig& cfg, const Superposition& sup);

SelectionReport selection_rules(const Superposition& sup);

ExpectationSet sqm_expectations_closed(const OscillatorConfig& cfg, const Superposition& sup,
                                       double t);

/// Direct integration of Psi* A Psi on a tensor Gauss-Hermite grid.
ExpectationSet sqm_expectations_quadrature(const OscillatorConfig& cfg, const Superposition& sup,
                                           double t);

/// Nodes and weights of the n-point rule for int f(u) e^{-u^2} du.
std::pair<std::vector<double>, std::vector<double>> gauss_hermite(int n);

/// Bohmian means over particles sharing the same time. Particles at a node are
/// excluded and counted.
ExpectationSet ensemble_expectations(const Wavefunction& wf, std::span<const ParticleState> particles);

struct DeviationTable {
    std::vector<double> times;
    std::vector<ExpectationSet> analytic;
    std::vector<ExpectationSet> ensemble;
    std::array<double, 6> mean_abs{};  // indexed by Observable

    double get(Observable o) const { return mean_abs[static_cast<int>(o)]; }
};

/// `snapshots[k]` holds the ensemble positions at `times[k]`.
DeviationTable deviation_table(const Wavefunction& wf, const std::vector<double>& times,
                               const std::vector<std::vector<ParticleState>>& snapshots);

/// {0, step, ..., t_max}.
std::vector<double> time_grid(double t_max, double step);

struct ZoneReport {
    int zone = 0;  // 1-based
    double lo = 0.0, hi = 0.0;
    std::size_t count = 0;
    double contribution = 0.0;  // sum of zone energies / N
    double mean_energy = 0.0;   // 0 for empty zones
};

/// Bins particles by their density |Psi|^2 into bands of width dP.
std::vector<ZoneReport> zone_decomposition(const Wavefunction& wf,
                                           std::span<const ParticleState> particles,
                                           double dP = 0.03);

}  // namespace bohm
