#pragma once

// Analytic 2D anisotropic harmonic-oscillator wavefunctions built from
// superpositions of separable eigenstates Psi_{m,n}(x,y,t) = psi_m(x) psi_n(y) e^{-iE t/hbar}.

#include <array>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

namespace bohm {

using cplx = std::complex<double>;

/// Singular guard on |Psi|^2 for quantities that divide by it (v, Q).
inline constexpr double kDensityFloor = 1e-15;

/// Largest quantum number supported by the normalisation tables.
inline constexpr int kMaxQuantumNumber = 32;

struct OscillatorConfig {
    double hbar = 1.0;
    double mass_x = 1.0;
    double mass_y = 1.0;
    double omega_x = 1.0;
    double omega_y = 1.0;

    /// Throws ConfigError unless every constant is finite and > 0.
    void validate() const;

    /// M_q omega_q / hbar, the inverse squared length scale per axis.
    double alpha_x() const { return mass_x * omega_x / hbar; }
    double alpha_y() const { return mass_y * omega_y / hbar; }

    double potential(double x, double y) const {
        return 0.5 * (mass_x * omega_x * omega_x * x * x + mass_y * omega_y * omega_y * y * y);
    }
};

struct Mode {
    int m = 0;
    int n = 0;
    friend bool operator==(const Mode&, const Mode&) = default;
};

/// E_{m,n} = (m + 1/2) hbar omega_x + (n + 1/2) hbar omega_y.
double mode_energy(const OscillatorConfig& cfg, Mode mode);

struct Term {
    cplx coeff;
    Mode mode;
};

/// Normalised superposition M * sum_j c_j Psi_{m_j,n_j}.
class Superposition {
public:
    /// Throws ConfigError on an empty list, repeated modes, negative or
    /// too-large quantum numbers, or all-zero coefficients.
    explicit Superposition(std::vector<Term> terms);

    const std::vector<Term>& terms() const { return terms_; }
    double norm_const() const { return norm_; }
    std::size_t size() const { return terms_.size(); }
    int max_m() const;
    int max_n() const;

private:
    std::vector<Term> terms_;
    double norm_ = 1.0;
};

/// Psi and its spatial derivatives at one spacetime point.
struct ComplexField2 {
    cplx value;
    std::array<cplx, 2> grad;             // d/dx, d/dy
    std::array<cplx, 2> laplacian_parts;  // d2/dx2, d2/dy2
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Physical Hermite polynomial H_n(u) and its derivative 2n H_{n-1}(u).
std::pair<double, double> hermite_eval(int n, double u);

cplx eigenstate_eval(const OscillatorConfig& cfg, Mode mode, double x, double y, double t);
ComplexField2 psi_eval(const OscillatorConfig& cfg, const Superposition& sup, double x, double y,
                       double t);
double prob_density(const OscillatorConfig& cfg, const Superposition& sup, double x, double y,
                    double t);
/// Q = -(hbar^2 / 2M) lap|Psi| / |Psi|. Throws NearNode when |Psi|^2 <= kDensityFloor.
double quantum_potential(const OscillatorConfig& cfg, const Superposition& sup, double x,
                         double y, double t);
/// Newton search for Psi = 0 starting at `guess`. nullopt when it does not converge.
std::optional<Point> find_node(const OscillatorConfig& cfg, const Superposition& sup, double t,
                               Point guess);

/// Axis-aligned rectangle [x_lo, x_hi) x [y_lo, y_hi).
struct Region {
    double x_lo = -1.0, x_hi = 1.0, y_lo = -1.0, y_hi = 1.0;

    double width() const { return x_hi - x_lo; }
    double height() const { return y_hi - y_lo; }
    bool contains(double x, double y) const {
        return x >= x_lo && x < x_hi && y >= y_lo && y < y_hi;
    }
    friend bool operator==(const Region&, const Region&) = default;
};

/// Precomputed evaluator for one (config, superposition) pair. All the free
/// functions above route through this; hot loops should hold one directly.
class Wavefunction {
public:
    Wavefunction(OscillatorConfig cfg, Superposition sup);

    const OscillatorConfig& config() const { return cfg_; }
    const Superposition& superposition() const { return sup_; }

    ComplexField2 field(double x, double y, double t) const;
    cplx value(double x, double y, double t) const;
    double density(double x, double y, double t) const { return std::norm(value(x, y, t)); }

    /// Time-independent bound M^2 (sum_j |c_j| |psi_{m_j}(x) psi_{n_j}(y)|)^2 >= |Psi(x,y,t)|^2.
    double density_bound(double x, double y) const;

    /// Guidance velocity (hbar/M_q) Im(d_q Psi / Psi). Returns false near a node.
    bool try_velocity(double x, double y, double t, double& vx, double& vy) const;
    std::array<double, 2> velocity(double x, double y, double t) const;

    double quantum_potential(double x, double y, double t) const;
    /// Q from an already evaluated field.
    double quantum_potential(const ComplexField2& f, double x, double y, double t) const;

    const std::vector<double>& energies() const { return energies_; }

private:
    struct AxisTable {
        std::array<double, kMaxQuantumNumber + 2> phi{};
        std::array<double, kMaxQuantumNumber + 2> dphi{};
    };
    void fill_axis(double q, double alpha, double norm4, int max_order, AxisTable& out) const;

    OscillatorConfig cfg_;
    Superposition sup_;
    std::vector<cplx> scaled_coeffs_;  // M c_j
    std::vector<double> energies_;     // E_j
    double sqrt_alpha_x_, sqrt_alpha_y_;
    double norm4_x_, norm4_y_;  // (alpha/pi)^{1/4}
    int max_m_, max_n_;
};

/// Box where |Psi|^2 can exceed `threshold` at any time: a 400x400 scan of
/// density_bound() for cells above the threshold, grown by `pad` about its centre.
Region working_region(const Wavefunction& wf, double threshold = 1e-5, double pad = 0.2,
                      int grid = 400);

/// Multistart node search over a grid of guesses; returns distinct roots.
std::vector<Point> find_nodes_multistart(const Wavefunction& wf, double t, const Region& region,
                                         int starts_per_axis = 60);

}  // namespace bohm
