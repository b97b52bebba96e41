#include "bohm/wavefunction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bohm/errors.hpp"

namespace bohm {

namespace {

// 1 / sqrt(2^k k!)
const std::array<double, kMaxQuantumNumber + 2>& inv_hermite_norm() {
    static const auto table = [] {
        std::array<double, kMaxQuantumNumber + 2> t{};
        t[0] = 1.0;
        for (std::size_t k = 1; k < t.size(); ++k)
            t[k] = t[k - 1] / std::sqrt(2.0 * static_cast<double>(k));
        return t;
    }();
    return table;
}

}  // namespace

NearNode::NearNode(double x_, double y_, double t_)
    : NumericalError([&] {
          std::ostringstream os;
          os << "wavefunction density below singular guard at (" << x_ << ", " << y_
             << ", t=" << t_ << ")";
          return os.str();
      }()),
      x(x_),
      y(y_),
      t(t_) {}

void OscillatorConfig::validate() const {
    auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!ok(hbar)) throw ConfigError("hbar must be finite and > 0");
    if (!ok(mass_x) || !ok(mass_y)) throw ConfigError("masses must be finite and > 0");
    if (!ok(omega_x) || !ok(omega_y)) throw ConfigError("frequencies must be finite and > 0");
}

double mode_energy(const OscillatorConfig& cfg, Mode mode) {
    return (mode.m + 0.5) * cfg.hbar * cfg.omega_x + (mode.n + 0.5) * cfg.hbar * cfg.omega_y;
}

Superposition::Superposition(std::vector<Term> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw ConfigError("superposition needs at least one term");
    double sum = 0.0;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        const auto& [c, mode] = terms_[i];
        if (mode.m < 0 || mode.n < 0) throw ConfigError("quantum numbers must be >= 0");
        if (mode.m > kMaxQuantumNumber || mode.n > kMaxQuantumNumber)
            throw ConfigError("quantum numbers above 32 are not supported");
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
            throw ConfigError("coefficients must be finite");
        for (std::size_t j = 0; j < i; ++j)
            if (terms_[j].mode == mode) throw ConfigError("superposition modes must be distinct");
        sum += std::norm(c);
    }
    if (!(sum > 0.0)) throw ConfigError("superposition coefficients are all zero");
    norm_ = 1.0 / std::sqrt(sum);
}

int Superposition::max_m() const {
    int r = 0;
    for (const auto& t : terms_) r = std::max(r, t.mode.m);
    return r;
}

int Superposition::max_n() const {
    int r = 0;
    for (const auto& t : terms_) r = std::max(r, t.mode.n);
    return r;
}

std::pair<double, double> hermite_eval(int n, double u) {
    if (n == 0) return {1.0, 0.0};
    double prev = 1.0;
    double cur = 2.0 * u;
    for (int k = 1; k < n; ++k) {
        const double next = 2.0 * u * cur - 2.0 * k * prev;
        prev = cur;
        cur = next;
    }
    return {cur, 2.0 * n * prev};
}

Wavefunction::Wavefunction(OscillatorConfig cfg, Superposition sup)
    : cfg_(cfg), sup_(std::move(sup)) {
    cfg_.validate();
    for (const auto& term : sup_.terms()) {
        scaled_coeffs_.push_back(sup_.norm_const() * term.coeff);
        energies_.push_back(mode_energy(cfg_, term.mode));
    }
    sqrt_alpha_x_ = std::sqrt(cfg_.alpha_x());
    sqrt_alpha_y_ = std::sqrt(cfg_.alpha_y());
    norm4_x_ = std::pow(cfg_.alpha_x() / std::numbers::pi, 0.25);
    norm4_y_ = std::pow(cfg_.alpha_y() / std::numbers::pi, 0.25);
    max_m_ = sup_.max_m();
    max_n_ = sup_.max_n();
}

void Wavefunction::fill_axis(double q, double alpha, double norm4, int max_order,
                             AxisTable& out) const {
    const double sa = std::sqrt(alpha);
    const double u = sa * q;
    const double g = norm4 * std::exp(-0.5 * u * u);
    const auto& inv = inv_hermite_norm();
    double h_prev = 0.0;
    double h = 1.0;
    for (int k = 0; k <= max_order; ++k) {
        out.phi[k] = inv[k] * g * h;
        out.dphi[k] = sa * inv[k] * g * (2.0 * k * h_prev - u * h);
        const double h_next = 2.0 * u * h - 2.0 * k * h_prev;
        h_prev = h;
        h = h_next;
    }
}

ComplexField2 Wavefunction::field(double x, double y, double t) const {
    AxisTable ax, ay;
    fill_axis(x, cfg_.alpha_x(), norm4_x_, max_m_, ax);
    fill_axis(y, cfg_.alpha_y(), norm4_y_, max_n_, ay);
    const double ux2 = cfg_.alpha_x() * x * x;
    const double uy2 = cfg_.alpha_y() * y * y;

    ComplexField2 f{};
    const auto& terms = sup_.terms();
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const int m = terms[j].mode.m;
        const int n = terms[j].mode.n;
        const cplx amp = scaled_coeffs_[j] * std::polar(1.0, -energies_[j] * t / cfg_.hbar);
        const double X = ax.phi[m], Y = ay.phi[n];
        // psi_k'' = alpha (u^2 - (2k+1)) psi_k, from the 1D eigenvalue equation.
        const double Xpp = cfg_.alpha_x() * (ux2 - (2.0 * m + 1.0)) * X;
        const double Ypp = cfg_.alpha_y() * (uy2 - (2.0 * n + 1.0)) * Y;
        f.value += amp * (X * Y);
        f.grad[0] += amp * (ax.dphi[m] * Y);
        f.grad[1] += amp * (X * ay.dphi[n]);
        f.laplacian_parts[0] += amp * (Xpp * Y);
        f.laplacian_parts[1] += amp * (X * Ypp);
    }
    return f;
}

cplx Wavefunction::value(double x, double y, double t) const {
    AxisTable ax, ay;
    fill_axis(x, cfg_.alpha_x(), norm4_x_, max_m_, ax);
    fill_axis(y, cfg_.alpha_y(), norm4_y_, max_n_, ay);
    cplx v{};
    const auto& terms = sup_.terms();
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const cplx amp = scaled_coeffs_[j] * std::polar(1.0, -energies_[j] * t / cfg_.hbar);
        v += amp * (ax.phi[terms[j].mode.m] * ay.phi[terms[j].mode.n]);
    }
    return v;
}

double Wavefunction::density_bound(double x, double y) const {
    AxisTable ax, ay;
    fill_axis(x, cfg_.alpha_x(), norm4_x_, max_m_, ax);
    fill_axis(y, cfg_.alpha_y(), norm4_y_, max_n_, ay);
    double s = 0.0;
    const auto& terms = sup_.terms();
    for (std::size_t j = 0; j < terms.size(); ++j)
        s += std::abs(scaled_coeffs_[j]) *
             std::abs(ax.phi[terms[j].mode.m] * ay.phi[terms[j].mode.n]);
    return s * s;
}

bool Wavefunction::try_velocity(double x, double y, double t, double& vx, double& vy) const {
    AxisTable ax, ay;
    fill_axis(x, cfg_.alpha_x(), norm4_x_, max_m_, ax);
    fill_axis(y, cfg_.alpha_y(), norm4_y_, max_n_, ay);
    cplx psi{}, gx{}, gy{};
    const auto& terms = sup_.terms();
    // Phases relative to the first term: v ignores a global phase, and a
    // single real term then gives exactly zero.
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const int m = terms[j].mode.m;
        const int n = terms[j].mode.n;
        const cplx amp = scaled_coeffs_[j] * std::polar(1.0, -(energies_[j] - energies_[0]) * t / cfg_.hbar);
        psi += amp * (ax.phi[m] * ay.phi[n]);
        gx += amp * (ax.dphi[m] * ay.phi[n]);
        gy += amp * (ax.phi[m] * ay.dphi[n]);
    }
    const double dens = std::norm(psi);
    if (!(dens > kDensityFloor)) return false;
    const cplx conj_psi = std::conj(psi);
    vx = cfg_.hbar / cfg_.mass_x * (conj_psi * gx).imag() / dens;
    vy = cfg_.hbar / cfg_.mass_y * (conj_psi * gy).imag() / dens;
    return true;
}

std::array<double, 2> Wavefunction::velocity(double x, double y, double t) const {
    double vx = 0.0, vy = 0.0;
    if (!try_velocity(x, y, t, vx, vy)) throw NearNode(x, y, t);
    return {vx, vy};
}

double Wavefunction::quantum_potential(double x, double y, double t) const {
    return quantum_potential(field(x, y, t), x, y, t);
}

double Wavefunction::quantum_potential(const ComplexField2& f, double x, double y,
                                       double t) const {
    const double a = std::norm(f.value);
    if (!(a > kDensityFloor)) throw NearNode(x, y, t);
    const cplx conj_psi = std::conj(f.value);
    const double mass[2] = {cfg_.mass_x, cfg_.mass_y};
    double q = 0.0;
    for (int k = 0; k < 2; ++k) {
        const double da = 2.0 * (conj_psi * f.grad[k]).real();
        const double d2a = 2.0 * (conj_psi * f.laplacian_parts[k]).real() + 2.0 * std::norm(f.grad[k]);
        // lap|Psi| / |Psi| with |Psi| = sqrt(A)
        const double ratio = d2a / (2.0 * a) - da * da / (4.0 * a * a);
        q -= cfg_.hbar * cfg_.hbar / (2.0 * mass[k]) * ratio;
    }
    return q;
}

cplx eigenstate_eval(const OscillatorConfig& cfg, Mode mode, double x, double y, double t) {
    cfg.validate();
    const auto& inv = inv_hermite_norm();
    if (mode.m < 0 || mode.n < 0 || mode.m > kMaxQuantumNumber || mode.n > kMaxQuantumNumber)
        throw ConfigError("quantum numbers must lie in [0, 32]");
    auto factor = [&](int s, double q, double alpha) {
        const double u = std::sqrt(alpha) * q;
        const double nq = inv[s] * std::pow(alpha / std::numbers::pi, 0.25);
        return nq * std::exp(-0.5 * u * u) * hermite_eval(s, u).first;
    };
    const double spatial = factor(mode.m, x, cfg.alpha_x()) * factor(mode.n, y, cfg.alpha_y());
    return spatial * std::polar(1.0, -mode_energy(cfg, mode) * t / cfg.hbar);
}

ComplexField2 psi_eval(const OscillatorConfig& cfg, const Superposition& sup, double x, double y,
                       double t) {
    return Wavefunction(cfg, sup).field(x, y, t);
}

double prob_density(const OscillatorConfig& cfg, const Superposition& sup, double x, double y,
                    double t) {
    return Wavefunction(cfg, sup).density(x, y, t);
}

double quantum_potential(const OscillatorConfig& cfg, const Superposition& sup, double x,
                         double y, double t) {
    return Wavefunction(cfg, sup).quantum_potential(x, y, t);
}

namespace {

std::optional<Point> newton_node(const Wavefunction& wf, double t, Point p) {
    constexpr int kMaxIter = 100;
    for (int it = 0; it < kMaxIter; ++it) {
        const auto f = wf.field(p.x, p.y, t);
        if (std::abs(f.value) < 1e-12) return p;
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;
        // Jacobian of (Re Psi, Im Psi); Levenberg damping keeps the step defined
        // on nodal lines where the Jacobian is rank one.
        const double j00 = f.grad[0].real(), j01 = f.grad[1].real();
        const double j10 = f.grad[0].imag(), j11 = f.grad[1].imag();
        const double r0 = f.value.real(), r1 = f.value.imag();
        const double a00 = j00 * j00 + j10 * j10;
        const double a01 = j00 * j01 + j10 * j11;
        const double a11 = j01 * j01 + j11 * j11;
        const double lambda = 1e-14 * (a00 + a11) + 1e-300;
        const double b0 = j00 * r0 + j10 * r1;
        const double b1 = j01 * r0 + j11 * r1;
        const double d00 = a00 + lambda, d11 = a11 + lambda;
        const double det = d00 * d11 - a01 * a01;
        if (!(std::abs(det) > 0.0)) return std::nullopt;
        p.x -= (d11 * b0 - a01 * b1) / det;
        p.y -= (d00 * b1 - a01 * b0) / det;
    }
    const double v = std::abs(wf.value(p.x, p.y, t));
    if (v < 1e-12) return p;
    return std::nullopt;
}

}  // namespace

std::optional<Point> find_node(const OscillatorConfig& cfg, const Superposition& sup, double t,
                               Point guess) {
    return newton_node(Wavefunction(cfg, sup), t, guess);
}

std::vector<Point> find_nodes_multistart(const Wavefunction& wf, double t, const Region& region,
                                         int starts_per_axis) {
    std::vector<Point> roots;
    for (int i = 0; i < starts_per_axis; ++i) {
        for (int j = 0; j < starts_per_axis; ++j) {
            const Point guess{region.x_lo + (i + 0.5) * region.width() / starts_per_axis,
                              region.y_lo + (j + 0.5) * region.height() / starts_per_axis};
            const auto r = newton_node(wf, t, guess);
            if (!r || !region.contains(r->x, r->y)) continue;
            const bool seen = std::any_of(roots.begin(), roots.end(), [&](const Point& q) {
                return std::hypot(q.x - r->x, q.y - r->y) < 1e-6;
            });
            if (!seen) roots.push_back(*r);
        }
    }
    return roots;
}

Region working_region(const Wavefunction& wf, double threshold, double pad, int grid) {
    const auto& cfg = wf.config();
    const auto& sup = wf.superposition();
    // The Gaussian tail beyond the outermost turning point plus 7 length
    // scales is far below any threshold of interest.
    const double hx = (std::sqrt(2.0 * sup.max_m() + 1.0) + 7.0) / std::sqrt(cfg.alpha_x());
    const double hy = (std::sqrt(2.0 * sup.max_n() + 1.0) + 7.0) / std::sqrt(cfg.alpha_y());
    double x_lo = hx, x_hi = -hx, y_lo = hy, y_hi = -hy;
    bool any = false;
    for (int i = 0; i <= grid; ++i) {
        const double x = -hx + 2.0 * hx * i / grid;
        for (int j = 0; j <= grid; ++j) {
            const double y = -hy + 2.0 * hy * j / grid;
            if (wf.density_bound(x, y) > threshold) {
                any = true;
                x_lo = std::min(x_lo, x);
                x_hi = std::max(x_hi, x);
                y_lo = std::min(y_lo, y);
                y_hi = std::max(y_hi, y);
            }
        }
    }
    if (!any) throw NumericalError("no grid cell exceeds the working-region density threshold");
    // Extend by one grid cell so the thresholded set is strictly inside.
    x_lo -= 2.0 * hx / grid;
    x_hi += 2.0 * hx / grid;
    y_lo -= 2.0 * hy / grid;
    y_hi += 2.0 * hy / grid;
    const double cx = 0.5 * (x_lo + x_hi), cy = 0.5 * (y_lo + y_hi);
    const double half_w = 0.5 * (x_hi - x_lo) * (1.0 + pad);
    const double half_h = 0.5 * (y_hi - y_lo) * (1.0 + pad);
    return Region{cx - half_w, cx + half_w, cy - half_h, cy + half_h};
}

}  // namespace bohm
