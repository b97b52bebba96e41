#include "bohm/observables.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bohm/errors.hpp"
#include "bohm/parallel.hpp"

namespace bohm {

std::string to_string(Observable o) {
    switch (o) {
        case Observable::E: return "E";
        case Observable::Px: return "p_x";
        case Observable::Py: return "p_y";
        case Observable::L: return "L";
        case Observable::X: return "x";
        case Observable::Y: return "y";
    }
    return "?";
}

double ExpectationSet::get(Observable o) const {
    switch (o) {
        case Observable::E: return E;
        case Observable::Px: return px;
        case Observable::Py: return py;
        case Observable::L: return L;
        case Observable::X: return x;
        case Observable::Y: return y;
    }
    return 0.0;
}

double sqm_energy(const OscillatorConfig& cfg, const Superposition& sup) {
    double s = 0.0;
    for (const auto& term : sup.terms()) s += std::norm(term.coeff) * mode_energy(cfg, term.mode);
    return sup.norm_const() * sup.norm_const() * s;
}

SelectionReport selection_rules(const Superposition& sup) {
    SelectionReport r;
    const auto& terms = sup.terms();
    for (std::size_t j = 0; j < terms.size(); ++j) {
        for (std::size_t k = j + 1; k < terms.size(); ++k) {
            const int dm = std::abs(terms[j].mode.m - terms[k].mode.m);
            const int dn = std::abs(terms[j].mode.n - terms[k].mode.n);
            if (dm == 1 && dn == 0) {
                r.x.pairs.emplace_back(j, k);
                r.px.pairs.emplace_back(j, k);
            }
            if (dm == 0 && dn == 1) {
                r.y.pairs.emplace_back(j, k);
                r.py.pairs.emplace_back(j, k);
            }
            if (dm == 1 && dn == 1) r.L.pairs.emplace_back(j, k);
        }
    }
    for (auto* e : {&r.px, &r.py, &r.L, &r.x, &r.y}) e->identically_zero = e->pairs.empty();
    return r;
}

namespace {

// 1D matrix elements between real Hermite functions, alpha = M omega / hbar.
// <a|q|b>
double position_element(int a, int b, double alpha) {
    if (b == a + 1) return std::sqrt((a + 1) / (2.0 * alpha));
    if (b == a - 1) return std::sqrt(a / (2.0 * alpha));
    return 0.0;
}

// <a|p|b> = -i hbar <a|d/dq|b>
cplx momentum_element(int a, int b, double alpha, double hbar) {
    if (b == a + 1) return {0.0, -hbar * std::sqrt(alpha * (a + 1) / 2.0)};
    if (b == a - 1) return {0.0, hbar * std::sqrt(alpha * a / 2.0)};
    return {0.0, 0.0};
}

double delta(int a, int b) { return a == b ? 1.0 : 0.0; }

}  // namespace

ExpectationSet sqm_expectations_closed(const OscillatorConfig& cfg, const Superposition& sup,
                                       double t) {
    cfg.validate();
    const auto& terms = sup.terms();
    const double ax = cfg.alpha_x(), ay = cfg.alpha_y();
    const double m2 = sup.norm_const() * sup.norm_const();
    cplx sx{}, sy{}, spx{}, spy{}, sl{};
    for (std::size_t j = 0; j < terms.size(); ++j) {
        for (std::size_t k = 0; k < terms.size(); ++k) {
            const auto [mj, nj] = terms[j].mode;
            const auto [mk, nk] = terms[k].mode;
            const double dE = mode_energy(cfg, terms[j].mode) - mode_energy(cfg, terms[k].mode);
            const cplx w = std::conj(terms[j].coeff) * terms[k].coeff * std::polar(1.0, dE * t / cfg.hbar);
            const double xe = position_element(mj, mk, ax);
            const double ye = position_element(nj, nk, ay);
            const cplx pxe = momentum_element(mj, mk, ax, cfg.hbar);
            const cplx pye = momentum_element(nj, nk, ay, cfg.hbar);
            sx += w * (xe * delta(nj, nk));
            sy += w * (ye * delta(mj, mk));
            spx += w * (pxe * delta(nj, nk));
            spy += w * (pye * delta(mj, mk));
            sl += w * (xe * pye - ye * pxe);
        }
    }
    ExpectationSet r;
    r.source = ExpectationSource::ClosedForm;
    r.t = t;
    r.E = sqm_energy(cfg, sup);
    r.x = m2 * sx.real();
    r.y = m2 * sy.real();
    r.px = m2 * spx.real();
    r.py = m2 * spy.real();
    r.L = m2 * sl.real();
    return r;
}

std::pair<std::vector<double>, std::vector<double>> gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite needs n >= 1");
    // Golub-Welsch: eigenvalues of the Jacobi matrix of the Hermite recurrence.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(std::max(n - 1, 0));
    for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(k / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    std::vector<double> nodes(n), weights(n);
    for (int i = 0; i < n; ++i) {
        nodes[i] = es.eigenvalues()[i];
        const double v0 = es.eigenvectors()(0, i);
        weights[i] = std::sqrt(std::numbers::pi) * v0 * v0;
    }
    return {nodes, weights};
}

ExpectationSet sqm_expectations_quadrature(const OscillatorConfig& cfg, const Superposition& sup,
                                           double t) {
    const Wavefunction wf(cfg, sup);
    const int nq = 2 * std::max(sup.max_m(), sup.max_n()) + 8;
    const auto [u, w] = gauss_hermite(nq);
    const double sax = std::sqrt(cfg.alpha_x()), say = std::sqrt(cfg.alpha_y());
    const cplx minus_i_hbar{0.0, -cfg.hbar};

    // Integrand is e^{-u^2} times a polynomial per axis, so weight w e^{u^2}
    // against the full integrand in physical coordinates.
    std::vector<double> xs(nq), ys(nq), wx(nq), wy(nq);
    for (int i = 0; i < nq; ++i) {
        xs[i] = u[i] / sax;
        ys[i] = u[i] / say;
        wx[i] = std::exp(std::log(w[i]) + u[i] * u[i]) / sax;
        wy[i] = std::exp(std::log(w[i]) + u[i] * u[i]) / say;
    }
    double E = 0.0, X = 0.0, Y = 0.0, PX = 0.0, PY = 0.0, L = 0.0;
    for (int i = 0; i < nq; ++i) {
        for (int j = 0; j < nq; ++j) {
            const double x = xs[i], y = ys[j];
            const double wt = wx[i] * wy[j];
            const auto f = wf.field(x, y, t);
            const cplx cs = std::conj(f.value);
            const cplx h_psi = -cfg.hbar * cfg.hbar / (2.0 * cfg.mass_x) * f.laplacian_parts[0] -
                               cfg.hbar * cfg.hbar / (2.0 * cfg.mass_y) * f.laplacian_parts[1] +
                               cfg.potential(x, y) * f.value;
            const cplx px_psi = minus_i_hbar * f.grad[0];
            const cplx py_psi = minus_i_hbar * f.grad[1];
            E += wt * (cs * h_psi).real();
            X += wt * x * std::norm(f.value);
            Y += wt * y * std::norm(f.value);
            PX += wt * (cs * px_psi).real();
            PY += wt * (cs * py_psi).real();
            L += wt * (cs * (x * py_psi - y * px_psi)).real();
        }
    }
    ExpectationSet r;
    r.source = ExpectationSource::Quadrature;
    r.t = t;
    r.E = E;
    r.x = X;
    r.y = Y;
    r.px = PX;
    r.py = PY;
    r.L = L;
    return r;
}

ExpectationSet ensemble_expectations(const Wavefunction& wf,
                                     std::span<const ParticleState> particles) {
    if (particles.empty()) throw std::invalid_argument("ensemble is empty");
    const auto& cfg = wf.config();
    std::vector<double> e, px, py, l, x, y;
    std::size_t excluded = 0;
    for (const auto& p : particles) {
        const auto f = wf.field(p.x, p.y, p.t);
        const double dens = std::norm(f.value);
        if (!(dens > kDensityFloor)) {
            ++excluded;
            continue;
        }
        const cplx cs = std::conj(f.value);
        const double vx = cfg.hbar / cfg.mass_x * (cs * f.grad[0]).imag() / dens;
        const double vy = cfg.hbar / cfg.mass_y * (cs * f.grad[1]).imag() / dens;
        const double kin = 0.5 * (cfg.mass_x * vx * vx + cfg.mass_y * vy * vy);
        e.push_back(kin + cfg.potential(p.x, p.y) + wf.quantum_potential(f, p.x, p.y, p.t));
        px.push_back(cfg.mass_x * vx);
        py.push_back(cfg.mass_y * vy);
        l.push_back(p.x * cfg.mass_y * vy - p.y * cfg.mass_x * vx);
        x.push_back(p.x);
        y.push_back(p.y);
    }
    if (e.empty()) throw NumericalError("every particle of the ensemble sits on a node");
    const double n = static_cast<double>(e.size());
    ExpectationSet r;
    r.source = ExpectationSource::Ensemble;
    r.t = particles.front().t;
    r.E = pairwise_sum(e) / n;
    r.px = pairwise_sum(px) / n;
    r.py = pairwise_sum(py) / n;
    r.L = pairwise_sum(l) / n;
    r.x = pairwise_sum(x) / n;
    r.y = pairwise_sum(y) / n;
    r.excluded = excluded;
    return r;
}

std::vector<double> time_grid(double t_max, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("time grid step must be > 0");
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor(t_max / step + 1e-9));
    for (long k = 0; k <= n; ++k) out.push_back(static_cast<double>(k) * step);
    return out;
}

DeviationTable deviation_table(const Wavefunction& wf, const std::vector<double>& times,
                               const std::vector<std::vector<ParticleState>>& snapshots) {
    if (times.size() != snapshots.size())
        throw std::invalid_argument("one snapshot per grid time is required");
    if (times.empty()) throw std::invalid_argument("empty time grid");
    DeviationTable table;
    table.times = times;
    std::array<std::vector<double>, 6> devs;
    for (std::size_t k = 0; k < times.size(); ++k) {
        auto analytic = sqm_expectations_closed(wf.config(), wf.superposition(), times[k]);
        auto ens = ensemble_expectations(wf, snapshots[k]);
        for (auto o : kObservables)
            devs[static_cast<int>(o)].push_back(std::abs(ens.get(o) - analytic.get(o)));
        table.analytic.push_back(analytic);
        table.ensemble.push_back(ens);
    }
    for (int i = 0; i < 6; ++i)
        table.mean_abs[i] = pairwise_sum(devs[i]) / static_cast<double>(times.size());
    return table;
}

std::vector<ZoneReport> zone_decomposition(const Wavefunction& wf,
                                           std::span<const ParticleState> particles, double dP) {
    if (!(dP > 0.0)) throw std::invalid_argument("zone width must be > 0");
    std::vector<double> dens, energy;
    for (const auto& p : particles) {
        const double d = wf.density(p.x, p.y, p.t);
        if (!(d > kDensityFloor)) continue;
        dens.push_back(d);
        energy.push_back(particle_energy(wf, p).total);
    }
    if (dens.empty()) throw std::invalid_argument("no evaluable particles for zone decomposition");
    const double pmax = *std::max_element(dens.begin(), dens.end());
    const int zones = static_cast<int>(std::floor(pmax / dP)) + 1;
    std::vector<std::vector<double>> per_zone(zones);
    for (std::size_t i = 0; i < dens.size(); ++i) {
        const int z = std::min(zones - 1, static_cast<int>(std::floor(dens[i] / dP)));
        per_zone[z].push_back(energy[i]);
    }
    const double n = static_cast<double>(dens.size());
    std::vector<ZoneReport> out;
    for (int z = 0; z < zones; ++z) {
        ZoneReport r;
        r.zone = z + 1;
        r.lo = z * dP;
        r.hi = (z + 1) * dP;
        r.count = per_zone[z].size();
        const double sum = pairwise_sum(per_zone[z]);
        r.contribution = sum / n;
        r.mean_energy = r.count ? sum / static_cast<double>(r.count) : 0.0;
        out.push_back(r);
    }
    return out;
}

}  // namespace bohm
