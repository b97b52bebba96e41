#include "bohm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "bohm/errors.hpp"

namespace bohm {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense output (Hairer's contd5).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// PI controller constants.
constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kMinFac = 0.2;  // h can shrink at most 5x per rejection
constexpr double kMaxFac = 10.0;

using Vec2 = std::array<double, 2>;

}  // namespace

GuidanceIntegrator::GuidanceIntegrator(const Wavefunction& wf, IntegratorOptions opts)
    : wf_(wf), opts_(opts) {}

bool GuidanceIntegrator::eval(double t, double x, double y, std::array<double, 2>& out) const {
    if (!reversed_) return wf_.try_velocity(x, y, t, out[0], out[1]);
    if (!wf_.try_velocity(x, y, t_ref_ - t, out[0], out[1])) return false;
    out[0] = -out[0];
    out[1] = -out[1];
    return true;
}

void GuidanceIntegrator::start(double t, double x, double y) {
    st_ = State{};
    st_.t = t;
    st_.y = {x, y};
    st_.h = opts_.initial_step;
    if (!eval(t, x, y, st_.k1)) throw NearNode(x, y, reversed_ ? t_ref_ - t : t);
    st_.t_prev = st_.t;
    st_.h_prev = 0.0;
    st_.dense[0] = st_.y;
}

void GuidanceIntegrator::reset(const ParticleState& initial) {
    reversed_ = false;
    t_ref_ = 0.0;
    start(initial.t, initial.x, initial.y);
}

void GuidanceIntegrator::reset_reversed(const ParticleState& final_state) {
    reversed_ = true;
    t_ref_ = final_state.t;
    start(0.0, final_state.x, final_state.y);
}

bool GuidanceIntegrator::step() {
    auto rhs = [&](double t, const Vec2& y, Vec2& out) { return eval(t, y[0], y[1], out); };
    const double t = st_.t;
    const Vec2 y = st_.y;
    const Vec2 k1 = st_.k1;
    double h = std::min(st_.h, opts_.max_step);

    while (true) {
        if (h < opts_.min_step) {
            st_.failed = true;
            return false;
        }
        Vec2 k2, k3, k4, k5, k6, k7, y1, tmp;
        bool ok = true;
        for (int i = 0; i < 2; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        ok = ok && rhs(t + c2 * h, tmp, k2);
        if (ok) {
            for (int i = 0; i < 2; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
            ok = rhs(t + c3 * h, tmp, k3);
        }
        if (ok) {
            for (int i = 0; i < 2; ++i)
                tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            ok = rhs(t + c4 * h, tmp, k4);
        }
        if (ok) {
            for (int i = 0; i < 2; ++i)
                tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            ok = rhs(t + c5 * h, tmp, k5);
        }
        if (ok) {
            for (int i = 0; i < 2; ++i)
                tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                     a65 * k5[i]);
            ok = rhs(t + h, tmp, k6);
        }
        if (ok) {
            for (int i = 0; i < 2; ++i)
                y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] +
                                    a76 * k6[i]);
            ok = rhs(t + h, y1, k7);
        }
        if (!ok) {
            // A stage landed inside the node guard: retreat hard.
            ++st_.stats.rejected;
            h *= 0.25;
            continue;
        }

        double err = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7[i]);
            const double sk = opts_.atol + opts_.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
            err += (e / sk) * (e / sk);
        }
        err = std::sqrt(err / 2.0);
        if (!std::isfinite(err)) {
            ++st_.stats.rejected;
            h *= kMinFac;
            continue;
        }

        const double fac11 = std::pow(err, kExpo);
        if (err <= 1.0) {
            double fac = fac11 / std::pow(st_.err_old, kBeta);
            fac = std::clamp(fac / kSafety, 1.0 / kMaxFac, 1.0 / kMinFac);
            st_.err_old = std::max(err, 1e-4);

            auto& r = st_.dense;
            for (int i = 0; i < 2; ++i) {
                const double ydiff = y1[i] - y[i];
                const double bspl = h * k1[i] - ydiff;
                r[0][i] = y[i];
                r[1][i] = ydiff;
                r[2][i] = bspl;
                r[3][i] = ydiff - h * k7[i] - bspl;
                r[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                               d7 * k7[i]);
            }
            st_.t_prev = t;
            st_.h_prev = h;

            ++st_.stats.steps;
            if (st_.stats.min_step_used == 0.0 || h < st_.stats.min_step_used)
                st_.stats.min_step_used = h;
            st_.t = t + h;
            st_.y = y1;
            st_.k1 = k7;
            st_.h = h / fac;
            return true;
        }
        ++st_.stats.rejected;
        h /= std::min(1.0 / kMinFac, fac11 / kSafety);
    }
}

bool GuidanceIntegrator::advance(double t_target, double origin, double dt,
                                 std::int64_t& next_index, const SampleFn& on_sample) {
    while (true) {
        const double ts = origin + static_cast<double>(next_index) * dt;
        if (ts > t_target) return true;
        if (ts <= st_.t) {
            double x, y;
            if (ts == st_.t) {
                x = st_.y[0];
                y = st_.y[1];
            } else {
                const auto& r = st_.dense;
                const double th = (ts - st_.t_prev) / st_.h_prev;
                const double th1 = 1.0 - th;
                x = r[0][0] + th * (r[1][0] + th1 * (r[2][0] + th * (r[3][0] + th1 * r[4][0])));
                y = r[0][1] + th * (r[1][1] + th1 * (r[2][1] + th * (r[3][1] + th1 * r[4][1])));
            }
            on_sample(ts, x, y);
            ++next_index;
            continue;
        }
        if (st_.failed || !step()) return false;
    }
}

std::array<double, 2> velocity_field(const OscillatorConfig& cfg, const Superposition& sup,
                                     double x, double y, double t) {
    return Wavefunction(cfg, sup).velocity(x, y, t);
}

Trajectory integrate_trajectory(const Wavefunction& wf, const ParticleState& initial, double t_end,
                                double sample_dt, const IntegratorOptions& opts) {
    if (!(sample_dt > 0.0)) throw std::invalid_argument("sample_dt must be > 0");
    if (!(t_end > initial.t)) throw std::invalid_argument("t_end must exceed the initial time");
    Trajectory traj;
    traj.initial = initial;
    traj.sample_dt = sample_dt;
    const auto last = static_cast<std::int64_t>(std::floor((t_end - initial.t) / sample_dt + 1e-9));
    traj.samples.reserve(static_cast<std::size_t>(last) + 1);

    GuidanceIntegrator integ(wf, opts);
    integ.reset(initial);
    std::int64_t next = 0;
    const bool ok = integ.advance(initial.t + static_cast<double>(last) * sample_dt, initial.t,
                                  sample_dt, next, [&](double t, double x, double y) {
                                      traj.samples.push_back({t, x, y});
                                  });
    traj.truncated = !ok;
    traj.stats = integ.state().stats;
    return traj;
}

Trajectory integrate_trajectory(const OscillatorConfig& cfg, const Superposition& sup,
                                const ParticleState& initial, double t_end, double sample_dt,
                                const IntegratorOptions& opts) {
    const Wavefunction wf(cfg, sup);
    return integrate_trajectory(wf, initial, t_end, sample_dt, opts);
}

EnergyBreakdown particle_energy(const Wavefunction& wf, const ParticleState& s) {
    const auto f = wf.field(s.x, s.y, s.t);
    const double dens = std::norm(f.value);
    if (!(dens > kDensityFloor)) throw NearNode(s.x, s.y, s.t);
    const auto& cfg = wf.config();
    const cplx conj_psi = std::conj(f.value);
    const double vx = cfg.hbar / cfg.mass_x * (conj_psi * f.grad[0]).imag() / dens;
    const double vy = cfg.hbar / cfg.mass_y * (conj_psi * f.grad[1]).imag() / dens;
    EnergyBreakdown e;
    e.kinetic = 0.5 * (cfg.mass_x * vx * vx + cfg.mass_y * vy * vy);
    e.potential = cfg.potential(s.x, s.y);
    e.quantum = wf.quantum_potential(f, s.x, s.y, s.t);
    e.total = e.kinetic + e.potential + e.quantum;
    return e;
}

EnergyBreakdown particle_energy(const OscillatorConfig& cfg, const Superposition& sup,
                                const ParticleState& state) {
    return particle_energy(Wavefunction(cfg, sup), state);
}

double reverse_check(const Wavefunction& wf, const Trajectory& traj, const IntegratorOptions& opts) {
    if (traj.truncated) throw std::invalid_argument("reverse_check needs a complete trajectory");
    if (traj.samples.empty()) throw std::invalid_argument("reverse_check needs samples");
    const auto& end = traj.samples.back();
    const double span = end.t - traj.initial.t;
    if (span <= 0.0) return 0.0;

    GuidanceIntegrator integ(wf, opts);
    integ.reset_reversed({end.x, end.y, end.t});
    double x = end.x, y = end.y;
    std::int64_t next = 1;
    // One "sample" at reversed time `span`, i.e. physical time initial.t.
    if (!integ.advance(span, 0.0, span, next, [&](double, double sx, double sy) {
            x = sx;
            y = sy;
        }))
        throw StepFloorHit("reverse integration hit the step floor");
    return std::hypot(x - traj.initial.x, y - traj.initial.y);
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "t,x,y\n";
    char buf[96];
    for (const auto& s : traj.samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s.t, s.x, s.y);
        out << buf;
    }
}

}  // namespace bohm
