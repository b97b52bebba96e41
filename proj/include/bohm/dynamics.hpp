#pragma once

// Bohmian trajectories: guidance-equation integration and per-particle energies.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bohm/wavefunction.hpp"

namespace bohm {

struct ParticleState {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;
};

struct IntegratorOptions {
    double rtol = 1e-9;
    double atol = 1e-11;
    double min_step = 1e-12;
    double max_step = 1.0;
    double initial_step = 1e-3;
};

struct TrajectorySample {
    double t, x, y;
};

struct IntegratorStats {
    std::uint64_t steps = 0;
    std::uint64_t rejected = 0;
    double min_step_used = 0.0;  // smallest accepted step; 0 before the first step
};

struct Trajectory {
    ParticleState initial;
    double sample_dt = 0.0;
    std::vector<TrajectorySample> samples;
    IntegratorStats stats;
    bool truncated = false;  // StepFloorHit: samples stop before t_end
};

struct EnergyBreakdown {
    double kinetic = 0.0;
    double potential = 0.0;
    double quantum = 0.0;
    double total = 0.0;
};

/// Adaptive Dormand-Prince 5(4) stepper for dr/dt = v(r, t) with PI step
/// control and 4th-order dense output. The full state (including the FSAL
/// derivative and controller memory) is exposed so a run can be checkpointed
/// and resumed bit-for-bit.
class GuidanceIntegrator {
public:
    struct State {
        double t = 0.0;
        std::array<double, 2> y{};
        std::array<double, 2> k1{};  // v(t, y), reused as first stage
        double h = 0.0;
        double err_old = 1e-4;
        IntegratorStats stats;
        bool failed = false;
        // Dense-output coefficients of the last accepted step.
        double t_prev = 0.0, h_prev = 0.0;
        std::array<std::array<double, 2>, 5> dense{};
    };

    GuidanceIntegrator(const Wavefunction& wf, IntegratorOptions opts);

    /// Starts at `initial`; throws NearNode when the start is on a node.
    void reset(const ParticleState& initial);
    /// Runs the flow backwards from `final_state`: internal time tau maps to
    /// physical time final_state.t - tau.
    void reset_reversed(const ParticleState& final_state);
    void restore(const State& s) { st_ = s; }
    const State& state() const { return st_; }

    /// Advances until t >= t_target, calling `on_sample(t, x, y)` for every
    /// sample time origin + k*dt in (last emitted, t_target] via dense output.
    /// Returns false if the step floor was hit (state().failed is set).
    using SampleFn = std::function<void(double, double, double)>;
    bool advance(double t_target, double origin, double dt, std::int64_t& next_index,
                 const SampleFn& on_sample);

private:
    bool step();
    void start(double t, double x, double y);
    bool eval(double t, double x, double y, std::array<double, 2>& out) const;

    const Wavefunction& wf_;
    IntegratorOptions opts_;
    State st_;
    bool reversed_ = false;
    double t_ref_ = 0.0;
};

/// (hbar/M_q) Im(d_q Psi / Psi). Throws NearNode when |Psi|^2 <= kDensityFloor.
std::array<double, 2> velocity_field(const OscillatorConfig& cfg, const Superposition& sup,
                                     double x, double y, double t);

/// Samples at initial.t + k*sample_dt for k = 0.. while <= t_end. A
/// step-floor hit truncates and flags the trajectory rather than throwing.
Trajectory integrate_trajectory(const Wavefunction& wf, const ParticleState& initial, double t_end,
                                double sample_dt, const IntegratorOptions& opts = {});
Trajectory integrate_trajectory(const OscillatorConfig& cfg, const Superposition& sup,
                                const ParticleState& initial, double t_end, double sample_dt,
                                const IntegratorOptions& opts = {});

EnergyBreakdown particle_energy(const Wavefunction& wf, const ParticleState& state);
EnergyBreakdown particle_energy(const OscillatorConfig& cfg, const Superposition& sup,
                                const ParticleState& state);

/// Integrates backwards from the last sample to the initial time and returns
/// the distance to the original starting point.
double reverse_check(const Wavefunction& wf, const Trajectory& traj,
                     const IntegratorOptions& opts = {});

/// CSV with header `t,x,y`, 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

}  // namespace bohm
