#pragma once

// The sample -> evolve -> classify -> report pipeline. Stages talk through
// files in one output directory; every file records the config hash.

#include <cstdint>
#include <string>
#include <vector>

#include "bohm/classify.hpp"
#include "bohm/config.hpp"
#include "bohm/dynamics.hpp"
#include "bohm/wavefunction.hpp"

namespace bohm {

enum class ParticleFlag : std::uint8_t { None = 0, NodeAtStart = 1, StepFloor = 2 };
std::string to_string(ParticleFlag f);

/// What one particle leaves behind after evolution: positions every
/// observable_dt and the occupancy of every footprint_dt sample.
struct ParticleRecord {
    std::vector<TrajectorySample> observed;
    SparseFootprint footprint;
    ParticleFlag flag = ParticleFlag::None;
    IntegratorStats stats;
};

struct EvolveSpec {
    double horizon = 1000.0;
    double footprint_dt = 0.05;
    double observable_dt = 50.0;
    double checkpoint_every = 1000.0;
    IntegratorOptions options;
    GridSpec grid;
    unsigned threads = 1;
};

EvolveSpec evolve_spec(const ExperimentConfig& cfg, const Wavefunction& wf, unsigned threads);

/// In-memory evolution of a whole ensemble (no checkpoints).
std::vector<ParticleRecord> evolve_particles(const Wavefunction& wf,
                                             const std::vector<ParticleState>& initial,
                                             const EvolveSpec& spec);

struct RunOptions {
    std::string out_dir = "out";
    unsigned threads = 1;
    /// Stop (as if killed) after the first checkpoint at or beyond this time; < 0 disables.
    double stop_at = -1.0;
};

/// Writes ensemble.csv (+ .meta.json) and config.json.
void cmd_sample(const ExperimentConfig& cfg, const RunOptions& opts);
/// Integrates the ensemble to the horizon, resuming from checkpoint.bin when
/// present. Writes trajectories.csv, flagged.csv, footprints.bin, store.json.
/// Returns false when stopped early by `stop_at`.
bool cmd_evolve(const ExperimentConfig& cfg, const RunOptions& opts);
/// classification.csv, distances.csv and footprint heatmaps (PGM + CSV).
void cmd_classify(const ExperimentConfig& cfg, const RunOptions& opts);
/// Deviation tables, energy convergence, zones, classification summary and
/// few-trajectory averages. Writes nothing unless every input is present and consistent.
void cmd_report(const ExperimentConfig& cfg, const RunOptions& opts);
void cmd_run(const ExperimentConfig& cfg, const RunOptions& opts);

}  // namespace bohm
