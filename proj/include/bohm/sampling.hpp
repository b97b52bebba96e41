#pragma once

// Initial ensembles: exact Born-rule samples by rejection, and uniform boxes
// for non-equilibrium comparisons.

#include <cstdint>
#include <string>
#include <vector>

#include "bohm/dynamics.hpp"
#include "bohm/wavefunction.hpp"

namespace bohm {

/// Fixed number of RNG streams; quotas are split across these, never across
/// threads, so the output does not depend on the worker count.
inline constexpr std::uint32_t kSampleStreams = 64;

/// SplitMix64-seeded xoshiro256** stream. Streams for the same seed are
/// decorrelated by hashing (seed, stream) into the state.
class StreamRng {
public:
    StreamRng(std::uint64_t seed, std::uint64_t stream);
    std::uint64_t next();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t s_[4];
};

enum class Provenance { Born, UniformSquare, Custom };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct Ensemble {
    std::vector<ParticleState> particles;
    std::uint64_t seed = 0;
    Provenance provenance = Provenance::Custom;
    Region bounds;  // proposal region (Born) or the sampled rectangle (UniformSquare)
    std::uint32_t streams = kSampleStreams;
    double envelope = 0.0;  // Born only: P_max used for acceptance
};

struct BornSampleOptions {
    double t = 0.0;
    unsigned threads = 1;
    int envelope_grid = 200;
    double envelope_margin = 1.05;
};

/// Scanned max of |Psi(t)|^2 on a grid x grid lattice over `region`.
double scan_density_max(const Wavefunction& wf, const Region& region, double t, int grid);

/// Exactly n i.i.d. samples of |Psi(t)|^2 restricted to `region`. Throws
/// EnvelopeBreach if the envelope is still exceeded after refining the scan.
Ensemble born_sample(const Wavefunction& wf, const Region& region, std::size_t n,
                     std::uint64_t seed, const BornSampleOptions& opts = {});

Ensemble uniform_square_sample(std::size_t n, const Region& bounds, std::uint64_t seed);

/// `particle_id,x,y` CSV plus `<path>.meta.json` sidecar carrying seed,
/// provenance, bounds and `config_hash`.
void write_ensemble(const Ensemble& e, const std::string& csv_path, const std::string& config_hash);
/// Reads both files back; returns the recorded config hash via `config_hash`.
Ensemble read_ensemble(const std::string& csv_path, std::string& config_hash);

}  // namespace bohm
