#pragma once

// Long-time occupancy footprints ("colorplots") of trajectories and the
// ordered / chaotic labelling built on them.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bohm/dynamics.hpp"
#include "bohm/wavefunction.hpp"

namespace bohm {

struct GridSpec {
    Region bounds;
    int nx = 200;
    int ny = 200;
    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

class Histogram2D {
public:
    explicit Histogram2D(GridSpec grid);

    const GridSpec& grid() const { return grid_; }
    /// Flat bin index (ix * ny + iy), or -1 outside the bounds.
    long bin_index(double x, double y) const;
    /// Increments the bin holding (x, y); outside samples go to overflow().
    void add(double x, double y);
    void add_bin(std::size_t bin, std::uint64_t count = 1);
    void merge(const Histogram2D& other);

    std::uint64_t count(int ix, int iy) const { return counts_[static_cast<std::size_t>(ix) * grid_.ny + iy]; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }
    /// Samples inside the bounds; equals the sum of counts().
    std::uint64_t total() const { return total_; }
    std::uint64_t overflow() const { return overflow_; }
    void add_overflow(std::uint64_t n) { overflow_ += n; }
    std::size_t occupied() const;

private:
    GridSpec grid_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
    std::uint64_t overflow_ = 0;
};

/// Sorted (bin, count) list; the compact per-particle form of a footprint.
struct SparseFootprint {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> bins;
    std::uint64_t overflow = 0;

    /// Adds one sample per entry of `bin_indices` (which is sorted in place).
    void merge_samples(std::vector<std::uint32_t>& bin_indices);
    std::size_t occupied() const { return bins.size(); }
    void add_to(Histogram2D& h) const;
    Histogram2D to_histogram(const GridSpec& grid) const;
};

enum class Label { Ordered, Chaotic, Undetermined };
std::string to_string(Label l);
Label label_from_string(const std::string& s);

struct ClassifyThresholds {
    double chaotic = 0.5;
    double ordered = 0.15;
};

struct TrajectoryClass {
    Label label = Label::Undetermined;
    double footprint_fraction = 0.0;
    double horizon = 0.0;
};

/// Footprint of the samples of `traj` with t <= horizon.
Histogram2D accumulate_footprint(const Trajectory& traj, const GridSpec& grid, double horizon);
/// Merged footprint of several trajectories.
Histogram2D accumulate_footprint(const std::vector<Trajectory>& trajs, const GridSpec& grid,
                                 double horizon);

/// footprint_fraction = occupied bins of `traj` / occupied bins of `reference`.
/// Throws GridMismatch when the grids differ.
TrajectoryClass classify_trajectory(const Histogram2D& traj, const Histogram2D& reference,
                                    const ClassifyThresholds& th = {}, double horizon = 0.0);
TrajectoryClass classify_fraction(double footprint_fraction, const ClassifyThresholds& th,
                                  double horizon);

/// Total-variation distance between the normalised histograms, in [0, 1].
/// Throws GridMismatch or EmptyHistogram.
double ergodicity_distance(const Histogram2D& a, const Histogram2D& b);

/// Distance between the footprints of the first and second half (by sample
/// count) of one trajectory; the sampling-noise floor for that horizon.
double split_half_distance(const Trajectory& traj, const GridSpec& grid);

/// Plain-text PGM (P2), row 0 at the top (largest y), grey level linear in count.
std::string to_pgm(const Histogram2D& h, const std::string& comment = {});
/// `iy` rows (top = largest y) of comma-separated counts.
std::string to_csv_grid(const Histogram2D& h);

}  // namespace bohm
