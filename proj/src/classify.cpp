#include "bohm/classify.hpp"

#include <algorithm>
#include <cmath>

#include "bohm/errors.hpp"

namespace bohm {

Histogram2D::Histogram2D(GridSpec grid) : grid_(grid) {
    if (grid_.nx < 1 || grid_.ny < 1) throw std::invalid_argument("histogram needs nx, ny >= 1");
    if (!(grid_.bounds.width() > 0.0) || !(grid_.bounds.height() > 0.0))
        throw std::invalid_argument("histogram bounds must have positive extent");
    counts_.assign(static_cast<std::size_t>(grid_.nx) * grid_.ny, 0);
}

long Histogram2D::bin_index(double x, double y) const {
    const auto& b = grid_.bounds;
    if (!b.contains(x, y)) return -1;
    const int ix = std::min(grid_.nx - 1, static_cast<int>((x - b.x_lo) / b.width() * grid_.nx));
    const int iy = std::min(grid_.ny - 1, static_cast<int>((y - b.y_lo) / b.height() * grid_.ny));
    return static_cast<long>(ix) * grid_.ny + iy;
}

void Histogram2D::add(double x, double y) {
    const long i = bin_index(x, y);
    if (i < 0) {
        ++overflow_;
        return;
    }
    ++counts_[static_cast<std::size_t>(i)];
    ++total_;
}

void Histogram2D::add_bin(std::size_t bin, std::uint64_t count) {
    if (bin >= counts_.size()) throw std::out_of_range("histogram bin out of range");
    counts_[bin] += count;
    total_ += count;
}

void Histogram2D::merge(const Histogram2D& other) {
    if (!(other.grid_ == grid_)) throw GridMismatch("cannot merge histograms on different grids");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    total_ += other.total_;
    overflow_ += other.overflow_;
}

std::size_t Histogram2D::occupied() const {
    return static_cast<std::size_t>(
        std::count_if(counts_.begin(), counts_.end(), [](std::uint64_t c) { return c > 0; }));
}

void SparseFootprint::merge_samples(std::vector<std::uint32_t>& idx) {
    if (idx.empty()) return;
    std::sort(idx.begin(), idx.end());
    std::vector<std::pair<std::uint32_t, std::uint32_t>> fresh;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && idx[j] == idx[i]) ++j;
        fresh.emplace_back(idx[i], static_cast<std::uint32_t>(j - i));
        i = j;
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> merged;
    merged.reserve(bins.size() + fresh.size());
    std::size_t a = 0, b = 0;
    while (a < bins.size() || b < fresh.size()) {
        if (b == fresh.size() || (a < bins.size() && bins[a].first < fresh[b].first)) {
            merged.push_back(bins[a++]);
        } else if (a == bins.size() || fresh[b].first < bins[a].first) {
            merged.push_back(fresh[b++]);
        } else {
            merged.emplace_back(bins[a].first, bins[a].second + fresh[b].second);
            ++a;
            ++b;
        }
    }
    bins = std::move(merged);
    idx.clear();
}

void SparseFootprint::add_to(Histogram2D& h) const {
    for (const auto& [bin, c] : bins) h.add_bin(bin, c);
    h.add_overflow(overflow);
}

Histogram2D SparseFootprint::to_histogram(const GridSpec& grid) const {
    Histogram2D h(grid);
    add_to(h);
    return h;
}

std::string to_string(Label l) {
    switch (l) {
        case Label::Ordered: return "ordered";
        case Label::Chaotic: return "chaotic";
        case Label::Undetermined: return "undetermined";
    }
    return "undetermined";
}

Label label_from_string(const std::string& s) {
    if (s == "ordered") return Label::Ordered;
    if (s == "chaotic") return Label::Chaotic;
    if (s == "undetermined") return Label::Undetermined;
    throw ConfigError("unknown trajectory label '" + s + "'");
}

Histogram2D accumulate_footprint(const Trajectory& traj, const GridSpec& grid, double horizon) {
    Histogram2D h(grid);
    for (const auto& s : traj.samples) {
        if (s.t > horizon) break;
        h.add(s.x, s.y);
    }
    return h;
}

Histogram2D accumulate_footprint(const std::vector<Trajectory>& trajs, const GridSpec& grid,
                                 double horizon) {
    Histogram2D h(grid);
    for (const auto& tr : trajs) h.merge(accumulate_footprint(tr, grid, horizon));
    return h;
}

TrajectoryClass classify_fraction(double fraction, const ClassifyThresholds& th, double horizon) {
    TrajectoryClass c;
    c.footprint_fraction = fraction;
    c.horizon = horizon;
    if (fraction >= th.chaotic)
        c.label = Label::Chaotic;
    else if (fraction <= th.ordered)
        c.label = Label::Ordered;
    else
        c.label = Label::Undetermined;
    return c;
}

TrajectoryClass classify_trajectory(const Histogram2D& traj, const Histogram2D& reference,
                                    const ClassifyThresholds& th, double horizon) {
    if (!(traj.grid() == reference.grid()))
        throw GridMismatch("trajectory and reference footprints use different grids");
    const auto ref = reference.occupied();
    if (ref == 0) throw EmptyHistogram("reference footprint is empty");
    return classify_fraction(static_cast<double>(traj.occupied()) / static_cast<double>(ref), th,
                             horizon);
}

double ergodicity_distance(const Histogram2D& a, const Histogram2D& b) {
    if (!(a.grid() == b.grid())) throw GridMismatch("footprints use different grids");
    if (a.total() == 0 || b.total() == 0) throw EmptyHistogram("footprint has no samples");
    const double na = static_cast<double>(a.total()), nb = static_cast<double>(b.total());
    double s = 0.0;
    const auto& ca = a.counts();
    const auto& cb = b.counts();
    for (std::size_t i = 0; i < ca.size(); ++i)
        s += std::abs(static_cast<double>(ca[i]) / na - static_cast<double>(cb[i]) / nb);
    return std::min(1.0, 0.5 * s);
}

double split_half_distance(const Trajectory& traj, const GridSpec& grid) {
    Histogram2D first(grid), second(grid);
    const std::size_t half = traj.samples.size() / 2;
    for (std::size_t i = 0; i < traj.samples.size(); ++i)
        (i < half ? first : second).add(traj.samples[i].x, traj.samples[i].y);
    return ergodicity_distance(first, second);
}

std::string to_pgm(const Histogram2D& h, const std::string& comment) {
    const auto& g = h.grid();
    std::uint64_t maxc = 0;
    for (auto c : h.counts()) maxc = std::max(maxc, c);
    constexpr int kMaxGrey = 255;
    std::string out = "P2\n";
    if (!comment.empty()) out += "# " + comment + "\n";
    out += std::to_string(g.nx) + " " + std::to_string(g.ny) + "\n" + std::to_string(kMaxGrey) + "\n";
    for (int iy = g.ny - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < g.nx; ++ix) {
            const std::uint64_t c = h.count(ix, iy);
            const long v = maxc ? std::lround(static_cast<double>(c) * kMaxGrey / static_cast<double>(maxc)) : 0;
            out += std::to_string(v);
            out += ix + 1 < g.nx ? ' ' : '\n';
        }
    }
    return out;
}

std::string to_csv_grid(const Histogram2D& h) {
    const auto& g = h.grid();
    std::string out;
    for (int iy = g.ny - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < g.nx; ++ix) {
            out += std::to_string(h.count(ix, iy));
            out += ix + 1 < g.nx ? ',' : '\n';
        }
    }
    return out;
}

}  // namespace bohm
