#include "bohm/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include "bohm/errors.hpp"
#include "bohm/io.hpp"
#include "bohm/observables.hpp"
#include "bohm/parallel.hpp"
#include "bohm/sampling.hpp"

namespace bohm {

namespace fs = std::filesystem;

namespace {

constexpr char kCheckpointMagic[8] = {'B', 'O', 'H', 'M', 'C', 'K', 'P', '1'};
constexpr char kFootprintMagic[8] = {'B', 'O', 'H', 'M', 'F', 'P', 'T', '1'};

class ByteWriter {
public:
    template <class T>
    void put(T v) {
        static_assert(std::is_arithmetic_v<T>);
        buf_.append(reinterpret_cast<const char*>(&v), sizeof v);
    }
    void bytes(std::string_view s) { buf_.append(s); }
    void seal() { put(io::fnv1a64(buf_)); }
    const std::string& str() const { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(std::string data, const std::string& name) : data_(std::move(data)), name_(name) {
        if (data_.size() < sizeof(std::uint64_t)) fail("truncated");
        const std::size_t body = data_.size() - sizeof(std::uint64_t);
        std::uint64_t sum;
        std::memcpy(&sum, data_.data() + body, sizeof sum);
        if (sum != io::fnv1a64(std::string_view(data_).substr(0, body))) fail("checksum mismatch");
        end_ = body;
    }
    template <class T>
    T get() {
        T v;
        if (pos_ + sizeof v > end_) fail("truncated");
        std::memcpy(&v, data_.data() + pos_, sizeof v);
        pos_ += sizeof v;
        return v;
    }
    std::string bytes(std::size_t n) {
        if (pos_ + n > end_) fail("truncated");
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    void expect_end() const {
        if (pos_ != end_) fail("trailing bytes");
    }
    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(name_ + ": corrupt (" + what + ")"); }

private:
    std::string data_;
    std::string name_;
    std::size_t pos_ = 0, end_ = 0;
};

void put_footprint(ByteWriter& w, const SparseFootprint& fp) {
    w.put<std::uint64_t>(fp.overflow);
    w.put<std::uint64_t>(fp.bins.size());
    for (const auto& [b, c] : fp.bins) {
        w.put<std::uint32_t>(b);
        w.put<std::uint32_t>(c);
    }
}

SparseFootprint get_footprint(ByteReader& r, std::size_t n_bins) {
    SparseFootprint fp;
    fp.overflow = r.get<std::uint64_t>();
    const auto n = r.get<std::uint64_t>();
    if (n > n_bins) r.fail("footprint larger than grid");
    fp.bins.resize(n);
    for (auto& [b, c] : fp.bins) {
        b = r.get<std::uint32_t>();
        c = r.get<std::uint32_t>();
        if (b >= n_bins) r.fail("bin out of range");
    }
    return fp;
}

struct ParticleRun {
    GuidanceIntegrator::State st;
    std::int64_t next_index = 0;
    bool started = false;
    bool done = false;
    ParticleRecord rec;
};

struct Cadence {
    std::int64_t last;   // index of the final footprint sample
    std::int64_t ratio;  // footprint samples per observable sample
};

Cadence cadence(const EvolveSpec& spec) {
    if (!(spec.footprint_dt > 0.0) || !(spec.observable_dt > 0.0) || !(spec.horizon > 0.0))
        throw std::invalid_argument("evolve: horizon and cadences must be > 0");
    const double r = spec.observable_dt / spec.footprint_dt;
    if (std::abs(r - std::round(r)) > 1e-9 * r || std::round(r) < 1.0)
        throw std::invalid_argument("evolve: observable_dt must be a multiple of footprint_dt");
    return {static_cast<std::int64_t>(std::floor(spec.horizon / spec.footprint_dt + 1e-9)),
            static_cast<std::int64_t>(std::llround(r))};
}

void advance_particle(const Wavefunction& wf, const EvolveSpec& spec, const Cadence& cad,
                      const Histogram2D& indexer, const ParticleState& initial, ParticleRun& run,
                      double slice_end) {
    if (run.done) return;
    GuidanceIntegrator gi(wf, spec.options);
    if (!run.started) {
        try {
            gi.reset(initial);
        } catch (const NearNode&) {
            run.rec.flag = ParticleFlag::NodeAtStart;
            run.done = true;
            return;
        }
        run.started = true;
    } else {
        gi.restore(run.st);
    }
    const double origin = initial.t;
    const auto k_end = std::min(cad.last, static_cast<std::int64_t>(
                                              std::floor((slice_end - origin) / spec.footprint_dt + 1e-9)));
    std::vector<std::uint32_t> bins;
    bins.reserve(static_cast<std::size_t>(std::max<std::int64_t>(0, k_end - run.next_index + 1)));
    auto& rec = run.rec;
    const bool ok = gi.advance(
        origin + static_cast<double>(k_end) * spec.footprint_dt, origin, spec.footprint_dt, run.next_index,
        [&](double t, double x, double y) {
            const long b = indexer.bin_index(x, y);
            if (b < 0)
                ++rec.footprint.overflow;
            else
                bins.push_back(static_cast<std::uint32_t>(b));
            if (run.next_index % cad.ratio == 0) rec.observed.push_back({t, x, y});
        });
    rec.footprint.merge_samples(bins);
    run.st = gi.state();
    rec.stats = run.st.stats;
    if (!ok) {
        rec.flag = ParticleFlag::StepFloor;
        run.done = true;
    }
    if (run.next_index > cad.last) run.done = true;
}

std::size_t slice_count(const EvolveSpec& spec) {
    return static_cast<std::size_t>(std::max(1.0, std::ceil(spec.horizon / spec.checkpoint_every - 1e-9)));
}

double slice_end(const EvolveSpec& spec, std::size_t s) {
    return std::min(static_cast<double>(s + 1) * spec.checkpoint_every, spec.horizon);
}

// ---- files ---------------------------------------------------------------

std::string path_in(const RunOptions& o, const std::string& name) { return (fs::path(o.out_dir) / name).string(); }

std::string hash_line(const std::string& hash) { return "# config_hash=" + hash + "\n"; }

/// Streams text to `<path>.tmp` and renames on close.
class AtomicWriter {
public:
    explicit AtomicWriter(std::string path) : path_(std::move(path)), tmp_(path_ + ".tmp") {
        f_ = std::fopen(tmp_.c_str(), "wb");
        if (!f_) throw ConfigError("cannot write " + path_);
    }
    ~AtomicWriter() {
        if (f_) {
            std::fclose(f_);
            std::remove(tmp_.c_str());
        }
    }
    void write(std::string_view s) {
        if (std::fwrite(s.data(), 1, s.size(), f_) != s.size()) throw ConfigError("short write to " + path_);
    }
    void commit() {
        const int rc = std::fclose(f_);
        f_ = nullptr;
        if (rc != 0 || std::rename(tmp_.c_str(), path_.c_str()) != 0) throw ConfigError("cannot write " + path_);
    }

private:
    std::string path_, tmp_;
    std::FILE* f_ = nullptr;
};

void write_checkpoint(const std::string& path, const std::string& hash, std::size_t slices_done,
                      const std::vector<ParticleRun>& runs) {
    ByteWriter w;
    w.bytes(std::string_view(kCheckpointMagic, 8));
    w.bytes(hash);
    w.put<std::uint64_t>(slices_done);
    w.put<std::uint64_t>(runs.size());
    for (const auto& r : runs) {
        const auto& s = r.st;
        w.put(s.t);
        for (double v : s.y) w.put(v);
        for (double v : s.k1) w.put(v);
        w.put(s.h);
        w.put(s.err_old);
        w.put<std::uint64_t>(s.stats.steps);
        w.put<std::uint64_t>(s.stats.rejected);
        w.put(s.stats.min_step_used);
        w.put<std::uint8_t>(s.failed);
        w.put(s.t_prev);
        w.put(s.h_prev);
        for (const auto& row : s.dense)
            for (double v : row) w.put(v);
        w.put<std::int64_t>(r.next_index);
        w.put<std::uint8_t>(r.started);
        w.put<std::uint8_t>(r.done);
        w.put<std::uint8_t>(static_cast<std::uint8_t>(r.rec.flag));
        w.put<std::uint64_t>(r.rec.observed.size());
        for (const auto& o : r.rec.observed) {
            w.put(o.t);
            w.put(o.x);
            w.put(o.y);
        }
        put_footprint(w, r.rec.footprint);
    }
    w.seal();
    io::write_file_atomic(path, w.str());
}

std::size_t read_checkpoint(const std::string& path, const std::string& hash, std::size_t n_bins,
                            std::vector<ParticleRun>& runs) {
    ByteReader r(io::read_file(path), path);
    if (r.bytes(8) != std::string_view(kCheckpointMagic, 8)) r.fail("bad magic");
    if (r.bytes(hash.size()) != hash) throw ConfigError(path + ": written by a different config");
    const auto slices = r.get<std::uint64_t>();
    if (r.get<std::uint64_t>() != runs.size()) r.fail("particle count differs from the ensemble");
    for (auto& run : runs) {
        auto& s = run.st;
        s.t = r.get<double>();
        for (double& v : s.y) v = r.get<double>();
        for (double& v : s.k1) v = r.get<double>();
        s.h = r.get<double>();
        s.err_old = r.get<double>();
        s.stats.steps = r.get<std::uint64_t>();
        s.stats.rejected = r.get<std::uint64_t>();
        s.stats.min_step_used = r.get<double>();
        s.failed = r.get<std::uint8_t>() != 0;
        s.t_prev = r.get<double>();
        s.h_prev = r.get<double>();
        for (auto& row : s.dense)
            for (double& v : row) v = r.get<double>();
        run.next_index = r.get<std::int64_t>();
        run.started = r.get<std::uint8_t>() != 0;
        run.done = r.get<std::uint8_t>() != 0;
        const auto flag = r.get<std::uint8_t>();
        if (flag > 2) r.fail("bad flag");
        run.rec.flag = static_cast<ParticleFlag>(flag);
        run.rec.stats = s.stats;
        const auto n_obs = r.get<std::uint64_t>();
        run.rec.observed.resize(n_obs);
        for (auto& o : run.rec.observed) {
            o.t = r.get<double>();
            o.x = r.get<double>();
            o.y = r.get<double>();
        }
        run.rec.footprint = get_footprint(r, n_bins);
    }
    r.expect_end();
    return slices;
}

struct StoreInfo {
    std::string hash;
    std::size_t particles = 0;
    double horizon = 0.0;
    GridSpec grid;
};

StoreInfo read_store_json(const RunOptions& o) {
    const auto path = path_in(o, "store.json");
    if (!fs::exists(path)) throw ConfigError(path + ": missing (run evolve first)");
    StoreInfo s;
    try {
        const auto j = nlohmann::json::parse(io::read_file(path));
        if (!j.at("complete").get<bool>()) throw ConfigError(path + ": store is incomplete");
        s.hash = j.at("config_hash").get<std::string>();
        s.particles = j.at("particles").get<std::size_t>();
        s.horizon = j.at("horizon").get<double>();
        const auto b = j.at("grid").at("bounds").get<std::vector<double>>();
        if (b.size() != 4) throw ConfigError(path + ": grid.bounds needs 4 entries");
        s.grid = {{b[0], b[1], b[2], b[3]}, j.at("grid").at("nx").get<int>(), j.at("grid").at("ny").get<int>()};
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (s.particles == 0) throw ConfigError(path + ": store is empty");
    return s;
}

void write_footprints(const std::string& path, const std::string& hash, const GridSpec& grid,
                      const std::vector<ParticleRun>& runs) {
    ByteWriter w;
    w.bytes(std::string_view(kFootprintMagic, 8));
    w.bytes(hash);
    w.put(grid.bounds.x_lo);
    w.put(grid.bounds.x_hi);
    w.put(grid.bounds.y_lo);
    w.put(grid.bounds.y_hi);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(grid.nx));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(grid.ny));
    w.put<std::uint64_t>(runs.size());
    for (const auto& r : runs) {
        w.put<std::uint8_t>(static_cast<std::uint8_t>(r.rec.flag));
        put_footprint(w, r.rec.footprint);
    }
    w.seal();
    io::write_file_atomic(path, w.str());
}

struct FootprintFile {
    GridSpec grid;
    std::vector<ParticleFlag> flags;
    std::vector<SparseFootprint> footprints;
};

FootprintFile read_footprints(const std::string& path, const std::string& hash) {
    if (!fs::exists(path)) throw ConfigError(path + ": missing (run evolve first)");
    ByteReader r(io::read_file(path), path);
    if (r.bytes(8) != std::string_view(kFootprintMagic, 8)) r.fail("bad magic");
    if (r.bytes(hash.size()) != hash) throw ConfigError(path + ": config hash differs from the run");
    FootprintFile f;
    f.grid.bounds.x_lo = r.get<double>();
    f.grid.bounds.x_hi = r.get<double>();
    f.grid.bounds.y_lo = r.get<double>();
    f.grid.bounds.y_hi = r.get<double>();
    f.grid.nx = static_cast<int>(r.get<std::uint32_t>());
    f.grid.ny = static_cast<int>(r.get<std::uint32_t>());
    const auto n = r.get<std::uint64_t>();
    const std::size_t n_bins = static_cast<std::size_t>(f.grid.nx) * f.grid.ny;
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto flag = r.get<std::uint8_t>();
        if (flag > 2) r.fail("bad flag");
        f.flags.push_back(static_cast<ParticleFlag>(flag));
        f.footprints.push_back(get_footprint(r, n_bins));
    }
    r.expect_end();
    return f;
}

Ensemble load_ensemble(const ExperimentConfig& cfg, const RunOptions& o) {
    const auto path = path_in(o, "ensemble.csv");
    if (!fs::exists(path)) throw ConfigError(path + ": missing ensemble (run sample first)");
    std::string hash;
    auto e = read_ensemble(path, hash);
    if (hash != cfg.hash()) throw ConfigError(path + ": config hash " + hash + " differs from " + cfg.hash());
    if (e.particles.empty()) throw ConfigError(path + ": ensemble is empty");
    return e;
}

/// Observed positions per particle from trajectories.csv.
std::vector<std::vector<TrajectorySample>> read_trajectories(const std::string& path, const std::string& hash,
                                                             std::size_t n) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": missing (run evolve first)");
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&] {
        if (!std::getline(in, line)) return false;
        ++lineno;
        return true;
    };
    if (!next_line() || line != "# config_hash=" + hash)
        throw ConfigError(path + ": config hash differs from the run");
    if (!next_line() || line != "particle_id,t,x,y") throw ConfigError(path + ": bad header");
    std::vector<std::vector<TrajectorySample>> out(n);
    while (next_line()) {
        if (line.empty()) continue;
        const auto cells = io::split(line);
        if (cells.size() != 4) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 4 fields");
        const auto id = io::parse_u64(cells[0]);
        if (id >= n) throw ConfigError(path + ":" + std::to_string(lineno) + ": particle id out of range");
        out[id].push_back({io::parse_double(cells[1]), io::parse_double(cells[2]), io::parse_double(cells[3])});
    }
    return out;
}

std::string fmt(double v) { return std::isfinite(v) ? io::num(v) : "nan"; }

}  // namespace

std::string to_string(ParticleFlag f) {
    switch (f) {
        case ParticleFlag::None: return "none";
        case ParticleFlag::NodeAtStart: return "node_at_start";
        case ParticleFlag::StepFloor: return "step_floor";
    }
    return "none";
}

EvolveSpec evolve_spec(const ExperimentConfig& cfg, const Wavefunction& wf, unsigned threads) {
    EvolveSpec s;
    s.horizon = cfg.integration.horizon;
    s.footprint_dt = cfg.integration.footprint_dt;
    s.observable_dt = cfg.integration.observable_dt;
    s.checkpoint_every = cfg.integration.checkpoint_every;
    s.options = cfg.integration.options;
    s.grid = {working_region(wf), cfg.analysis.grid_nx, cfg.analysis.grid_ny};
    s.threads = threads;
    return s;
}

std::vector<ParticleRecord> evolve_particles(const Wavefunction& wf, const std::vector<ParticleState>& initial,
                                             const EvolveSpec& spec) {
    const auto cad = cadence(spec);
    const Histogram2D indexer(spec.grid);
    const auto slices = slice_count(spec);
    std::vector<ParticleRecord> out(initial.size());
    parallel_for(initial.size(), spec.threads, [&](std::size_t i) {
        ParticleRun run;
        for (std::size_t s = 0; s < slices && !run.done; ++s)
            advance_particle(wf, spec, cad, indexer, initial[i], run, slice_end(spec, s));
        out[i] = std::move(run.rec);
    });
    return out;
}

void cmd_sample(const ExperimentConfig& cfg, const RunOptions& o) {
    fs::create_directories(o.out_dir);
    const Wavefunction wf(cfg.oscillator, cfg.superposition());
    Ensemble e;
    if (cfg.ensemble.kind == EnsembleSpec::Kind::Born) {
        BornSampleOptions bo;
        bo.threads = o.threads;
        e = born_sample(wf, working_region(wf), cfg.ensemble.n, cfg.ensemble.seed, bo);
    } else {
        e = uniform_square_sample(cfg.ensemble.n, cfg.ensemble.bounds, cfg.ensemble.seed);
    }
    auto j = cfg.to_json();
    j["config_hash"] = cfg.hash();
    io::write_file_atomic(path_in(o, "config.json"), j.dump(2) + "\n");
    write_ensemble(e, path_in(o, "ensemble.csv"), cfg.hash());
}

bool cmd_evolve(const ExperimentConfig& cfg, const RunOptions& o) {
    const auto ens = load_ensemble(cfg, o);
    const auto hash = cfg.hash();
    const Wavefunction wf(cfg.oscillator, cfg.superposition());
    const auto spec = evolve_spec(cfg, wf, o.threads);
    const auto cad = cadence(spec);
    const Histogram2D indexer(spec.grid);
    const auto n_bins = static_cast<std::size_t>(spec.grid.nx) * spec.grid.ny;
    const auto slices = slice_count(spec);
    const auto ckpt = path_in(o, "checkpoint.bin");

    std::vector<ParticleRun> runs(ens.particles.size());
    std::size_t done_slices = 0;
    if (fs::exists(ckpt)) done_slices = read_checkpoint(ckpt, hash, n_bins, runs);
    if (done_slices > slices) throw ConfigError(ckpt + ": more slices than the horizon allows");

    for (std::size_t s = done_slices; s < slices; ++s) {
        const double t_end = slice_end(spec, s);
        parallel_for(runs.size(), o.threads, [&](std::size_t i) {
            advance_particle(wf, spec, cad, indexer, ens.particles[i], runs[i], t_end);
        });
        if (s + 1 < slices) {
            write_checkpoint(ckpt, hash, s + 1, runs);
            if (o.stop_at >= 0.0 && t_end >= o.stop_at) return false;
        }
    }

    AtomicWriter traj(path_in(o, "trajectories.csv"));
    traj.write(hash_line(hash) + "particle_id,t,x,y\n");
    std::string row;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        row.clear();
        const auto id = std::to_string(i);
        for (const auto& s : runs[i].rec.observed) row += id + ',' + io::num(s.t) + ',' + io::num(s.x) + ',' + io::num(s.y) + '\n';
        traj.write(row);
    }
    traj.commit();

    std::string flagged = hash_line(hash) + "particle_id,x0,y0,reason,t_stop\n";
    std::size_t n_flagged = 0;
    std::uint64_t steps = 0, rejected = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        steps += r.rec.stats.steps;
        rejected += r.rec.stats.rejected;
        if (r.rec.flag == ParticleFlag::None) continue;
        ++n_flagged;
        const double t_stop = r.rec.flag == ParticleFlag::NodeAtStart ? ens.particles[i].t : r.st.t;
        flagged += std::to_string(i) + ',' + io::num(ens.particles[i].x) + ',' + io::num(ens.particles[i].y) + ',' +
                   to_string(r.rec.flag) + ',' + io::num(t_stop) + '\n';
    }
    io::write_file_atomic(path_in(o, "flagged.csv"), flagged);
    write_footprints(path_in(o, "footprints.bin"), hash, spec.grid, runs);

    nlohmann::ordered_json store;
    store["config_hash"] = hash;
    store["complete"] = true;
    store["particles"] = runs.size();
    store["flagged"] = n_flagged;
    store["horizon"] = spec.horizon;
    store["footprint_dt"] = spec.footprint_dt;
    store["observable_dt"] = spec.observable_dt;
    store["grid"] = {{"bounds", {spec.grid.bounds.x_lo, spec.grid.bounds.x_hi, spec.grid.bounds.y_lo, spec.grid.bounds.y_hi}},
                     {"nx", spec.grid.nx},
                     {"ny", spec.grid.ny}};
    store["integrator"] = {{"steps", steps}, {"rejected", rejected}};
    io::write_file_atomic(path_in(o, "store.json"), store.dump(2) + "\n");
    fs::remove(ckpt);
    return true;
}

void cmd_classify(const ExperimentConfig& cfg, const RunOptions& o) {
    const auto hash = cfg.hash();
    const auto info = read_store_json(o);
    if (info.hash != hash) throw ConfigError("store.json: config hash " + info.hash + " differs from " + hash);
    const auto ens = load_ensemble(cfg, o);
    const auto fp = read_footprints(path_in(o, "footprints.bin"), hash);
    if (fp.footprints.size() != ens.particles.size()) throw ConfigError("footprints.bin: particle count differs from the ensemble");

    Histogram2D all(fp.grid), chaotic(fp.grid), ordered(fp.grid), t0(fp.grid);
    for (const auto& f : fp.footprints) f.add_to(all);
    for (const auto& p : ens.particles) t0.add(p.x, p.y);
    const auto ref = all.occupied();
    if (ref == 0) throw EmptyHistogram("reference footprint is empty");

    std::string csv = hash_line(hash) + "particle_id,label,footprint_fraction\n";
    for (std::size_t i = 0; i < fp.footprints.size(); ++i) {
        const auto& f = fp.footprints[i];
        TrajectoryClass c;
        if (fp.flags[i] != ParticleFlag::NodeAtStart)
            c = classify_fraction(static_cast<double>(f.occupied()) / static_cast<double>(ref),
                                  cfg.analysis.thresholds, info.horizon);
        if (c.label == Label::Chaotic) f.add_to(chaotic);
        if (c.label == Label::Ordered) f.add_to(ordered);
        csv += std::to_string(i) + ',' + to_string(c.label) + ',' + io::num(c.footprint_fraction) + '\n';
    }

    auto distance = [](const Histogram2D& a, const Histogram2D& b) {
        return a.total() && b.total() ? ergodicity_distance(a, b) : std::numeric_limits<double>::quiet_NaN();
    };
    std::string dist = hash_line(hash) + "pair,distance\n";
    dist += "all_vs_chaotic," + fmt(distance(all, chaotic)) + '\n';
    dist += "all_vs_ordered," + fmt(distance(all, ordered)) + '\n';
    dist += "chaotic_vs_ordered," + fmt(distance(chaotic, ordered)) + '\n';

    io::write_file_atomic(path_in(o, "classification.csv"), csv);
    io::write_file_atomic(path_in(o, "distances.csv"), dist);
    const std::pair<const char*, const Histogram2D*> maps[] = {
        {"all", &all}, {"chaotic", &chaotic}, {"ordered", &ordered}, {"t0", &t0}};
    for (const auto& [name, h] : maps) {
        io::write_file_atomic(path_in(o, std::string("footprint_") + name + ".pgm"), to_pgm(*h, "config_hash=" + hash));
        io::write_file_atomic(path_in(o, std::string("footprint_") + name + ".csv"), hash_line(hash) + to_csv_grid(*h));
    }
}

void cmd_report(const ExperimentConfig& cfg, const RunOptions& o) {
    const auto hash = cfg.hash();
    const auto info = read_store_json(o);
    if (info.hash != hash) throw ConfigError("store.json: config hash " + info.hash + " differs from " + hash);
    const auto ens = load_ensemble(cfg, o);
    const auto n = ens.particles.size();
    if (info.particles != n) throw ConfigError("store.json: particle count differs from the ensemble");
    const auto observed = read_trajectories(path_in(o, "trajectories.csv"), hash, n);

    const auto cls_path = path_in(o, "classification.csv");
    if (!fs::exists(cls_path)) throw ConfigError(cls_path + ": missing (run classify first)");
    const auto cls = io::read_csv(cls_path);
    if (cls.meta("config_hash") != hash) throw ConfigError(cls_path + ": config hash differs from the run");
    if (cls.rows.size() != n) throw ConfigError(cls_path + ": row count differs from the ensemble");
    std::vector<Label> labels(n);
    {
        const auto cid = cls.column("particle_id"), cl = cls.column("label");
        for (const auto& row : cls.rows) {
            const auto id = io::parse_u64(row[cid]);
            if (id >= n) throw ConfigError(cls_path + ": particle id out of range");
            labels[id] = label_from_string(row[cl]);
        }
    }

    const Wavefunction wf(cfg.oscillator, cfg.superposition());
    const auto& an = cfg.analysis;
    const double obs_dt = cfg.integration.observable_dt;
    std::map<std::string, std::string> files;

    // Deviations between ensemble and closed-form expectations.
    const auto times = time_grid(std::min(an.deviation_t_max, info.horizon), an.deviation_dt);
    std::vector<std::vector<ParticleState>> snaps(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        const auto j = static_cast<std::size_t>(std::llround(times[k] / obs_dt));
        for (const auto& traj : observed)
            if (j < traj.size()) snaps[k].push_back({traj[j].x, traj[j].y, times[k]});
        if (snaps[k].empty()) throw ConfigError("trajectories.csv: no particles at t=" + io::num(times[k]));
    }
    const auto dev = deviation_table(wf, times, snaps);
    std::string summary = hash_line(hash) + "observable,mean_abs_dev\n";
    for (auto ob : kObservables) {
        std::string csv = hash_line(hash) + "t,analytic,ensemble,abs_dev\n";
        for (std::size_t k = 0; k < times.size(); ++k) {
            const double a = dev.analytic[k].get(ob), e = dev.ensemble[k].get(ob);
            csv += io::num(times[k]) + ',' + io::num(a) + ',' + io::num(e) + ',' + io::num(std::abs(e - a)) + '\n';
        }
        files["deviation_" + to_string(ob) + ".csv"] = csv;
        summary += to_string(ob) + ',' + io::num(dev.get(ob)) + '\n';
    }
    files["deviations.csv"] = summary;

    // Ensemble energy at t=0 against the number of particles.
    const double e_sqm = sqm_energy(cfg.oscillator, cfg.superposition());
    std::string conv = hash_line(hash) + "particles,ensemble_energy,analytic\n";
    const std::span<const ParticleState> all(ens.particles);
    for (std::size_t m = an.convergence_step;; m += an.convergence_step) {
        const std::size_t k = std::min(m, n);
        conv += std::to_string(k) + ',' + io::num(ensemble_expectations(wf, all.first(k)).E) + ',' + io::num(e_sqm) + '\n';
        if (k == n) break;
    }
    files["energy_convergence.csv"] = conv;

    std::string zones = hash_line(hash) + "zone,lo,hi,count,contribution,mean_energy\n";
    for (const auto& z : zone_decomposition(wf, all, an.zone_width))
        zones += std::to_string(z.zone) + ',' + io::num(z.lo) + ',' + io::num(z.hi) + ',' + std::to_string(z.count) +
                 ',' + io::num(z.contribution) + ',' + io::num(z.mean_energy) + '\n';
    files["zones.csv"] = zones;

    std::string cs = hash_line(hash) + "label,count,fraction,mean_energy_t0\n";
    for (auto l : {Label::Chaotic, Label::Ordered, Label::Undetermined}) {
        std::vector<ParticleState> members;
        for (std::size_t i = 0; i < n; ++i)
            if (labels[i] == l) members.push_back(ens.particles[i]);
        const double mean = members.empty() ? std::numeric_limits<double>::quiet_NaN()
                                            : ensemble_expectations(wf, members).E;
        cs += to_string(l) + ',' + std::to_string(members.size()) + ',' +
              io::num(static_cast<double>(members.size()) / static_cast<double>(n)) + ',' + fmt(mean) + '\n';
    }
    files["classification_summary.csv"] = cs;

    // Time-averaged energy of the first K chaotic particles.
    std::vector<std::size_t> chaotic_ids;
    for (std::size_t i = 0; i < n; ++i)
        if (labels[i] == Label::Chaotic && !observed[i].empty()) chaotic_ids.push_back(i);
    std::string few = hash_line(hash) + "trajectories,time_avg_energy,analytic,rel_error\n";
    for (auto k : an.few_trajectory_counts) {
        if (k == 0 || k > chaotic_ids.size()) continue;
        std::vector<double> energies;
        for (std::size_t a = 0; a < k; ++a)
            for (const auto& s : observed[chaotic_ids[a]]) {
                try {
                    energies.push_back(particle_energy(wf, {s.x, s.y, s.t}).total);
                } catch (const NearNode&) {
                }
            }
        const double avg = pairwise_sum(energies) / static_cast<double>(energies.size());
        few += std::to_string(k) + ',' + io::num(avg) + ',' + io::num(e_sqm) + ',' + io::num(std::abs(avg - e_sqm) / e_sqm) + '\n';
    }
    files["few_trajectory.csv"] = few;

    for (const auto& [name, text] : files) io::write_file_atomic(path_in(o, name), text);
}

void cmd_run(const ExperimentConfig& cfg, const RunOptions& o) {
    cmd_sample(cfg, o);
    if (!cmd_evolve(cfg, o)) return;
    cmd_classify(cfg, o);
    cmd_report(cfg, o);
}

}  // namespace bohm
