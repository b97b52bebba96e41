#include "bohm/sampling.hpp"

#include <algorithm>
#include <json.hpp>
#include <string>

#include "bohm/errors.hpp"
#include "bohm/io.hpp"
#include "bohm/parallel.hpp"

namespace bohm {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::vector<std::size_t> stream_quotas(std::size_t n, std::uint32_t streams) {
    std::vector<std::size_t> q(streams, n / streams);
    for (std::size_t s = 0; s < n % streams; ++s) ++q[s];
    return q;
}

}  // namespace

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed;
    const std::uint64_t mixed = splitmix64(x) ^ (stream * 0xd1b54a32d192ed03ULL);
    x = mixed;
    for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t StreamRng::next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::Born: return "Born";
        case Provenance::UniformSquare: return "UniformSquare";
        case Provenance::Custom: return "Custom";
    }
    return "Custom";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "Born") return Provenance::Born;
    if (s == "UniformSquare") return Provenance::UniformSquare;
    if (s == "Custom") return Provenance::Custom;
    throw ConfigError("unknown provenance '" + s + "'");
}

double scan_density_max(const Wavefunction& wf, const Region& region, double t, int grid) {
    double pmax = 0.0;
    for (int i = 0; i <= grid; ++i) {
        const double x = region.x_lo + region.width() * i / grid;
        for (int j = 0; j <= grid; ++j) {
            const double y = region.y_lo + region.height() * j / grid;
            pmax = std::max(pmax, wf.density(x, y, t));
        }
    }
    return pmax;
}

Ensemble born_sample(const Wavefunction& wf, const Region& region, std::size_t n,
                     std::uint64_t seed, const BornSampleOptions& opts) {
    if (n < 1) throw ConfigError("ensemble size must be >= 1");
    const auto quotas = stream_quotas(n, kSampleStreams);

    int grid = opts.envelope_grid;
    for (int attempt = 0; attempt < 4; ++attempt, grid *= 2) {
        const double envelope = opts.envelope_margin * scan_density_max(wf, region, opts.t, grid);
        std::vector<std::vector<ParticleState>> per_stream(kSampleStreams);
        std::vector<char> breached(kSampleStreams, 0);
        parallel_for(kSampleStreams, opts.threads, [&](std::size_t s) {
            StreamRng rng(seed, s);
            auto& out = per_stream[s];
            out.reserve(quotas[s]);
            while (out.size() < quotas[s]) {
                const double x = region.x_lo + region.width() * rng.uniform();
                const double y = region.y_lo + region.height() * rng.uniform();
                const double p = wf.density(x, y, opts.t);
                if (p > envelope) {
                    breached[s] = 1;
                    return;
                }
                if (rng.uniform() * envelope < p) out.push_back({x, y, opts.t});
            }
        });
        if (std::any_of(breached.begin(), breached.end(), [](char b) { return b != 0; }))
            continue;

        Ensemble e;
        e.seed = seed;
        e.provenance = Provenance::Born;
        e.bounds = region;
        e.envelope = envelope;
        e.particles.reserve(n);
        for (const auto& chunk : per_stream)
            e.particles.insert(e.particles.end(), chunk.begin(), chunk.end());
        return e;
    }
    throw EnvelopeBreach("density exceeded the rejection envelope after refining the scan");
}

Ensemble uniform_square_sample(std::size_t n, const Region& bounds, std::uint64_t seed) {
    if (n < 1) throw ConfigError("ensemble size must be >= 1");
    const auto quotas = stream_quotas(n, kSampleStreams);
    Ensemble e;
    e.seed = seed;
    e.provenance = Provenance::UniformSquare;
    e.bounds = bounds;
    e.particles.reserve(n);
    for (std::uint32_t s = 0; s < kSampleStreams; ++s) {
        StreamRng rng(seed, s);
        for (std::size_t k = 0; k < quotas[s]; ++k) {
            const double x = bounds.x_lo + bounds.width() * rng.uniform();
            const double y = bounds.y_lo + bounds.height() * rng.uniform();
            e.particles.push_back({x, y, 0.0});
        }
    }
    return e;
}

void write_ensemble(const Ensemble& e, const std::string& csv_path, const std::string& config_hash) {
    std::string csv = "# config_hash=" + config_hash + "\nparticle_id,x,y\n";
    for (std::size_t i = 0; i < e.particles.size(); ++i) {
        csv += std::to_string(i);
        csv += ',';
        csv += io::num(e.particles[i].x);
        csv += ',';
        csv += io::num(e.particles[i].y);
        csv += '\n';
    }
    nlohmann::ordered_json meta;
    meta["config_hash"] = config_hash;
    meta["seed"] = e.seed;
    meta["provenance"] = to_string(e.provenance);
    meta["streams"] = e.streams;
    meta["count"] = e.particles.size();
    meta["time"] = e.particles.empty() ? 0.0 : e.particles.front().t;
    meta["bounds"] = {e.bounds.x_lo, e.bounds.x_hi, e.bounds.y_lo, e.bounds.y_hi};
    meta["envelope"] = e.envelope;
    io::write_file_atomic(csv_path, csv);
    io::write_file_atomic(csv_path + ".meta.json", meta.dump(2) + "\n");
}

Ensemble read_ensemble(const std::string& csv_path, std::string& config_hash) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(io::read_file(csv_path + ".meta.json"));
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(csv_path + ".meta.json: " + ex.what());
    }
    Ensemble e;
    try {
        config_hash = meta.at("config_hash").get<std::string>();
        e.seed = meta.at("seed").get<std::uint64_t>();
        e.provenance = provenance_from_string(meta.at("provenance").get<std::string>());
        e.streams = meta.at("streams").get<std::uint32_t>();
        const auto b = meta.at("bounds").get<std::vector<double>>();
        if (b.size() != 4) throw ConfigError("bounds must have 4 entries");
        e.bounds = {b[0], b[1], b[2], b[3]};
        e.envelope = meta.at("envelope").get<double>();
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(csv_path + ".meta.json: " + ex.what());
    }
    const double t0 = meta.value("time", 0.0);
    const auto table = io::read_csv(csv_path);
    if (table.meta("config_hash") != config_hash)
        throw ConfigError(csv_path + ": config hash differs from its metadata");
    const auto cx = table.column("x"), cy = table.column("y"), cid = table.column("particle_id");
    e.particles.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (io::parse_u64(row[cid]) != i) throw ConfigError(csv_path + ": particle ids must be 0..N-1 in order");
        e.particles.push_back({io::parse_double(row[cx]), io::parse_double(row[cy]), t0});
    }
    if (e.particles.size() != meta.value("count", std::size_t{0}))
        throw ConfigError(csv_path + ": row count does not match metadata");
    return e;
}

}  // namespace bohm
