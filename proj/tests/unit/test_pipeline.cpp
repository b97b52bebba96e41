#include <doctest.h>

#include <filesystem>

#include "bohm/config.hpp"
#include "bohm/errors.hpp"
#include "bohm/io.hpp"
#include "bohm/pipeline.hpp"

using namespace bohm;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_config() {
    return nlohmann::json::parse(R"({
      "name": "unit", "omega_x": 1.0, "omega_y": 0.70710678118654757,
      "terms": [{"coeff_re": 1.0, "m": 0, "n": 0}, {"coeff_re": 1.0, "m": 1, "n": 0},
                {"coeff_re": 0.70710678118654757, "m": 1, "n": 1}],
      "ensemble": {"n": 40, "seed": 3},
      "integration": {"horizon": 1000.0, "checkpoint_every": 100.0},
      "analysis": {"deviation_t_max": 1000.0, "convergence_step": 10, "few_trajectory_counts": [1, 2]}
    })");
}

std::string fresh_dir(const std::string& name) {
    const auto p = fs::path("unit_pipeline") / name;
    fs::remove_all(p);
    return p.string();
}

std::vector<std::string> listing(const std::string& dir) {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

void require_same_files(const std::string& a, const std::string& b) {
    const auto la = listing(a), lb = listing(b);
    REQUIRE(la == lb);
    for (const auto& f : la) {
        INFO(f);
        CHECK(io::read_file(a + "/" + f) == io::read_file(b + "/" + f));
    }
}

}  // namespace

TEST_CASE("bundled configs parse with full and desk-scale sizes") {
    for (const auto& name : bundled_config_names()) {
        const auto c = load_config(name);
        CHECK(c.name == name);
        CHECK(c.terms.size() == 3);
        CHECK(c.ensemble.kind == EnsembleSpec::Kind::Born);
        CHECK(c.integration.horizon == 1e5);
        const auto d = load_config(name, true);
        CHECK(d.ensemble.n < c.ensemble.n);
        CHECK(d.integration.horizon < c.integration.horizon);
        CHECK(d.hash() != c.hash());
    }
    CHECK(load_config("multi-node-b").terms[0].mode == Mode{10, 3});
}

TEST_CASE("config hash tracks settings that change results") {
    const auto a = parse_config(small_config());
    auto j = small_config();
    CHECK(parse_config(j).hash() == a.hash());
    j["ensemble"]["seed"] = 4;
    CHECK(parse_config(j).hash() != a.hash());
    CHECK(a.hash().size() == 16);
}

TEST_CASE("config validation errors name the key") {
    auto expect_error = [](nlohmann::json j, const std::string& needle) {
        try {
            parse_config(j);
            FAIL("expected ConfigError mentioning " << needle);
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    auto j = small_config();
    j["ensemble"]["n"] = 0;
    expect_error(j, "ensemble.n");
    j = small_config();
    j["integration"]["horizn"] = 5;
    expect_error(j, "integration.horizn");
    j = small_config();
    j["terms"] = nlohmann::json::array();
    expect_error(j, "terms");
    j = small_config();
    j["omega_x"] = -1.0;
    expect_error(j, "omega_x");
    j = small_config();
    j["integration"]["observable_dt"] = 0.12;
    expect_error(j, "observable_dt");
    j = small_config();
    j["analysis"]["theta_ordered"] = 0.9;
    expect_error(j, "theta");
}

TEST_CASE("config syntax errors report the line") {
    fs::create_directories("unit_pipeline");
    io::write_file_atomic("unit_pipeline/bad.json", "{\n  \"omega_x\": 1.0,\n  \"omega_y\": ,\n}\n");
    try {
        load_config("unit_pipeline/bad.json");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("pipeline: deterministic across thread counts") {
    const auto cfg = parse_config(small_config());
    const auto a = fresh_dir("threads1"), b = fresh_dir("threads3");
    cmd_run(cfg, {a, 1});
    cmd_run(cfg, {b, 3});
    require_same_files(a, b);
    const auto meta = nlohmann::json::parse(io::read_file(a + "/ensemble.csv.meta.json"));
    CHECK(meta["provenance"] == "Born");
    CHECK(meta["config_hash"] == cfg.hash());
    for (const auto& f : listing(a))
        if (f.ends_with(".csv")) CHECK(io::read_file(a + "/" + f).starts_with("# config_hash=" + cfg.hash() + "\n"));
    CHECK_FALSE(fs::exists(a + "/checkpoint.bin"));
}

TEST_CASE("pipeline: resume after a stop gives identical output") {
    const auto cfg = parse_config(small_config());
    const auto a = fresh_dir("straight"), b = fresh_dir("resumed");
    cmd_sample(cfg, {a, 1});
    REQUIRE(cmd_evolve(cfg, {a, 1}));
    cmd_sample(cfg, {b, 1});
    CHECK_FALSE(cmd_evolve(cfg, {b, 2, 500.0}));
    CHECK(fs::exists(b + "/checkpoint.bin"));
    CHECK_FALSE(fs::exists(b + "/store.json"));
    REQUIRE(cmd_evolve(cfg, {b, 1}));
    require_same_files(a, b);
}

TEST_CASE("pipeline: corrupt checkpoint is rejected") {
    const auto cfg = parse_config(small_config());
    const auto d = fresh_dir("corrupt");
    cmd_sample(cfg, {d, 1});
    CHECK_FALSE(cmd_evolve(cfg, {d, 1, 100.0}));
    auto bytes = io::read_file(d + "/checkpoint.bin");
    bytes[bytes.size() / 2] ^= 0x5a;
    io::write_file_atomic(d + "/checkpoint.bin", bytes);
    CHECK_THROWS_AS(cmd_evolve(cfg, {d, 1}), ConfigError);
}

TEST_CASE("pipeline: stationary state gives constant trajectories") {
    auto j = small_config();
    j["terms"] = nlohmann::json::parse(R"([{"coeff_re": 1.0, "m": 2, "n": 1}])");
    j["integration"]["horizon"] = 200.0;
    j["analysis"]["deviation_t_max"] = 200.0;
    const auto cfg = parse_config(j);
    const auto d = fresh_dir("stationary");
    cmd_sample(cfg, {d, 1});
    REQUIRE(cmd_evolve(cfg, {d, 1}));
    const auto ens = io::read_csv(d + "/ensemble.csv");
    const auto tr = io::read_csv(d + "/trajectories.csv");
    CHECK(tr.rows.size() == 40 * 5);
    for (const auto& row : tr.rows) {
        const auto id = io::parse_u64(row[0]);
        CHECK(row[2] == ens.rows[id][1]);
        CHECK(row[3] == ens.rows[id][2]);
    }
}

TEST_CASE("pipeline: missing or mismatched inputs") {
    const auto cfg = parse_config(small_config());
    const auto d = fresh_dir("missing");
    CHECK_THROWS_AS(cmd_evolve(cfg, {d, 1}), ConfigError);
    fs::create_directories(d);
    CHECK_THROWS_AS(cmd_report(cfg, {d, 1}), ConfigError);
    CHECK(listing(d).empty());

    auto j = small_config();
    j["integration"]["horizon"] = 100.0;
    j["analysis"]["deviation_t_max"] = 100.0;
    const auto small = parse_config(j);
    cmd_run(small, {d, 1});
    fs::remove(d + "/deviations.csv");
    j["ensemble"]["seed"] = 99;
    const auto other = parse_config(j);
    CHECK_THROWS_AS(cmd_report(other, {d, 1}), ConfigError);
    // Classification from another run is refused and nothing is written.
    auto cls = io::read_file(d + "/classification.csv");
    cls.replace(cls.find(small.hash()), 16, other.hash());
    io::write_file_atomic(d + "/classification.csv", cls);
    CHECK_THROWS_AS(cmd_report(small, {d, 1}), ConfigError);
    CHECK_FALSE(fs::exists(d + "/deviations.csv"));
}
