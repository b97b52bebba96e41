#include "bohm/config.hpp"

#include <cmath>
#include <filesystem>
#include <set>

#include "bohm/errors.hpp"
#include "bohm/io.hpp"

namespace bohm {

namespace {

using json = nlohmann::json;

// a = b = 1, c = sqrt(2)/2, omega_x = 1, omega_y = sqrt(2)/2, M = hbar = 1.
constexpr const char* kSingleNode = R"({
  "name": "single-node",
  "hbar": 1.0, "mass_x": 1.0, "mass_y": 1.0,
  "omega_x": 1.0, "omega_y": 0.70710678118654757,
  "terms": [
    {"coeff_re": 1.0, "coeff_im": 0.0, "m": 0, "n": 0},
    {"coeff_re": 1.0, "coeff_im": 0.0, "m": 1, "n": 0},
    {"coeff_re": 0.70710678118654757, "coeff_im": 0.0, "m": 1, "n": 1}
  ],
  "ensemble": {"kind": "born", "n": 5000, "seed": 1},
  "integration": {"horizon": 100000.0, "footprint_dt": 0.05, "observable_dt": 50.0,
                  "checkpoint_every": 1000.0},
  "analysis": {"zone_width": 0.03, "grid": [200, 200]},
  "desk_scale": {"ensemble": {"n": 1000}, "integration": {"horizon": 2000.0}}
})";

constexpr const char* kMultiNodeA = R"({
  "name": "multi-node-a",
  "hbar": 1.0, "mass_x": 1.0, "mass_y": 1.0,
  "omega_x": 1.0, "omega_y": 0.70710678118654757,
  "terms": [
    {"coeff_re": 1.0, "coeff_im": 0.0, "m": 0, "n": 2},
    {"coeff_re": 1.0, "coeff_im": 0.0, "m": 3, "n": 4},
    {"coeff_re": 0.70710678118654757, "coeff_im": 0.0, "m": 5, "n": 7}
  ],
  "ensemble": {"kind": "born", "n": 10000, "seed": 1},
  "integration": {"horizon": 100000.0, "footprint_dt": 0.05, "observable_dt": 50.0,
                  "checkpoint_every": 1000.0},
  "analysis": {"zone_width": 0.03, "grid": [200, 200]},
  "desk_scale": {"ensemble": {"n": 500}, "integration": {"horizon": 5000.0}}
})";

constexpr const char* kMultiNodeB = R"({
  "name": "multi-node-b",
  "hbar": 1.0, "mass_x": 1.0, "mass_y": 1.0,
  "omega_x": 1.0, "omega_y": 0.70710678118654757,
  "terms": [
    {"coeff_re": 1.0, "coeff_im": 0.0, "m": 10, "n": 3},
    {"coeff_re": 1.0, "coeff_im": 0.0, "m": 4, "n": 5},
    {"coeff_re": 0.70710678118654757, "coeff_im": 0.0, "m": 7, "n": 8}
  ],
  "ensemble": {"kind": "born", "n": 10000, "seed": 1},
  "integration": {"horizon": 100000.0, "footprint_dt": 0.05, "observable_dt": 50.0,
                  "checkpoint_every": 1000.0},
  "analysis": {"zone_width": 0.03, "grid": [200, 200]},
  "desk_scale": {"ensemble": {"n": 500}, "integration": {"horizon": 5000.0}}
})";

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items())
        if (!ok.count(k)) throw ConfigError(where + (where.empty() ? "" : ".") + k + ": unknown key");
}

template <class T>
T get_or(const json& obj, const char* key, const std::string& where, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

double positive(double v, const std::string& key) {
    if (!std::isfinite(v) || v <= 0.0) throw ConfigError(key + ": must be finite and > 0");
    return v;
}

bool is_multiple(double big, double small) {
    const double r = big / small;
    return std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, r);
}

}  // namespace

std::optional<std::string> bundled_config_text(const std::string& name) {
    if (name == "single-node") return kSingleNode;
    if (name == "multi-node-a") return kMultiNodeA;
    if (name == "multi-node-b") return kMultiNodeB;
    return std::nullopt;
}

std::vector<std::string> bundled_config_names() { return {"single-node", "multi-node-a", "multi-node-b"}; }

ExperimentConfig parse_config(const json& input, bool desk_scale) {
    json j = input;
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    if (desk_scale && j.contains("desk_scale")) {
        const json patch = j["desk_scale"];
        j.merge_patch(patch);
    }
    j.erase("desk_scale");
    check_keys(j, "", {"name", "hbar", "mass_x", "mass_y", "omega_x", "omega_y", "terms",
                       "ensemble", "integration", "analysis"});

    ExperimentConfig c;
    c.name = get_or<std::string>(j, "name", "config", "unnamed");
    auto& osc = c.oscillator;
    osc.hbar = positive(get_or(j, "hbar", "config", 1.0), "hbar");
    osc.mass_x = positive(get_or(j, "mass_x", "config", 1.0), "mass_x");
    osc.mass_y = positive(get_or(j, "mass_y", "config", 1.0), "mass_y");
    if (!j.contains("omega_x") || !j.contains("omega_y"))
        throw ConfigError("omega_x, omega_y: required");
    osc.omega_x = positive(get_or(j, "omega_x", "config", 1.0), "omega_x");
    osc.omega_y = positive(get_or(j, "omega_y", "config", 1.0), "omega_y");

    if (!j.contains("terms") || !j["terms"].is_array() || j["terms"].empty())
        throw ConfigError("terms: must be a non-empty array");
    for (std::size_t i = 0; i < j["terms"].size(); ++i) {
        const auto& t = j["terms"][i];
        const std::string where = "terms[" + std::to_string(i) + "]";
        check_keys(t, where, {"coeff_re", "coeff_im", "m", "n"});
        if (!t.contains("m") || !t.contains("n")) throw ConfigError(where + ": m and n are required");
        const int m = get_or(t, "m", where, -1);
        const int n = get_or(t, "n", where, -1);
        if (m < 0 || n < 0) throw ConfigError(where + ": m, n must be >= 0");
        c.terms.push_back({cplx(get_or(t, "coeff_re", where, 0.0), get_or(t, "coeff_im", where, 0.0)), Mode{m, n}});
    }
    c.superposition();  // validates distinct modes and non-zero norm

    const json ens = j.value("ensemble", json::object());
    check_keys(ens, "ensemble", {"kind", "n", "seed", "bounds"});
    const auto kind = get_or<std::string>(ens, "kind", "ensemble", "born");
    if (kind == "born")
        c.ensemble.kind = EnsembleSpec::Kind::Born;
    else if (kind == "uniform_square")
        c.ensemble.kind = EnsembleSpec::Kind::UniformSquare;
    else
        throw ConfigError("ensemble.kind: expected 'born' or 'uniform_square'");
    const auto n = get_or<long long>(ens, "n", "ensemble", 5000);
    if (n < 1) throw ConfigError("ensemble.n: must be >= 1");
    c.ensemble.n = static_cast<std::size_t>(n);
    c.ensemble.seed = get_or<std::uint64_t>(ens, "seed", "ensemble", 1);
    if (ens.contains("bounds")) {
        const auto b = get_or<std::vector<double>>(ens, "bounds", "ensemble", {});
        if (b.size() != 4 || !(b[1] > b[0]) || !(b[3] > b[2]))
            throw ConfigError("ensemble.bounds: expected [x_lo, x_hi, y_lo, y_hi] with lo < hi");
        c.ensemble.bounds = {b[0], b[1], b[2], b[3]};
    }

    const json integ = j.value("integration", json::object());
    check_keys(integ, "integration", {"horizon", "footprint_dt", "observable_dt", "checkpoint_every",
                                      "rtol", "atol", "min_step", "max_step"});
    auto& is = c.integration;
    is.horizon = positive(get_or(integ, "horizon", "integration", is.horizon), "integration.horizon");
    is.footprint_dt = positive(get_or(integ, "footprint_dt", "integration", is.footprint_dt), "integration.footprint_dt");
    is.observable_dt = positive(get_or(integ, "observable_dt", "integration", is.observable_dt), "integration.observable_dt");
    is.checkpoint_every = positive(get_or(integ, "checkpoint_every", "integration", is.checkpoint_every), "integration.checkpoint_every");
    is.options.rtol = positive(get_or(integ, "rtol", "integration", is.options.rtol), "integration.rtol");
    is.options.atol = positive(get_or(integ, "atol", "integration", is.options.atol), "integration.atol");
    is.options.min_step = positive(get_or(integ, "min_step", "integration", is.options.min_step), "integration.min_step");
    is.options.max_step = positive(get_or(integ, "max_step", "integration", is.options.max_step), "integration.max_step");
    if (!is_multiple(is.observable_dt, is.footprint_dt))
        throw ConfigError("integration.observable_dt: must be a multiple of footprint_dt");

    const json an = j.value("analysis", json::object());
    check_keys(an, "analysis", {"zone_width", "grid", "theta_chaotic", "theta_ordered", "deviation_t_max",
                                "deviation_dt", "convergence_step", "few_trajectory_counts"});
    auto& a = c.analysis;
    a.zone_width = positive(get_or(an, "zone_width", "analysis", a.zone_width), "analysis.zone_width");
    if (an.contains("grid")) {
        const auto g = get_or<std::vector<int>>(an, "grid", "analysis", {});
        if (g.size() != 2 || g[0] < 1 || g[1] < 1) throw ConfigError("analysis.grid: expected [nx, ny] >= 1");
        a.grid_nx = g[0];
        a.grid_ny = g[1];
    }
    a.thresholds.chaotic = get_or(an, "theta_chaotic", "analysis", a.thresholds.chaotic);
    a.thresholds.ordered = get_or(an, "theta_ordered", "analysis", a.thresholds.ordered);
    if (!(a.thresholds.ordered >= 0.0 && a.thresholds.ordered < a.thresholds.chaotic && a.thresholds.chaotic <= 1.0))
        throw ConfigError("analysis.theta_*: need 0 <= theta_ordered < theta_chaotic <= 1");
    a.deviation_t_max = get_or(an, "deviation_t_max", "analysis", a.deviation_t_max);
    if (!(a.deviation_t_max >= 0.0)) throw ConfigError("analysis.deviation_t_max: must be >= 0");
    a.deviation_dt = positive(get_or(an, "deviation_dt", "analysis", a.deviation_dt), "analysis.deviation_dt");
    if (!is_multiple(a.deviation_dt, is.observable_dt))
        throw ConfigError("analysis.deviation_dt: must be a multiple of integration.observable_dt");
    const auto step = get_or<long long>(an, "convergence_step", "analysis", 100);
    if (step < 1) throw ConfigError("analysis.convergence_step: must be >= 1");
    a.convergence_step = static_cast<std::size_t>(step);
    if (an.contains("few_trajectory_counts"))
        a.few_trajectory_counts = get_or<std::vector<std::size_t>>(an, "few_trajectory_counts", "analysis", {});
    return c;
}

ExperimentConfig load_config(const std::string& source, bool desk_scale) {
    std::string text;
    if (auto b = bundled_config_text(source); b && !std::filesystem::exists(source))
        text = *b;
    else
        text = io::read_file(source);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports "line L, column C" in what().
        throw ConfigError(source + ": " + e.what());
    }
    try {
        return parse_config(j, desk_scale);
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["hbar"] = oscillator.hbar;
    j["mass_x"] = oscillator.mass_x;
    j["mass_y"] = oscillator.mass_y;
    j["omega_x"] = oscillator.omega_x;
    j["omega_y"] = oscillator.omega_y;
    j["terms"] = nlohmann::ordered_json::array();
    for (const auto& t : terms)
        j["terms"].push_back({{"coeff_re", t.coeff.real()}, {"coeff_im", t.coeff.imag()}, {"m", t.mode.m}, {"n", t.mode.n}});
    j["ensemble"] = {{"kind", ensemble.kind == EnsembleSpec::Kind::Born ? "born" : "uniform_square"},
                     {"n", ensemble.n},
                     {"seed", ensemble.seed},
                     {"bounds", {ensemble.bounds.x_lo, ensemble.bounds.x_hi, ensemble.bounds.y_lo, ensemble.bounds.y_hi}}};
    const auto& o = integration.options;
    j["integration"] = {{"horizon", integration.horizon},         {"footprint_dt", integration.footprint_dt},
                        {"observable_dt", integration.observable_dt}, {"checkpoint_every", integration.checkpoint_every},
                        {"rtol", o.rtol},                         {"atol", o.atol},
                        {"min_step", o.min_step},                 {"max_step", o.max_step}};
    j["analysis"] = {{"zone_width", analysis.zone_width},
                     {"grid", {analysis.grid_nx, analysis.grid_ny}},
                     {"theta_chaotic", analysis.thresholds.chaotic},
                     {"theta_ordered", analysis.thresholds.ordered},
                     {"deviation_t_max", analysis.deviation_t_max},
                     {"deviation_dt", analysis.deviation_dt},
                     {"convergence_step", analysis.convergence_step},
                     {"few_trajectory_counts", analysis.few_trajectory_counts}};
    return j;
}

std::string ExperimentConfig::hash() const { return io::hex64(io::fnv1a64(to_json().dump())); }

}  // namespace bohm
