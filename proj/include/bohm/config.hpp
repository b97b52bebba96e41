#pragma once

// Experiment configuration: oscillator, superposition, ensemble, integration
// and analysis settings read from JSON, plus the three bundled presets.

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "bohm/classify.hpp"
#include "bohm/dynamics.hpp"
#include "bohm/wavefunction.hpp"

namespace bohm {

struct EnsembleSpec {
    enum class Kind { Born, UniformSquare };
    Kind kind = Kind::Born;
    std::size_t n = 5000;
    std::uint64_t seed = 1;
    Region bounds{-1.0, 1.0, -1.0, 1.0};  // UniformSquare only
};

struct IntegrationSpec {
    double horizon = 1000.0;
    double footprint_dt = 0.05;
    double observable_dt = 50.0;
    double checkpoint_every = 1000.0;
    IntegratorOptions options;
};

struct AnalysisSpec {
    double zone_width = 0.03;
    int grid_nx = 200;
    int grid_ny = 200;
    ClassifyThresholds thresholds;
    double deviation_t_max = 1000.0;
    double deviation_dt = 50.0;
    std::size_t convergence_step = 100;
    std::vector<std::size_t> few_trajectory_counts{1, 2, 5, 10, 20, 50};
};

struct ExperimentConfig {
    std::string name;
    OscillatorConfig oscillator;
    std::vector<Term> terms;
    EnsembleSpec ensemble;
    IntegrationSpec integration;
    AnalysisSpec analysis;

    Superposition superposition() const { return Superposition(terms); }
    /// Canonical JSON of every setting that affects results.
    nlohmann::ordered_json to_json() const;
    /// 16 hex digits of FNV-1a over to_json().dump().
    std::string hash() const;
};

/// Parses and validates; errors are ConfigError naming the offending key.
/// With `desk_scale`, the object under "desk_scale" is merged over the rest first.
ExperimentConfig parse_config(const nlohmann::json& j, bool desk_scale = false);

/// `source` is a file path or one of the bundled names (single-node,
/// multi-node-a, multi-node-b). JSON syntax errors report line and column.
ExperimentConfig load_config(const std::string& source, bool desk_scale = false);

std::optional<std::string> bundled_config_text(const std::string& name);
std::vector<std::string> bundled_config_names();

}  // namespace bohm
