#pragma once

// Experiment configuration: per-system defaults, a versioned JSON schema and
// validation with field names.

#include "dynrecon/systems.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dynrecon::experiment {

inline constexpr int config_version = 1;

/// Validation failure; `field` is the dotted JSON path.
class ConfigError : public InvalidArgument {
  public:
    ConfigError(std::string field, const std::string& message)
        : InvalidArgument(field + ": " + message), field_(std::move(field))
    {
    }
    const std::string& field() const { return field_; }

  private:
    std::string field_;
};

enum class EmbeddingKind { delay, reservoir };
std::string to_string(EmbeddingKind kind);

struct EmbeddingSettings {
    EmbeddingKind kind = EmbeddingKind::delay;
    int delays = 1;
    int nodes = 200;
    double contraction = 0.9;
};

struct ForecastSettings {
    std::string measurement = "full-state";  // full-state | coordinate-projection | trigonometric
    std::vector<int> coordinates;            // projection coordinates or angle coordinates
    std::string hypothesis = "gaussian";     // fourier | gaussian | affine
    int order = 1;
    int centers = 600;
    double bandwidth_factor = 1.0;
    std::optional<double> ridge;  // absent: default_ridge * ridge_factor
    double ridge_factor = 1.0;
    Index train_length = 10000;
    Index test_ensemble = 200;
    Index test_spacing = 50;
    Index n_max = 500;
    // Exponent used for the dashed reference line and its dominating offset.
    double reference_exponent = 0.0;
};

struct LyapunovSettings {
    Index steps = 200000;
    int exponents = 0;  // 0: all
    bool stability_gap = true;
    Index gap_steps = 5000;
};

struct MarkovSettings {
    std::vector<int> coordinates;
    int resolution = 20;
    Index length = 1000000;
    Index simulate = 1000000;
};

struct ChecksSettings {
    int cocycle_span = 20;
    double cocycle_tolerance = 1e-10;
    double echo_tolerance = 1e-8;
    Index unitarity_length = 1000000;
    Index unitarity_lags = 100;
    double unitarity_tolerance = 0.02;
};

struct ExperimentConfig {
    int version = config_version;
    SystemSpec system = SystemSpec::lorenz63();
    EmbeddingSettings embedding;
    ForecastSettings forecast;
    LyapunovSettings lyapunov;
    MarkovSettings markov;
    ChecksSettings checks;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    bool quiet = false;
};

ExperimentConfig default_config(SystemKind system, EmbeddingKind embedding = EmbeddingKind::delay);

/// Command-line overrides; they take precedence over file fields.
struct Overrides {
    std::optional<SystemKind> system;
    std::optional<EmbeddingKind> embedding;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    bool quiet = false;
};

/// Defaults for the chosen system and embedding, then file fields, then the
/// remaining overrides. Throws ConfigError on unknown or ill-typed fields.
ExperimentConfig make_config(const nlohmann::json& file, const Overrides& overrides = {});
ExperimentConfig load_config(const std::string& path, const Overrides& overrides = {});

void validate(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);

/// Seeded initial condition: a random point for the torus, a perturbation of
/// the default state for the Lorenz systems.
Vec initial_state(const ExperimentConfig& config, std::uint64_t stream = 0);

}  // namespace dynrecon::experiment
