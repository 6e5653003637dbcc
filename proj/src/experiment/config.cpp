#include "dynrecon/experiment/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

namespace dynrecon::experiment {

using nlohmann::json;

std::string to_string(EmbeddingKind kind)
{
    return kind == EmbeddingKind::delay ? "delay" : "reservoir";
}

namespace {

EmbeddingKind embedding_from_string(const std::string& name, const std::string& field)
{
    if (name == "delay") return EmbeddingKind::delay;
    if (name == "reservoir") return EmbeddingKind::reservoir;
    throw ConfigError(field, "expected delay or reservoir, got '" + name + "'");
}

SystemKind system_from_string(const std::string& name, const std::string& field)
{
    try {
        return system_kind_from_string(name);
    } catch (const InvalidArgument&) {
        throw ConfigError(field, "expected torus, l63 or l63rot, got '" + name + "'");
    }
}

// Reads obj[key] into out when present, reporting type errors by path.
template <class T>
void read(const json& obj, const char* key, const std::string& path, T& out)
{
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        out = it->template get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + "." + key, "wrong type");
    }
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known)
{
    if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    std::set<std::string> allowed(known.begin(), known.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
}

const json* section(const json& root, const char* key)
{
    auto it = root.find(key);
    return it == root.end() ? nullptr : &*it;
}

}  // namespace

ExperimentConfig default_config(SystemKind system, EmbeddingKind embedding)
{
    ExperimentConfig c;
    c.embedding.kind = embedding;
    ForecastSettings& f = c.forecast;
    switch (system) {
    case SystemKind::torus:
        c.system = SystemSpec::torus();
        f.measurement = "trigonometric";
        f.coordinates = {0, 1};
        f.hypothesis = "fourier";
        f.order = 1;
        f.ridge = 0.0;
        f.train_length = 10000;
        f.test_ensemble = 200;
        f.test_spacing = 13;
        f.n_max = 500;
        f.reference_exponent = 0.0;
        c.lyapunov.steps = 100000;
        c.markov.coordinates = {1};
        break;
    case SystemKind::lorenz63:
        c.system = SystemSpec::lorenz63();
        f.measurement = "full-state";
        f.hypothesis = "gaussian";
        f.centers = 600;
        f.train_length = 10000;
        f.test_ensemble = 500;
        f.test_spacing = 100;
        f.n_max = 2000;
        f.reference_exponent = 0.9056;
        c.markov.coordinates = {2};
        break;
    case SystemKind::l63rot:
        c.system = SystemSpec::l63rot();
        f.measurement = "coordinate-projection";
        f.coordinates = {1, 2, 3};
        f.hypothesis = "gaussian";
        f.centers = 600;
        f.train_length = 10000;
        f.test_ensemble = 500;
        f.test_spacing = 100;
        f.n_max = 2000;
        f.reference_exponent = 0.9056;
        c.markov.coordinates = {3};
        break;
    }
    if (embedding == EmbeddingKind::reservoir && f.hypothesis == "fourier") {
        // angles cannot be read off reservoir states
        f.hypothesis = "gaussian";
        f.centers = 300;
        f.ridge.reset();
    }
    return c;
}

ExperimentConfig make_config(const json& file, const Overrides& overrides)
{
    const json root = file.is_null() ? json::object() : file;
    reject_unknown(root, "", {"version", "system", "seed", "output_dir", "dynamics", "embedding", "forecast",
                              "lyapunov", "markov", "checks"});

    int version = config_version;
    read(root, "version", "", version);
    if (version != config_version)
        throw ConfigError("version", "unsupported schema version " + std::to_string(version));

    SystemKind system = SystemKind::lorenz63;
    if (overrides.system) {
        system = *overrides.system;
    } else if (root.contains("system")) {
        std::string name;
        read(root, "system", "", name);
        system = system_from_string(name, "system");
    }
    EmbeddingKind embedding = EmbeddingKind::delay;
    const json* emb = section(root, "embedding");
    if (overrides.embedding) {
        embedding = *overrides.embedding;
    } else if (emb && emb->is_object() && emb->contains("kind")) {
        std::string name;
        read(*emb, "kind", "embedding", name);
        embedding = embedding_from_string(name, "embedding.kind");
    }

    ExperimentConfig c = default_config(system, embedding);
    read(root, "seed", "", c.seed);
    read(root, "output_dir", "", c.output_dir);

    if (const json* d = section(root, "dynamics")) {
        reject_unknown(*d, "dynamics", {"dt", "substeps", "rotation", "sigma", "rho", "beta"});
        read(*d, "dt", "dynamics", c.system.dt);
        read(*d, "substeps", "dynamics", c.system.substeps);
        read(*d, "sigma", "dynamics", c.system.sigma);
        read(*d, "rho", "dynamics", c.system.rho);
        read(*d, "beta", "dynamics", c.system.beta);
        if (d->contains("rotation")) {
            std::vector<double> r;
            read(*d, "rotation", "dynamics", r);
            if (r.size() != 2) throw ConfigError("dynamics.rotation", "expected two angles");
            c.system.rotation = Eigen::Vector2d(r[0], r[1]);
        }
    }
    if (emb) {
        reject_unknown(*emb, "embedding", {"kind", "delays", "nodes", "contraction"});
        read(*emb, "delays", "embedding", c.embedding.delays);
        read(*emb, "nodes", "embedding", c.embedding.nodes);
        read(*emb, "contraction", "embedding", c.embedding.contraction);
    }
    if (const json* f = section(root, "forecast")) {
        reject_unknown(*f, "forecast",
                       {"measurement", "coordinates", "hypothesis", "order", "centers", "bandwidth_factor", "ridge",
                        "ridge_factor", "train_length", "test_ensemble", "test_spacing", "n_max",
                        "reference_exponent"});
        auto& s = c.forecast;
        read(*f, "measurement", "forecast", s.measurement);
        read(*f, "coordinates", "forecast", s.coordinates);
        read(*f, "hypothesis", "forecast", s.hypothesis);
        read(*f, "order", "forecast", s.order);
        read(*f, "centers", "forecast", s.centers);
        read(*f, "bandwidth_factor", "forecast", s.bandwidth_factor);
        if (f->contains("ridge")) {
            if ((*f)["ridge"].is_null() || (*f)["ridge"] == "auto") {
                s.ridge.reset();
            } else {
                double r = 0.0;
                read(*f, "ridge", "forecast", r);
                s.ridge = r;
            }
        }
        read(*f, "ridge_factor", "forecast", s.ridge_factor);
        read(*f, "train_length", "forecast", s.train_length);
        read(*f, "test_ensemble", "forecast", s.test_ensemble);
        read(*f, "test_spacing", "forecast", s.test_spacing);
        read(*f, "n_max", "forecast", s.n_max);
        read(*f, "reference_exponent", "forecast", s.reference_exponent);
    }
    if (const json* l = section(root, "lyapunov")) {
        reject_unknown(*l, "lyapunov", {"steps", "exponents", "stability_gap", "gap_steps"});
        read(*l, "steps", "lyapunov", c.lyapunov.steps);
        read(*l, "exponents", "lyapunov", c.lyapunov.exponents);
        read(*l, "stability_gap", "lyapunov", c.lyapunov.stability_gap);
        read(*l, "gap_steps", "lyapunov", c.lyapunov.gap_steps);
    }
    if (const json* m = section(root, "markov")) {
        reject_unknown(*m, "markov", {"coordinates", "resolution", "length", "simulate"});
        read(*m, "coordinates", "markov", c.markov.coordinates);
        read(*m, "resolution", "markov", c.markov.resolution);
        read(*m, "length", "markov", c.markov.length);
        read(*m, "simulate", "markov", c.markov.simulate);
    }
    if (const json* k = section(root, "checks")) {
        reject_unknown(*k, "checks",
                       {"cocycle_span", "cocycle_tolerance", "echo_tolerance", "unitarity_length", "unitarity_lags",
                        "unitarity_tolerance"});
        read(*k, "cocycle_span", "checks", c.checks.cocycle_span);
        read(*k, "cocycle_tolerance", "checks", c.checks.cocycle_tolerance);
        read(*k, "echo_tolerance", "checks", c.checks.echo_tolerance);
        read(*k, "unitarity_length", "checks", c.checks.unitarity_length);
        read(*k, "unitarity_lags", "checks", c.checks.unitarity_lags);
        read(*k, "unitarity_tolerance", "checks", c.checks.unitarity_tolerance);
    }

    if (overrides.seed) c.seed = *overrides.seed;
    if (overrides.output_dir) c.output_dir = *overrides.output_dir;
    c.quiet = overrides.quiet;
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path, const Overrides& overrides)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open " + path);
    json file;
    try {
        file = json::parse(in);
    } catch (const json::parse_error& e) {
        // the parser message carries the line and column
        throw ConfigError(path, e.what());
    }
    return make_config(file, overrides);
}

void validate(const ExperimentConfig& c)
{
    try {
        c.system.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError("dynamics", e.what());
    }
    const int m = c.system.state_dim();
    const auto check_coords = [m](const std::vector<int>& coords, const std::string& field) {
        for (int k : coords)
            if (k < 0 || k >= m) throw ConfigError(field, "coordinate " + std::to_string(k) + " out of range");
    };

    if (c.embedding.delays < 1) throw ConfigError("embedding.delays", "must be at least 1");
    if (c.embedding.nodes < 1) throw ConfigError("embedding.nodes", "must be at least 1");
    if (!(c.embedding.contraction > 0.0 && c.embedding.contraction < 1.0))
        throw ConfigError("embedding.contraction", "must lie in (0, 1)");

    const auto& f = c.forecast;
    if (f.measurement != "full-state" && f.measurement != "coordinate-projection" && f.measurement != "trigonometric")
        throw ConfigError("forecast.measurement", "unknown measurement '" + f.measurement + "'");
    if (f.measurement != "full-state" && f.coordinates.empty())
        throw ConfigError("forecast.coordinates", "required for " + f.measurement);
    check_coords(f.coordinates, "forecast.coordinates");
    if (f.hypothesis != "fourier" && f.hypothesis != "gaussian" && f.hypothesis != "affine")
        throw ConfigError("forecast.hypothesis", "unknown hypothesis space '" + f.hypothesis + "'");
    if (f.hypothesis == "fourier") {
        if (f.measurement != "trigonometric") throw ConfigError("forecast.hypothesis", "fourier needs a trigonometric measurement");
        if (c.embedding.kind != EmbeddingKind::delay) throw ConfigError("forecast.hypothesis", "fourier needs delay embedding");
        if (f.order < 1) throw ConfigError("forecast.order", "must be at least 1");
    }
    if (f.hypothesis == "gaussian" && f.centers < 1) throw ConfigError("forecast.centers", "must be at least 1");
    if (!(f.bandwidth_factor > 0.0)) throw ConfigError("forecast.bandwidth_factor", "must be positive");
    if (f.ridge && !(*f.ridge >= 0.0)) throw ConfigError("forecast.ridge", "must be non-negative");
    if (!(f.ridge_factor > 0.0)) throw ConfigError("forecast.ridge_factor", "must be positive");
    if (f.train_length < 10) throw ConfigError("forecast.train_length", "must be at least 10");
    if (f.test_ensemble < 1) throw ConfigError("forecast.test_ensemble", "must be at least 1");
    if (f.test_spacing < 1) throw ConfigError("forecast.test_spacing", "must be at least 1");
    if (f.n_max < 1) throw ConfigError("forecast.n_max", "must be at least 1");
    if (f.train_length < 2 * f.n_max) throw ConfigError("forecast.train_length", "must be at least 2 n_max");

    if (c.lyapunov.steps < 1000) throw ConfigError("lyapunov.steps", "must be at least 1000");
    if (c.lyapunov.exponents < 0 || c.lyapunov.exponents > m)
        throw ConfigError("lyapunov.exponents", "must lie in [0, state dimension]");
    if (c.lyapunov.gap_steps < 1000) throw ConfigError("lyapunov.gap_steps", "must be at least 1000");

    if (c.markov.coordinates.empty()) throw ConfigError("markov.coordinates", "at least one coordinate required");
    check_coords(c.markov.coordinates, "markov.coordinates");
    if (c.markov.resolution < 2) throw ConfigError("markov.resolution", "must be at least 2");
    if (c.markov.length < 2) throw ConfigError("markov.length", "must be at least 2");
    if (c.markov.simulate < 1) throw ConfigError("markov.simulate", "must be at least 1");

    if (c.checks.cocycle_span < 1) throw ConfigError("checks.cocycle_span", "must be at least 1");
    if (c.checks.unitarity_lags < 1) throw ConfigError("checks.unitarity_lags", "must be at least 1");
    if (c.checks.unitarity_length <= c.checks.unitarity_lags)
        throw ConfigError("checks.unitarity_length", "must exceed unitarity_lags");
    if (c.output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

json to_json(const ExperimentConfig& c)
{
    json f = {{"measurement", c.forecast.measurement},
              {"coordinates", c.forecast.coordinates},
              {"hypothesis", c.forecast.hypothesis},
              {"order", c.forecast.order},
              {"centers", c.forecast.centers},
              {"bandwidth_factor", c.forecast.bandwidth_factor},
              {"ridge_factor", c.forecast.ridge_factor},
              {"train_length", c.forecast.train_length},
              {"test_ensemble", c.forecast.test_ensemble},
              {"test_spacing", c.forecast.test_spacing},
              {"n_max", c.forecast.n_max},
              {"reference_exponent", c.forecast.reference_exponent}};
    f["ridge"] = c.forecast.ridge ? json(*c.forecast.ridge) : json("auto");
    return {{"version", c.version},
            {"system", to_string(c.system.kind)},
            {"seed", c.seed},
            {"output_dir", c.output_dir},
            {"dynamics",
             {{"dt", c.system.dt},
              {"substeps", c.system.substeps},
              {"rotation", {c.system.rotation(0), c.system.rotation(1)}},
              {"sigma", c.system.sigma},
              {"rho", c.system.rho},
              {"beta", c.system.beta}}},
            {"embedding",
             {{"kind", to_string(c.embedding.kind)},
              {"delays", c.embedding.delays},
              {"nodes", c.embedding.nodes},
              {"contraction", c.embedding.contraction}}},
            {"forecast", f},
            {"lyapunov",
             {{"steps", c.lyapunov.steps},
              {"exponents", c.lyapunov.exponents},
              {"stability_gap", c.lyapunov.stability_gap},
              {"gap_steps", c.lyapunov.gap_steps}}},
            {"markov",
             {{"coordinates", c.markov.coordinates},
              {"resolution", c.markov.resolution},
              {"length", c.markov.length},
              {"simulate", c.markov.simulate}}},
            {"checks",
             {{"cocycle_span", c.checks.cocycle_span},
              {"cocycle_tolerance", c.checks.cocycle_tolerance},
              {"echo_tolerance", c.checks.echo_tolerance},
              {"unitarity_length", c.checks.unitarity_length},
              {"unitarity_lags", c.checks.unitarity_lags},
              {"unitarity_tolerance", c.checks.unitarity_tolerance}}}};
}

Vec initial_state(const ExperimentConfig& config, std::uint64_t stream)
{
    std::mt19937_64 rng(config.seed * 0x9E3779B97F4A7C15ULL + stream);
    Vec x = default_initial_state(config.system);
    if (config.system.kind == SystemKind::torus) {
        std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
        for (Index i = 0; i < x.size(); ++i) x(i) = angle(rng);
        return x;
    }
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    const Index first = config.system.kind == SystemKind::l63rot ? 1 : 0;
    for (Index i = first; i < x.size(); ++i) x(i) += jitter(rng);
    if (first == 1) x(0) = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
    return x;
}

}  // namespace dynrecon::experiment
