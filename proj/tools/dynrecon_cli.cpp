#include "dynrecon/experiment/checks.hpp"
#include "dynrecon/experiment/runners.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <iostream>

using namespace dynrecon;
using namespace dynrecon::experiment;

namespace {

enum Exit { ok = 0, validation = 1, numerical = 2, checks_failed = 3 };

struct Options {
    std::string config_path;
    std::string out;
    std::uint64_t seed = 0;
    std::string system;
    std::string embedding;
    bool quiet = false;
};

ExperimentConfig resolve(const Options& o, CLI::App& sub)
{
    Overrides ov;
    if (!o.system.empty()) ov.system = system_kind_from_string(o.system);
    if (!o.embedding.empty()) ov.embedding = o.embedding == "delay" ? EmbeddingKind::delay : EmbeddingKind::reservoir;
    if (sub.count("--seed")) ov.seed = o.seed;
    if (!o.out.empty()) ov.output_dir = o.out;
    ov.quiet = o.quiet;
    if (!o.config_path.empty()) return load_config(o.config_path, ov);
    return make_config(nlohmann::json::object(), ov);
}

void add_common(CLI::App& sub, Options& o)
{
    sub.add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub.add_option("--out", o.out, "output directory");
    sub.add_option("--seed", o.seed, "random seed");
    sub.add_option("--system", o.system, "reference system")->check(CLI::IsMember({"torus", "l63", "l63rot"}));
    sub.add_option("--embedding", o.embedding, "embedding paradigm")->check(CLI::IsMember({"delay", "reservoir"}));
    sub.add_flag("--quiet", o.quiet, "suppress the summary on stdout");
}

void say(const ExperimentConfig& c, const std::string& text)
{
    if (!c.quiet) std::cout << text << std::endl;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Reconstruction, forecasting and Markov diagnostics for sampled dynamical systems"};
    app.require_subcommand(1);
    Options o;
    CLI::App* forecast = app.add_subcommand("forecast", "direct and iterative forecast error curves");
    CLI::App* lyapunov = app.add_subcommand("lyapunov", "Lyapunov spectrum and stability gap");
    CLI::App* markov = app.add_subcommand("markov", "Ulam transition matrix and stationary measure");
    CLI::App* checks = app.add_subcommand("checks", "property suite");
    for (CLI::App* sub : {forecast, lyapunov, markov, checks}) add_common(*sub, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Exit::ok : Exit::validation;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    try {
        CLI::App* sub = app.get_subcommands().front();
        const ExperimentConfig config = resolve(o, *sub);
        Manifest manifest(config.output_dir, sub->get_name(), to_json(config));
        int status = Exit::ok;
        if (sub == forecast) {
            const ForecastReport r = run_forecast(config);
            write_forecast(r, manifest);
            say(config, summary(r).dump(2));
        } else if (sub == lyapunov) {
            const LyapunovReport r = run_lyapunov(config);
            write_lyapunov(r, manifest);
            say(config, summary(r).dump(2));
        } else if (sub == markov) {
            const MarkovReport r = run_markov(config);
            write_markov(r, manifest);
            say(config, summary(r).dump(2));
        } else {
            const auto results = run_checks(config);
            write_checks(results, manifest);
            for (const auto& r : results) {
                say(config, (r.passed ? "PASS " : "FAIL ") + r.name + " value=" + format_number(r.value) +
                                " threshold=" + format_number(r.threshold));
                if (!r.passed) status = Exit::checks_failed;
            }
        }
        manifest.finish(elapsed());
        return status;
    } catch (const ConfigError& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return Exit::validation;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return Exit::validation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return Exit::numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return Exit::numerical;
    }
}
