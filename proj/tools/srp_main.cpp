// Command-line front end: tabulate the analytic limit formulas, run
// finite-N simulations, compare the two, and check the transport-system
// residuals. Experiment parameters live in a JSON config file; flags only
// carry paths, the seed override, thread count, and output format.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "srp/srp.hpp"

namespace {

int thread_default() {
    if (const char* env = std::getenv("SRP_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1)
            return v;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Move-to-front ranking limits: analytic formulas and finite-N "
        "simulation"};
    app.require_subcommand(1);
    app.fallthrough();  // flags may follow the subcommand

    std::string config_path;
    std::string out_dir = ".";
    std::string format_name = "csv";
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    int threads = thread_default();

    app.add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads for replicas");
    app.add_option("--format", format_name, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--seed", seed_override, "override the config seed")
        ->each([&seed_given](const std::string&) { seed_given = true; });

    auto* analytic = app.add_subcommand(
        "analytic", "tabulate limit formulas on the configured grids");
    auto* simulate = app.add_subcommand(
        "simulate", "finite-N sweeps with sample dumps");
    auto* compare = app.add_subcommand(
        "compare", "z-test simulated estimates against the analytic limits");
    auto* pde = app.add_subcommand(
        "pde-check", "transport-equation residuals of the closed form");

    CLI11_PARSE(app, argc, argv);

    try {
        srp::ExperimentConfig cfg = srp::load_config(config_path);
        if (seed_given)
            cfg.seed = seed_override;
        cfg.threads = threads;
        srp::OutputFormat format = format_name == "json"
                                       ? srp::OutputFormat::JsonOnly
                                       : srp::OutputFormat::CsvWithJson;
        srp::CommandResult result;
        if (analytic->parsed())
            result = srp::cmd_analytic(cfg, out_dir, format);
        else if (simulate->parsed())
            result = srp::cmd_simulate(cfg, out_dir, format);
        else if (compare->parsed())
            result = srp::cmd_compare(cfg, out_dir, format);
        else if (pde->parsed())
            result = srp::cmd_pde_check(cfg, out_dir, format);
        for (const auto& f : result.files)
            std::cout << "wrote " << f << "\n";
        return result.exit_code;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
