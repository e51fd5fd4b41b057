#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "resque/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"ReSQue stochastic convex optimization toolkit"};

    std::string mode;
    std::string config_path;
    std::vector<std::string> overrides;
    long long seed = -1;
    std::string out_path;

    app.add_option("mode", mode, "parallel | dp_erm | dp_sco | verify")->required();
    app.add_option("--config", config_path, "flat key=value config file");
    app.add_option("--seed", seed, "run a single seed (replaces the config seed list)");
    app.add_option("--out", out_path, "CSV output path");
    app.add_option("--override", overrides, "key=value override (flags win over the config)");

    CLI11_PARSE(app, argc, argv);

    try {
        resque::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = resque::load_config(config_path);
        cfg.mode = mode;
        for (const std::string& ov : overrides) {
            const auto eq = ov.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("override must look like key=value: " + ov);
            resque::apply_config_entry(cfg, ov.substr(0, eq), ov.substr(eq + 1));
        }
        if (seed >= 0) cfg.seeds = {static_cast<std::uint64_t>(seed)};
        if (!out_path.empty()) cfg.out_path = out_path;

        if (cfg.mode == "verify") {
            if (cfg.suite.empty())
                throw std::invalid_argument(
                    "verify mode needs suite=moments|drift|aggregation|accountant|mlmc");
            const resque::VerifyOutcome outcome = resque::verify_suite(cfg.suite);
            std::cout << outcome.render();
            return outcome.ok() ? 0 : 1;
        }

        const resque::RunReport report = resque::run_experiment(cfg);
        std::cout << report.summary;
        if (cfg.out_path.empty()) std::cout << resque::to_csv(report);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
