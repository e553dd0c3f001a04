#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "merchant/errors.hpp"
#include "merchant/report.hpp"

namespace {

struct SubArgs {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
    std::int64_t trials = 0;
};

void add_experiment(CLI::App& app, const std::string& kind, const std::string& blurb,
                    int& exit_code) {
    auto args = std::make_shared<SubArgs>();
    CLI::App* sub = app.add_subcommand(kind, blurb);
    sub->add_option("--config", args->config, "experiment config JSON")->required();
    sub->add_option("--seed", args->seed, "override the config seed")
        ->each([args](const std::string&) { args->seed_set = true; });
    sub->add_option("--out", args->out_dir, "override the output directory");
    sub->add_option("--trials", args->trials, "override the trial count");
    sub->callback([kind, args, &exit_code] {
        merchant::report::Overrides ov;
        if (args->seed_set) ov.seed = args->seed;
        if (!args->out_dir.empty()) ov.out_dir = args->out_dir;
        if (args->trials > 0) ov.trials = args->trials;
        try {
            const auto summary = merchant::report::run(kind, args->config, ov);
            std::cout << summary.dump(2) << std::endl;
            exit_code = 0;
        } catch (const merchant::InvalidConfig& e) {
            std::cerr << "error: " << e.what() << std::endl;
            exit_code = 2;
        } catch (const merchant::Error& e) {
            std::cerr << "error: " << e.what() << std::endl;
            exit_code = 3;
        }
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"merchant: false-coin detection experiments on Gaussian and Brownian probes"};
    app.require_subcommand(1);
    int exit_code = 0;
    add_experiment(app, "finite", "Gaussian device: Monte Carlo vs analytic bounds", exit_code);
    add_experiment(app, "bounds", "analytic bound tables only (no sampling)", exit_code);
    add_experiment(app, "tentative", "finite-dimensional section measures in l2", exit_code);
    add_experiment(app, "brownian", "Wiener-measure device with perturbed time scale", exit_code);
    add_experiment(app, "halting", "run the Brownian device against a toy program", exit_code);
    CLI11_PARSE(app, argc, argv);
    return exit_code;
}
