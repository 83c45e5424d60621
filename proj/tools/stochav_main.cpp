// stochav: simulation and verification laboratory for small transversal
// perturbations of completely integrable stochastic Hamiltonian systems.
//
// One subcommand per experiment; every run writes CSV tables plus a JSON
// manifest (config echo, flags, checksums) into the output directory.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "stochav/harness.hpp"
#include "stochav/version.hpp"

namespace {

int exit_code(stochav::ErrorClass c) {
    switch (c) {
        case stochav::ErrorClass::validation: return 2;
        case stochav::ErrorClass::io: return 4;
        default: return 3;
    }
}

void print_models() {
    for (const auto& m : stochav::list_models()) {
        std::cout << m << " (perturbations:";
        for (const auto& p : stochav::list_perturbations(m)) std::cout << " " << p;
        std::cout << ")\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochav: averaging and diffusive limits of perturbed integrable "
                 "stochastic Hamiltonian systems"};
    app.set_version_flag("--version", stochav::kVersion);

    bool list_models = false;
    app.add_flag("--list-models", list_models, "print shipped systems and exit");

    std::string config_path;
    std::string out_override;
    std::string seed_override;
    int workers_override = -1;

    const std::vector<std::string> experiments = {
        "simulate", "average", "rate", "exitprob", "limit2", "weak2", "poisson-check"};
    std::string chosen;
    for (const auto& name : experiments) {
        CLI::App* sub = app.add_subcommand(name, "run the '" + name + "' experiment");
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--out", out_override, "output directory override");
        sub->add_option("--seed", seed_override, "master seed override");
        sub->add_option("--workers", workers_override, "worker count override (0 = auto)");
        sub->callback([&chosen, name] { chosen = name; });
    }
    app.require_subcommand(0, 1);

    CLI11_PARSE(app, argc, argv);

    if (list_models) {
        print_models();
        return 0;
    }
    if (chosen.empty()) {
        std::cout << app.help();
        return 0;
    }

    try {
        stochav::Json j = stochav::Json::object();
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f)
                throw stochav::Error(stochav::ErrorClass::io,
                                     "cannot read config " + config_path);
            f >> j;
        }
        stochav::ExperimentConfig config = stochav::ExperimentConfig::from_json(j);
        config.experiment = chosen;
        if (!out_override.empty()) config.out_dir = out_override;
        if (!seed_override.empty()) config.seed = std::stoull(seed_override);
        if (workers_override >= 0) config.workers = workers_override;

        stochav::ResultBundle bundle = stochav::run(config);
        stochav::emit_tables(bundle, config.out_dir);
        std::cout << "wrote " << bundle.files.size() + 1 << " files to " << config.out_dir
                  << "\n";
        if (bundle.manifest.contains("summary"))
            std::cout << "summary: " << bundle.manifest["summary"].dump() << "\n";
        const auto& flags = bundle.manifest["flags"];
        if (!flags.empty()) std::cout << "flags: " << flags.dump() << "\n";
        return 0;
    } catch (const stochav::Error& e) {
        stochav::Json err = {{"error", stochav::error_class_name(e.error_class())},
                             {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return exit_code(e.error_class());
    } catch (const std::exception& e) {
        stochav::Json err = {{"error", "internal"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 3;
    }
}
