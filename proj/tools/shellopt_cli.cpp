#include <iostream>

#include <CLI11.hpp>

#include "shellopt/shellopt.hpp"

using namespace shellopt;

int main(int argc, char** argv) {
    CLI::App app{"Shell support structure optimization"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    unsigned seed = 0;
    struct Command {
        const char* name;
        const char* help;
        PipelineMode mode;
    };
    const Command commands[] = {
        {"field", "solve the strain field program and write field.json", PipelineMode::Field},
        {"optimize", "optimize block sizes and write cells.json and trace.csv", PipelineMode::Optimize},
        {"inflate", "build solids from cells.json and write structure.obj", PipelineMode::Inflate},
        {"all", "run every stage and write the report", PipelineMode::All},
    };
    std::vector<std::pair<CLI::App*, PipelineMode>> subs;
    for (const auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", config_path, "pipeline config JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides the config)");
        sub->add_option("--seed", seed, "seed for randomized mesh jitter");
        subs.emplace_back(sub, c.mode);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    PipelineMode mode = PipelineMode::All;
    for (const auto& [sub, m] : subs) {
        if (sub->parsed()) mode = m;
    }
    try {
        PipelineConfig cfg = run_stage(Stage::Config, [&] { return load_pipeline_config(config_path); });
        if (!out_dir.empty()) cfg.output = out_dir;
        nlohmann::json report = run_pipeline(cfg, seed, mode);
        std::cout << report.dump(1) << '\n';
    } catch (const StageError& e) {
        std::cerr << "shellopt: " << e.what() << '\n';
        return e.exit_code();
    }
    return 0;
}
