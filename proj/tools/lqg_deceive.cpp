// Command-line front end: exact LQG solving, perturbation bounds, cost-
// falsification attacks, frequency-domain feasibility evidence, and the
// scripted end-to-end reproduction pipeline.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include <lqgd/experiments.hpp>
#include <lqgd/log.hpp>
#include <lqgd/rng.hpp>

namespace {

void print_error_json(const std::string& type, const std::string& message) {
    lqgd::Json j;
    j["error"] = message;
    j["type"] = type;
    std::printf("%s\n", j.dump().c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LQG cost-signal poisoning toolkit"};
    app.require_subcommand(1);

    std::string config_path = "configs/vehicle6d.json";
    std::string out_dir = "out";
    std::string run_dir;
    bool dump_problem = false;
    bool parallel = false;
    int grid = 0;
    std::uint64_t seed_override = 0;
    bool have_seed_override = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config JSON");
        cmd->add_option("--out", out_dir, "output directory");
    };

    CLI::App* solve = app.add_subcommand("solve", "exact DLQG policy and value");
    add_common(solve);

    CLI::App* bounds = app.add_subcommand("bounds", "perturbation constants and the "
                                                    "empirical verification harness");
    add_common(bounds);
    bounds->add_flag("--parallel", parallel, "evaluate verification trials with OpenMP");

    CLI::App* attack = app.add_subcommand("attack", "minimal cost falsification for the "
                                                    "target policy");
    add_common(attack);
    attack->add_flag("--dump-problem", dump_problem, "write the assembled conic problem");

    CLI::App* feas = app.add_subcommand("feasibility", "frequency-domain achievability "
                                                       "evidence for the target");
    add_common(feas);
    feas->add_option("--grid", grid, "unit-circle grid size");
    feas->add_flag("--parallel", parallel, "evaluate grid points with OpenMP");

    CLI::App* reproduce = app.add_subcommand("reproduce", "full pinned-seed pipeline with a "
                                                          "summary against reference values");
    add_common(reproduce);
    reproduce->add_option("--seed", seed_override, "override all pipeline seeds")
        ->each([&](const std::string&) { have_seed_override = true; });

    CLI::App* plotdata = app.add_subcommand("plotdata", "tidy CSV series from a run directory");
    plotdata->add_option("--run", run_dir, "reproduce output directory")->required();
    plotdata->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (plotdata->parsed()) {
            lqgd::run_plotdata(run_dir, out_dir);
            return 0;
        }
        lqgd::ExperimentConfig cfg = lqgd::ExperimentConfig::load(config_path);
        if (solve->parsed()) {
            lqgd::run_solve(cfg, out_dir);
        } else if (bounds->parsed()) {
            lqgd::run_bounds(cfg, out_dir, parallel);
        } else if (attack->parsed()) {
            lqgd::run_attack(cfg, out_dir, dump_problem);
        } else if (feas->parsed()) {
            lqgd::run_feasibility(cfg, out_dir, grid, parallel);
        } else if (reproduce->parsed()) {
            if (have_seed_override) {
                cfg.batch.seed = seed_override;
                cfg.adp.cfg.seed = lqgd::derive_seed(seed_override, 1);
                cfg.adp.seed_attacked = lqgd::derive_seed(seed_override, 2);
                cfg.bounds.seed = lqgd::derive_seed(seed_override, 3);
            }
            const lqgd::ReproduceResult result = lqgd::run_reproduce(cfg, out_dir);
            if (!result.all_passed)
                return 1;
        }
        return 0;
    } catch (const lqgd::ParameterError& e) {
        print_error_json("parameter_error", e.what());
        return 2;
    } catch (const lqgd::DimensionError& e) {
        print_error_json("dimension_error", e.what());
        return 2;
    } catch (const lqgd::InfeasibleError& e) {
        print_error_json("infeasible", e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error_json("error", e.what());
        return 1;
    }
}
