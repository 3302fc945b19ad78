#pragma once

#include <optional>
#include <string>

#include "lqgd/adp.hpp"
#include "lqgd/attack.hpp"
#include "lqgd/batch.hpp"
#include "lqgd/bounds.hpp"
#include "lqgd/serialize.hpp"
#include "lqgd/types.hpp"

namespace lqgd {

// Experiment configuration, loaded from JSON. The schema is strict: unknown
// keys anywhere are rejected before any computation starts.
struct ExperimentConfig {
    LinearSystem sys;
    CostParams cost;
    double gamma = 0.9;
    Vector x0;
    std::optional<AttackTarget> target;

    struct BatchSection {
        Eigen::Index T = 400;
        double control_box = 1.0;
        std::uint64_t seed = 0;
    } batch;

    struct AdpSection {
        std::optional<Policy> init;
        AdpConfig cfg;  // cfg.seed is the clean-run seed
        std::uint64_t seed_attacked = 1;
        int trace_stride = 1;
    } adp;

    struct BoundsSection {
        int n_trials = 100;
        double eps = 1e-3;
        std::uint64_t seed = 0;
    } bounds;

    struct FeasibilitySection {
        int grid = 1024;
        std::optional<Matrix> E_trial;  // defaults to identity
    } feasibility;

    struct Tolerances {
        double riccati_tol = 1e-10;
        ConicSettings conic;
        double eps_strict = 1e-6;
        double certify_tol = 1e-4;
    } tols;

    // Printed reference values for the reproduction summary (optional).
    Json expectations;

    static ExperimentConfig from_json(const Json& j);
    static ExperimentConfig load(const std::string& path);
    Json to_json_echo() const { return echo_; }
    std::string config_hash() const;

  private:
    Json echo_;
};

struct CheckLine {
    std::string name;
    std::string detail;
    bool pass = true;
    bool checked = false;  // false when no expectation was configured
};

struct ReproduceResult {
    std::vector<CheckLine> checks;
    bool all_passed = true;
};

// Pipeline drivers used by the CLI subcommands. All write into out_dir and
// return nothing on success; failures surface as exceptions.
void run_solve(const ExperimentConfig& cfg, const std::string& out_dir);
void run_bounds(const ExperimentConfig& cfg, const std::string& out_dir, bool parallel);
void run_attack(const ExperimentConfig& cfg, const std::string& out_dir, bool dump_problem);
void run_feasibility(const ExperimentConfig& cfg, const std::string& out_dir, int grid_override,
                     bool parallel);
// Full pinned-seed pipeline: solve, synthesize, batch generate/attack/learn,
// clean and attacked ADP runs (in parallel), then a summary comparing every
// produced number against the configured reference values.
ReproduceResult run_reproduce(const ExperimentConfig& cfg, const std::string& out_dir);
void run_plotdata(const std::string& run_dir, const std::string& out_dir);

}  // namespace lqgd
