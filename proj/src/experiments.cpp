#include "lqgd/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "lqgd/lqg.hpp"
#include "lqgd/log.hpp"

namespace lqgd {
namespace {

namespace fs = std::filesystem;

void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    if (!j.is_object())
        throw ParameterError("config: " + where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed)
            if (it.key() == key) {
                ok = true;
                break;
            }
        if (!ok)
            throw ParameterError("config: unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    if (j.contains(key))
        return j.at(key).get<T>();
    return fallback;
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

double max_abs_dev(const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

CheckLine check_value(const std::string& name, bool pass, const std::string& detail) {
    return CheckLine{name, detail, pass, true};
}

std::string num(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
    check_keys(j, {"system", "cost", "gamma", "x0", "target", "batch", "adp", "bounds",
                   "feasibility", "tolerances", "expectations"},
               "top level");
    ExperimentConfig cfg;
    cfg.echo_ = j;

    const Json& sys = j.at("system");
    check_keys(sys, {"A", "B", "C", "noise_std"}, "system");
    cfg.sys.A = matrix_from_json(sys.at("A"), "system.A");
    cfg.sys.B = matrix_from_json(sys.at("B"), "system.B");
    cfg.sys.C = sys.contains("C") ? matrix_from_json(sys.at("C"), "system.C")
                                  : Matrix::Identity(cfg.sys.A.rows(), cfg.sys.A.rows());
    cfg.sys.noise_std = get_or(sys, "noise_std", 0.0);
    cfg.sys.validate();

    const Json& cost = j.at("cost");
    check_keys(cost, {"D", "E", "d", "r"}, "cost");
    cfg.cost.D = matrix_from_json(cost.at("D"), "cost.D");
    cfg.cost.E = matrix_from_json(cost.at("E"), "cost.E");
    cfg.cost.d = cost.contains("d") ? vector_from_json(cost.at("d"), "cost.d")
                                    : Vector::Zero(cfg.sys.state_dim());
    cfg.cost.r = get_or(cost, "r", 0.0);
    cfg.cost.validate(cfg.sys.state_dim(), cfg.sys.input_dim());

    cfg.gamma = j.at("gamma").get<double>();
    if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0))
        throw ParameterError("config: gamma must lie strictly in (0,1)");

    cfg.x0 = j.contains("x0") ? vector_from_json(j.at("x0"), "x0")
                              : Vector::Zero(cfg.sys.state_dim());

    if (j.contains("target")) {
        check_keys(j.at("target"), {"K", "k"}, "target");
        AttackTarget t;
        t.K = matrix_from_json(j.at("target").at("K"), "target.K");
        t.k = vector_from_json(j.at("target").at("k"), "target.k");
        cfg.target = t;
    }

    if (j.contains("batch")) {
        const Json& b = j.at("batch");
        check_keys(b, {"T", "control_box", "seed"}, "batch");
        cfg.batch.T = get_or<Eigen::Index>(b, "T", 400);
        cfg.batch.control_box = get_or(b, "control_box", 1.0);
        cfg.batch.seed = get_or<std::uint64_t>(b, "seed", 0);
    }

    if (j.contains("adp")) {
        const Json& a = j.at("adp");
        check_keys(a, {"init_K", "init_k", "beta", "eps1", "eps2", "probe_std", "min_inner",
                       "max_inner", "max_outer", "blowup_threshold", "seed_clean",
                       "seed_attacked", "trace_stride"},
                   "adp");
        if (a.contains("init_K")) {
            Policy init;
            init.K = matrix_from_json(a.at("init_K"), "adp.init_K");
            init.k = a.contains("init_k") ? vector_from_json(a.at("init_k"), "adp.init_k")
                                          : Vector::Zero(cfg.sys.input_dim());
            cfg.adp.init = init;
        }
        cfg.adp.cfg.beta = get_or(a, "beta", 10.0);
        cfg.adp.cfg.eps1 = get_or(a, "eps1", 1e-5);
        cfg.adp.cfg.eps2 = get_or(a, "eps2", 1e-5);
        cfg.adp.cfg.probe_std = get_or(a, "probe_std", 0.5);
        cfg.adp.cfg.min_inner = get_or(a, "min_inner", 0);
        cfg.adp.cfg.max_inner = get_or(a, "max_inner", 100000);
        cfg.adp.cfg.max_outer = get_or(a, "max_outer", 100);
        cfg.adp.cfg.blowup_threshold = get_or(a, "blowup_threshold", 1e6);
        cfg.adp.cfg.seed = get_or<std::uint64_t>(a, "seed_clean", 0);
        cfg.adp.seed_attacked = get_or<std::uint64_t>(a, "seed_attacked", 1);
        cfg.adp.trace_stride = get_or(a, "trace_stride", 1);
    }

    if (j.contains("bounds")) {
        const Json& b = j.at("bounds");
        check_keys(b, {"n_trials", "eps", "seed"}, "bounds");
        cfg.bounds.n_trials = get_or(b, "n_trials", 100);
        cfg.bounds.eps = get_or(b, "eps", 1e-3);
        cfg.bounds.seed = get_or<std::uint64_t>(b, "seed", 0);
    }

    if (j.contains("feasibility")) {
        const Json& f = j.at("feasibility");
        check_keys(f, {"grid", "E_trial"}, "feasibility");
        cfg.feasibility.grid = get_or(f, "grid", 1024);
        if (f.contains("E_trial"))
            cfg.feasibility.E_trial = matrix_from_json(f.at("E_trial"), "feasibility.E_trial");
    }

    if (j.contains("tolerances")) {
        const Json& t = j.at("tolerances");
        check_keys(t, {"riccati_tol", "conic_tol_primal", "conic_tol_dual", "conic_max_iters",
                       "eps_strict", "certify_tol"},
                   "tolerances");
        cfg.tols.riccati_tol = get_or(t, "riccati_tol", 1e-10);
        cfg.tols.conic.tol_primal = get_or(t, "conic_tol_primal", 1e-8);
        cfg.tols.conic.tol_dual = get_or(t, "conic_tol_dual", 1e-8);
        cfg.tols.conic.max_iters = get_or(t, "conic_max_iters", 200000);
        cfg.tols.eps_strict = get_or(t, "eps_strict", 1e-6);
        cfg.tols.certify_tol = get_or(t, "certify_tol", 1e-4);
    }

    if (j.contains("expectations")) {
        check_keys(j.at("expectations"),
                   {"K_opt", "K_opt_entry_tol", "k_opt_norm_max", "attack_objective",
                    "attack_objective_rtol", "D_dag", "d_dag", "E_dag", "attack_entry_tol",
                    "attack_certify_tol", "batch_clean_k_norm_max", "batch_poisoned_k",
                    "batch_poisoned_k_tol", "falsification_min", "falsification_max",
                    "adp_entry_tol", "adp_max_updates"},
                   "expectations");
        cfg.expectations = j.at("expectations");
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParameterError("config not found: " + path);
    Json j;
    try {
        in >> j;
    } catch (const Json::parse_error& e) {
        throw ParameterError("config parse error in " + path + ": " + e.what());
    }
    return from_json(j);
}

std::string ExperimentConfig::config_hash() const { return fnv1a_hex(echo_.dump()); }

void run_solve(const ExperimentConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir);
    const auto rep = check_assumptions(cfg.sys, cfg.cost);
    if (!rep.dlqg_ok())
        throw ParameterError("solve: system fails the controllability/observability "
                             "assumptions");
    auto [pi, value] = dlqg(cfg.sys, cfg.cost, Discount(cfg.gamma), cfg.tols.riccati_tol);
    write_json_file(join(out_dir, "policy.json"), policy_to_json(pi));
    write_json_file(join(out_dir, "value.json"), value_to_json(value));
    log::info("solve: wrote policy.json and value.json to " + out_dir);
}

void run_bounds(const ExperimentConfig& cfg, const std::string& out_dir, bool parallel) {
    ensure_dir(out_dir);
    const PerturbationBounds b =
        perturbation_bounds(cfg.sys, cfg.cost, Discount(cfg.gamma));
    write_json_file(join(out_dir, "bounds.json"), bounds_to_json(b));

    VerifySettings vs;
    vs.n_trials = cfg.bounds.n_trials;
    vs.eps = cfg.bounds.eps;
    vs.seed = cfg.bounds.seed;
    vs.parallel = parallel;
    const VerifyReport vr = verify_bounds(cfg.sys, cfg.cost, Discount(cfg.gamma), vs);
    write_json_file(join(out_dir, "verify.json"), verify_report_to_json(vr));

    const Json bj = bounds_to_json(b);
    std::printf("%-10s %s\n", "quantity", "value");
    for (const char* key : {"gamma1", "gamma2", "gamma3", "gamma4", "gamma5", "gamma6",
                            "gamma7", "gamma8", "gamma9", "rho_Ac", "tau_Ac", "eps_prop1",
                            "eps_max", "K_coef_D", "K_coef_E", "k_coef_D", "k_coef_E",
                            "k_coef_d"}) {
        const auto& v = bj.at(key);
        if (v.is_string())
            std::printf("%-10s %s\n", key, v.get<std::string>().c_str());
        else
            std::printf("%-10s %.10g\n", key, v.get<double>());
    }
    std::printf("verify: %d trials, %d violations, max ratio %.3g\n", vr.trials,
                vr.violations, vr.max_ratio);
}

void run_attack(const ExperimentConfig& cfg, const std::string& out_dir, bool dump_problem) {
    if (!cfg.target)
        throw ParameterError("attack: config has no target policy");
    ensure_dir(out_dir);
    SynthesizeSettings ss;
    ss.conic = cfg.tols.conic;
    ss.eps_strict = cfg.tols.eps_strict;
    ss.certify_tol = cfg.tols.certify_tol;
    if (dump_problem) {
        const SynthesisProblem sp = build_synthesis_problem(
            cfg.sys, cfg.cost, Discount(cfg.gamma), *cfg.target, ss.eps_strict);
        write_text_file(join(out_dir, "problem.json"), sp.problem.dump_json());
    }
    const AttackSolution sol =
        synthesize(cfg.sys, cfg.cost, Discount(cfg.gamma), *cfg.target, ss);
    write_json_file(join(out_dir, "attack_solution.json"), attack_solution_to_json(sol));

    std::ostringstream cert;
    cert << "cost falsification certificate\n"
         << "==============================\n"
         << "objective ||D'-D||_F + ||d'-d||_2 + ||E'-E||_F = " << num(sol.objective) << "\n"
         << "solver status: "
         << (sol.solver_status == ConicStatus::Optimal ? "optimal" : "max_iters")
         << ", primal residual " << sol.primal_residual << ", " << sol.iterations
         << " iterations\n"
         << "round-trip check: dlqg(D',E',d') vs target, max deviation "
         << num(sol.certification_error) << " -> "
         << (sol.certified ? "CERTIFIED" : "NOT certified") << "\n"
         << "min eigenvalue of E': "
         << num(Eigen::SelfAdjointEigenSolver<Matrix>(sol.cost_dag.E).eigenvalues().minCoeff())
         << " (strictness margin)\n";
    write_text_file(join(out_dir, "certificate.txt"), cert.str());
    std::printf("%s", cert.str().c_str());
}

void run_feasibility(const ExperimentConfig& cfg, const std::string& out_dir,
                     int grid_override, bool parallel) {
    if (!cfg.target)
        throw ParameterError("feasibility: config has no target policy");
    ensure_dir(out_dir);
    FeasibilitySettings fsopt;
    fsopt.grid_size = grid_override > 0 ? grid_override : cfg.feasibility.grid;
    fsopt.parallel = parallel;
    const Matrix E_trial = cfg.feasibility.E_trial
                               ? *cfg.feasibility.E_trial
                               : Matrix::Identity(cfg.sys.input_dim(), cfg.sys.input_dim());
    const FeasibilityReport rep =
        feasibility_check(cfg.sys, E_trial, Discount(cfg.gamma), *cfg.target, fsopt);
    write_json_file(join(out_dir, "feasibility.json"), feasibility_report_to_json(rep));
    const Json rj = feasibility_report_to_json(rep);
    std::printf("verdict: %s  cond1 min eig %.6g  cond2 min eig %.6g  (%d grid points, %d skipped)\n",
                rj.at("verdict").get<std::string>().c_str(), rep.cond1_W0_min_eig,
                rep.cond2_min_eig_over_grid, rep.grid_size, rep.skipped_points);
}

namespace {

struct ReproduceArtifacts {
    Policy pi_star;
    AttackSolution attack;
    Policy batch_clean;
    Policy batch_poisoned;
    PoisonedDataset poisoned;
    Policy adp_clean;
    AdpTrace adp_clean_trace;
    AdpAttackResult adp_attacked;
};

void add_expectation_checks(const ExperimentConfig& cfg, const ReproduceArtifacts& art,
                            ReproduceResult& out) {
    const Json& ex = cfg.expectations;
    if (ex.is_null() || ex.empty())
        return;
    auto push = [&](CheckLine line) {
        out.checks.push_back(line);
        out.all_passed = out.all_passed && line.pass;
    };

    if (ex.contains("K_opt")) {
        const Matrix K_ref = matrix_from_json(ex.at("K_opt"), "expectations.K_opt");
        const double tol = ex.value("K_opt_entry_tol", 1e-3);
        const double dev = max_abs_dev(art.pi_star.K, K_ref);
        push(check_value("dlqg_gain", dev <= tol,
                         "max entry dev " + num(dev) + " (tol " + num(tol) + ")"));
        const double kmax = ex.value("k_opt_norm_max", 1e-6);
        push(check_value("dlqg_affine", art.pi_star.k.norm() <= kmax,
                         "||k|| " + num(art.pi_star.k.norm()) + " (max " + num(kmax) + ")"));
    }
    if (ex.contains("attack_objective")) {
        const double ref = ex.at("attack_objective").get<double>();
        const double rtol = ex.value("attack_objective_rtol", 0.01);
        const double rel = std::abs(art.attack.objective - ref) / ref;
        push(check_value("attack_objective", rel <= rtol,
                         num(art.attack.objective) + " vs " + num(ref) + " (rel dev " +
                             num(rel) + ")"));
    }
    if (ex.contains("D_dag")) {
        const double tol = ex.value("attack_entry_tol", 5e-3);
        const double dev =
            std::max({max_abs_dev(art.attack.cost_dag.D,
                                  matrix_from_json(ex.at("D_dag"), "expectations.D_dag")),
                      (art.attack.cost_dag.d -
                       vector_from_json(ex.at("d_dag"), "expectations.d_dag"))
                          .cwiseAbs()
                          .maxCoeff(),
                      max_abs_dev(art.attack.cost_dag.E,
                                  matrix_from_json(ex.at("E_dag"), "expectations.E_dag"))});
        push(check_value("attack_parameters", dev <= tol,
                         "max entry dev " + num(dev) + " (tol " + num(tol) + ")"));
    }
    if (ex.contains("attack_certify_tol")) {
        const double tol = ex.at("attack_certify_tol").get<double>();
        push(check_value("attack_round_trip", art.attack.certification_error <= tol,
                         "round-trip dev " + num(art.attack.certification_error) + " (tol " +
                             num(tol) + ")"));
    }
    if (ex.contains("batch_clean_k_norm_max")) {
        const double kmax = ex.at("batch_clean_k_norm_max").get<double>();
        push(check_value("batch_clean_affine", art.batch_clean.k.norm() <= kmax,
                         "||k|| " + num(art.batch_clean.k.norm()) + " (max " + num(kmax) +
                             ")"));
    }
    if (ex.contains("batch_poisoned_k")) {
        const Vector ref = vector_from_json(ex.at("batch_poisoned_k"), "batch_poisoned_k");
        const double tol = ex.value("batch_poisoned_k_tol", 0.15);
        bool ok = true;
        for (Eigen::Index i = 0; i < ref.size(); ++i) {
            ok = ok && std::abs(art.batch_poisoned.k[i] - ref[i]) <= tol;
            ok = ok && art.batch_poisoned.k[i] * ref[i] >= 0.0;
        }
        std::ostringstream got;
        got << "[";
        for (Eigen::Index i = 0; i < art.batch_poisoned.k.size(); ++i)
            got << (i ? ", " : "") << num(art.batch_poisoned.k[i]);
        got << "]";
        push(check_value("batch_poisoned_affine", ok,
                         got.str() + " vs printed, band " + num(tol) + " with sign match"));
    }
    if (ex.contains("falsification_min")) {
        const double lo = ex.at("falsification_min").get<double>();
        const double hi = ex.at("falsification_max").get<double>();
        const double f = art.poisoned.relative_falsification;
        push(check_value("batch_falsification", f >= lo && f <= hi,
                         num(100.0 * f) + "% in [" + num(100.0 * lo) + "%, " +
                             num(100.0 * hi) + "%]"));
    }
    if (ex.contains("adp_entry_tol") && ex.contains("K_opt")) {
        const double tol = ex.at("adp_entry_tol").get<double>();
        const Matrix K_ref = matrix_from_json(ex.at("K_opt"), "expectations.K_opt");
        const double dev_clean =
            std::max(max_abs_dev(art.adp_clean.K, K_ref), art.adp_clean.k.cwiseAbs().maxCoeff());
        push(check_value("adp_clean_policy", dev_clean <= tol,
                         "max entry dev " + num(dev_clean) + " (tol " + num(tol) + ")"));
        const double dev_att = std::max(
            max_abs_dev(art.adp_attacked.learned.K, cfg.target->K),
            (art.adp_attacked.learned.k - cfg.target->k).cwiseAbs().maxCoeff());
        push(check_value("adp_attacked_policy", dev_att <= tol,
                         "max entry dev " + num(dev_att) + " (tol " + num(tol) + ")"));
    }
    if (ex.contains("adp_max_updates")) {
        const int cap = ex.at("adp_max_updates").get<int>();
        const int used =
            std::max(art.adp_clean_trace.updates(), art.adp_attacked.trace.updates());
        push(check_value("adp_updates", used <= cap,
                         num(used) + " policy updates (cap " + num(cap) + ")"));
    }
}

}  // namespace

ReproduceResult run_reproduce(const ExperimentConfig& cfg, const std::string& out_dir) {
    if (!cfg.target)
        throw ParameterError("reproduce: config has no target policy");
    if (!cfg.adp.init)
        throw ParameterError("reproduce: config has no ADP initial policy");
    ensure_dir(out_dir);
    ensure_dir(join(out_dir, "batch_run"));
    ensure_dir(join(out_dir, "adp_run"));

    Json manifest;
    manifest["tool"] = "lqg_deceive";
    manifest["format_version"] = 1;
    manifest["config_hash"] = cfg.config_hash();
    manifest["config"] = cfg.to_json_echo();
    write_json_file(join(out_dir, "manifest.json"), manifest);

    ReproduceArtifacts art;
    const Discount gamma(cfg.gamma);

    // Stage 1: exact solve.
    log::info("reproduce: stage 1, exact DLQG");
    ValueQuad value;
    std::tie(art.pi_star, value) = dlqg(cfg.sys, cfg.cost, gamma, cfg.tols.riccati_tol);
    write_json_file(join(out_dir, "policy.json"), policy_to_json(art.pi_star));
    write_json_file(join(out_dir, "value.json"), value_to_json(value));

    // Stage 2: minimal cost falsification for the target.
    log::info("reproduce: stage 2, attack synthesis");
    SynthesizeSettings ss;
    ss.conic = cfg.tols.conic;
    ss.eps_strict = cfg.tols.eps_strict;
    ss.certify_tol = cfg.tols.certify_tol;
    art.attack = synthesize(cfg.sys, cfg.cost, gamma, *cfg.target, ss);
    write_json_file(join(out_dir, "attack_solution.json"),
                    attack_solution_to_json(art.attack));

    // Stage 3: batch pipeline.
    log::info("reproduce: stage 3, batch pipeline");
    DatasetOptions dopt;
    dopt.control_box = cfg.batch.control_box;
    dopt.x0 = cfg.x0;
    const Dataset ds = generate_dataset(cfg.sys, cfg.cost, cfg.batch.T, cfg.batch.seed, dopt);
    write_text_file(join(out_dir, "batch_run/dataset.csv"), dataset_to_csv(ds));
    write_json_file(join(out_dir, "batch_run/dataset_meta.json"), dataset_meta_json(ds));

    BatchEstimates est_clean;
    art.batch_clean = batch_learn(ds, gamma, &est_clean);

    BatchAttackSettings bas;
    bas.conic = cfg.tols.conic;
    bas.eps_strict = cfg.tols.eps_strict;
    art.poisoned = batch_attack(ds, gamma, *cfg.target, bas);
    write_text_file(join(out_dir, "batch_run/poisoned.csv"),
                    dataset_to_csv(art.poisoned.base, &art.poisoned.c_dag));
    BatchEstimates est_poisoned;
    art.batch_poisoned = batch_learn(art.poisoned.base, gamma, &est_poisoned);

    Json batch_summary;
    batch_summary["relative_falsification"] = art.poisoned.relative_falsification;
    batch_summary["objective_c_distance"] = art.poisoned.objective;
    batch_summary["clean_policy"] = policy_to_json(art.batch_clean);
    batch_summary["poisoned_policy"] = policy_to_json(art.batch_poisoned);
    batch_summary["cost_dag"] = Json{{"D", matrix_to_json(art.poisoned.cost_dag.D)},
                                     {"E", matrix_to_json(art.poisoned.cost_dag.E)},
                                     {"d", vector_to_json(art.poisoned.cost_dag.d)},
                                     {"r", art.poisoned.cost_dag.r}};
    batch_summary["dynamics_rms"] = est_clean.dynamics_rms;
    batch_summary["cost_rms"] = est_clean.cost_rms;
    write_json_file(join(out_dir, "batch_run/batch_summary.json"), batch_summary);

    // Stage 4: ADP runs, clean and attacked in parallel.
    log::info("reproduce: stage 4, ADP runs");
    const CostParams cost_copy = cfg.cost;
    const CostChannel truth = [cost_copy](const Vector& x, const Vector& u) {
        return cost_copy(x, u);
    };
    AdpConfig clean_cfg = cfg.adp.cfg;
    std::exception_ptr clean_err;
    std::thread clean_thread([&] {
        try {
            std::tie(art.adp_clean, art.adp_clean_trace) =
                adp_learn(cfg.sys, truth, gamma, *cfg.adp.init, cfg.x0, clean_cfg, truth);
        } catch (...) {
            clean_err = std::current_exception();
        }
    });
    AdpConfig attacked_cfg = cfg.adp.cfg;
    attacked_cfg.seed = cfg.adp.seed_attacked;
    std::exception_ptr attacked_err;
    std::thread attacked_thread([&] {
        try {
            art.adp_attacked =
                adp_attack_run(cfg.sys, cfg.cost, gamma, *cfg.target, *cfg.adp.init, cfg.x0,
                               attacked_cfg, ss);
        } catch (...) {
            attacked_err = std::current_exception();
        }
    });
    clean_thread.join();
    attacked_thread.join();
    if (clean_err)
        std::rethrow_exception(clean_err);
    if (attacked_err)
        std::rethrow_exception(attacked_err);

    write_text_file(join(out_dir, "adp_run/clean_trace.csv"),
                    adp_trace_to_csv(art.adp_clean_trace, cfg.adp.trace_stride));
    write_json_file(join(out_dir, "adp_run/clean_policies.json"),
                    adp_policies_json(art.adp_clean_trace));
    write_text_file(join(out_dir, "adp_run/attacked_trace.csv"),
                    adp_trace_to_csv(art.adp_attacked.trace, cfg.adp.trace_stride));
    write_json_file(join(out_dir, "adp_run/attacked_policies.json"),
                    adp_policies_json(art.adp_attacked.trace));

    Json table;
    table["policy_opt"] = policy_to_json(art.pi_star);
    table["policy_target"] = policy_to_json(Policy{cfg.target->K, cfg.target->k});
    table["policy_batch_clean"] = policy_to_json(art.batch_clean);
    table["policy_batch_poisoned"] = policy_to_json(art.batch_poisoned);
    table["policy_adp_clean"] = policy_to_json(art.adp_clean);
    table["policy_adp_attacked"] = policy_to_json(art.adp_attacked.learned);
    write_json_file(join(out_dir, "table_policies.json"), table);

    ReproduceResult result;
    add_expectation_checks(cfg, art, result);
    Json summary;
    summary["all_passed"] = result.all_passed;
    Json checks = Json::array();
    for (const auto& line : result.checks) {
        checks.push_back(Json{{"name", line.name},
                              {"detail", line.detail},
                              {"pass", line.pass}});
        std::printf("%s %-22s %s\n", line.pass ? "PASS" : "FAIL", line.name.c_str(),
                    line.detail.c_str());
    }
    summary["checks"] = std::move(checks);
    write_json_file(join(out_dir, "summary.json"), summary);
    return result;
}

void run_plotdata(const std::string& run_dir, const std::string& out_dir) {
    if (!fs::exists(run_dir))
        throw ParameterError("plotdata: run directory does not exist: " + run_dir);
    ensure_dir(out_dir);

    auto emit_cost_series = [&](const std::string& csv_path, const std::string& out_name,
                                int t_col, int c_col, int cdag_col) {
        const std::string content = read_text_file(csv_path);
        std::istringstream in(content);
        std::string line;
        std::getline(in, line);  // header
        std::ostringstream out;
        out << "t,c,c_dagger,difference\n";
        while (std::getline(in, line)) {
            if (line.empty())
                continue;
            std::vector<std::string> fields;
            std::istringstream ls(line);
            std::string field;
            while (std::getline(ls, field, ','))
                fields.push_back(field);
            const double c = std::stod(fields.at(static_cast<std::size_t>(c_col)));
            const double cd = std::stod(fields.at(static_cast<std::size_t>(cdag_col)));
            out << fields.at(static_cast<std::size_t>(t_col)) << "," << c << "," << cd << ","
                << (cd - c) << "\n";
        }
        write_text_file(join(out_dir, out_name), out.str());
    };

    // Batch: dataset columns are t, x_1..x_n, u_1..u_m, c, x_next_1..x_n, c_dagger.
    const std::string poisoned_csv = join(run_dir, "batch_run/poisoned.csv");
    if (fs::exists(poisoned_csv)) {
        const std::string header = read_text_file(poisoned_csv).substr(0, 4096);
        std::istringstream hs(header);
        std::string first_line;
        std::getline(hs, first_line);
        std::vector<std::string> cols;
        std::istringstream cl(first_line);
        std::string col;
        while (std::getline(cl, col, ','))
            cols.push_back(col);
        int c_col = -1, cdag_col = -1;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (cols[i] == "c")
                c_col = static_cast<int>(i);
            if (cols[i] == "c_dagger")
                cdag_col = static_cast<int>(i);
        }
        if (c_col < 0 || cdag_col < 0)
            throw ParameterError("plotdata: poisoned.csv is missing cost columns");
        emit_cost_series(poisoned_csv, "batch_costs.csv", 0, c_col, cdag_col);
    }

    // ADP: trace columns are outer_z, inner_i, t, c, c_dagger.
    const std::string attacked_trace = join(run_dir, "adp_run/attacked_trace.csv");
    if (fs::exists(attacked_trace))
        emit_cost_series(attacked_trace, "adp_costs.csv", 2, 3, 4);

    // Policy-iterate distances to the target.
    const std::string policies_path = join(run_dir, "adp_run/attacked_policies.json");
    const std::string table_path = join(run_dir, "table_policies.json");
    if (fs::exists(policies_path) && fs::exists(table_path)) {
        Json policies = Json::parse(read_text_file(policies_path));
        Json table = Json::parse(read_text_file(table_path));
        const Matrix K_target =
            matrix_from_json(table.at("policy_target").at("K"), "policy_target.K");
        const Vector k_target =
            vector_from_json(table.at("policy_target").at("k"), "policy_target.k");
        std::ostringstream out;
        out << "z,dist_K_target,dist_k_target\n";
        int z = 0;
        for (const auto& pj : policies.at("policies")) {
            const Matrix K = matrix_from_json(pj.at("K"), "policies.K");
            const Vector k = vector_from_json(pj.at("k"), "policies.k");
            out << z++ << "," << (K - K_target).norm() << "," << (k - k_target).norm()
                << "\n";
        }
        write_text_file(join(out_dir, "adp_policy_distance.csv"), out.str());
    }

    if (!fs::exists(poisoned_csv) && !fs::exists(attacked_trace))
        throw ParameterError("plotdata: no trace files found under " + run_dir);
}

}  // namespace lqgd
