#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lqgd/attack.hpp"
#include "lqgd/conic.hpp"
#include "lqgd/types.hpp"

namespace lqgd {

struct Transition {
    Vector x;
    Vector u;
    double c = 0.0;
    Vector x_next;
};

struct Dataset {
    std::vector<Transition> transitions;
    std::uint64_t seed = 0;
    std::string generating_policy;
    bool diverged = false;

    Eigen::Index size() const { return static_cast<Eigen::Index>(transitions.size()); }
    Eigen::Index state_dim() const { return transitions.empty() ? 0 : transitions[0].x.size(); }
    Eigen::Index input_dim() const { return transitions.empty() ? 0 : transitions[0].u.size(); }
    Vector costs() const;
};

struct BatchEstimates {
    Matrix A_hat;
    Matrix B_hat;
    Matrix D_hat;
    Matrix E_hat;
    Vector d_hat;
    double r_hat = 0.0;
    double dynamics_rms = 0.0;
    double cost_rms = 0.0;
    double zz_condition = 0.0;  // condition number of Z'Z, reported
};

struct PoisonedDataset {
    Dataset base;            // costs replaced by the falsified column
    Vector c_dag;            // falsified costs, c_dag[t] = falsified_cost(cost_dag, x_t, u_t)
    Vector c_orig;           // original costs, kept for reporting
    CostParams cost_dag;     // the parameters behind the falsification
    double relative_falsification = 0.0;  // ||c_dag - c||_2 / ||c||_2
    double objective = 0.0;
    ConicStatus solver_status = ConicStatus::MaxIters;
};

struct DatasetOptions {
    double control_box = 1.0;  // controls uniform on [-box, box]^m
    Vector x0;                 // defaults to zero when empty
    double blowup_threshold = 1e9;
};

// Rolls the plant for T steps under i.i.d. uniform controls, recording exact
// costs. Deterministic given the seed.
Dataset generate_dataset(const LinearSystem& sys, const CostParams& cost, Eigen::Index T,
                         std::uint64_t seed, const DatasetOptions& opts = {});

// Least-squares minimizer of sum_t ||A x_t + B u_t - x_{t+1}||^2 via the
// normal equations. Throws SolveError when Z'Z is numerically singular.
std::pair<Matrix, Matrix> fit_dynamics(const Dataset& ds, double* rms = nullptr,
                                       double* zz_condition = nullptr);

struct FitCostSettings {
    double eps_strict = 1e-6;  // E >= eps I
    ConicSettings conic;
};

// Constrained least-squares cost fit: min ||H theta - c||_2 over
// D >= 0, E >= eps I, with feature rows [bar(x)', bar(u)', x', 1].
// Throws SolveError when H is column-rank-deficient.
CostParams fit_cost(const Dataset& ds, const FitCostSettings& settings = {},
                    double* rms = nullptr);

// Full certainty-equivalence pipeline: both fits, then DLQG on the estimates.
// Throws SolveError when the estimated pair fails the DLQG assumptions.
Policy batch_learn(const Dataset& ds, Discount gamma, BatchEstimates* estimates = nullptr);

struct BatchAttackSettings {
    double eps_strict = 1e-6;
    ConicSettings conic;
};

// Rewrites the cost column so that the certainty-equivalent learner lands on
// the target policy, minimizing ||c_dag - c||_2. The attacker knows only the
// dataset: the optimality rows use dynamics estimated from it.
PoisonedDataset batch_attack(const Dataset& ds, Discount gamma, const AttackTarget& target,
                             const BatchAttackSettings& settings = {});

}  // namespace lqgd
