#pragma once

#include <cstdint>

#include "lqgd/types.hpp"

namespace lqgd {

struct TauResult {
    double value = 1.0;
    // False when the ratio never produced settle_window consecutive decreases
    // within k_max; the value is then the running sup (a lower bound).
    bool settled = false;
};

// Transient-growth constant sup_k ||M^k|| / rho(M)^k, truncated at k_max and
// terminated early once the ratio has decreased settle_window times in a row.
// Throws ParameterError for nilpotent M (rho = 0, the sup is undefined).
TauResult tau(const Matrix& M, int k_max = 1000, int settle_window = 25);

// Perturbation constants of the policy-deviation bounds. gamma2 and the
// Prop-1 epsilon ceiling involve the factor 1/(1 - ||E^{-1}||); when
// ||E^{-1}|| >= 1 they are reported as NaN with e_inv_applicable = false
// rather than as negative numbers.
struct PerturbationBounds {
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double gamma3 = 0.0;
    double gamma4 = 0.0;
    double gamma5 = 0.0;
    double gamma6 = 0.0;
    double gamma7 = 0.0;
    double gamma8 = 0.0;
    double gamma9 = 0.0;
    bool e_inv_applicable = true;

    double rho_Ac = 0.0;
    double tau_Ac = 1.0;
    bool tau_settled = true;

    // eps admissible for the contraction argument (NaN when inapplicable)
    double eps_prop1 = 0.0;
    // min(eps_prop1, lambda_min(E)/2); falls back to lambda_min(E)/2 alone
    // when eps_prop1 is inapplicable.
    double eps_max = 0.0;

    // Composite coefficients of the combined policy-deviation bound:
    //   ||K' - K|| <= K_coef_D ||dD|| + K_coef_E ||dE||
    //   ||k' - k|| <= k_coef_D ||dD|| + k_coef_E ||dE|| + k_coef_d ||dd||
    double K_coef_D = 0.0;
    double K_coef_E = 0.0;
    double k_coef_D = 0.0;
    double k_coef_E = 0.0;
    double k_coef_d = 0.0;

    double lambda_min_E = 0.0;
    double norm_E_inv = 0.0;
};

PerturbationBounds perturbation_bounds(const LinearSystem& sys, const CostParams& cost,
                                       Discount gamma);

struct VerifySettings {
    int n_trials = 100;
    double eps = 1e-3;
    std::uint64_t seed = 0;
    // OpenMP over trials; per-trial seeds are derived from the base seed, so
    // the report is identical to the serial path.
    bool parallel = false;
};

struct VerifyReport {
    int trials = 0;
    int violations = 0;
    int resampled = 0;  // trials whose perturbed E lost positive definiteness
    // Largest observed ratio of actual deviation to (finite) bound; a
    // looseness diagnostic, expected well below 1.
    double max_ratio = 0.0;
};

// Draws random perturbations with ||dD|| = ||dE|| = ||dd|| = eps, re-solves
// the DLQG exactly, and checks both combined inequalities. Coefficients that
// are inapplicable make the corresponding bound vacuous (+inf) for that trial.
VerifyReport verify_bounds(const LinearSystem& sys, const CostParams& cost, Discount gamma,
                           const VerifySettings& settings);

// Spectral norm (operator 2-norm).
double operator_norm(const Matrix& M);

}  // namespace lqgd
