#pragma once

#include <vector>

#include "lqgd/conic.hpp"
#include "lqgd/types.hpp"

namespace lqgd {

// The adversary's target policy. Must be stabilizing: the attack model keeps
// the plant stable while steering it somewhere else.
struct AttackTarget {
    Matrix K;
    Vector k;

    void validate(const LinearSystem& sys) const;
};

struct AttackSolution {
    CostParams cost_dag;  // (D', E', d'); r is never falsified
    double objective = 0.0;
    bool certified = false;          // round-trip DLQG matched the target
    double certification_error = 0.0;  // max policy deviation in the round trip
    Matrix P;  // certifying multipliers of the constraint system
    Vector h;
    ConicStatus solver_status = ConicStatus::MaxIters;
    double primal_residual = 0.0;
    int iterations = 0;
};

struct SynthesizeSettings {
    ConicSettings conic;
    // Strict positive definiteness of E' implemented as E' >= eps_strict I.
    double eps_strict = 1e-6;
    double certify_tol = 1e-4;
};

// The assembled parameter-attack program together with its block handles
// (exposed so the CLI can dump the problem).
struct SynthesisProblem {
    ConicProblem problem;
    BlockId Dt, Et, dt, P, h;
};

SynthesisProblem build_synthesis_problem(const LinearSystem& sys, const CostParams& cost,
                                         Discount gamma, const AttackTarget& target,
                                         double eps_strict = 1e-6);

// Minimal falsification of the cost parameters making the target policy
// optimal: minimizes ||D'-D||_F + ||d'-d||_2 + ||E'-E||_F subject to the
// optimality equations of the target (linear in (D',E',d',P,h) since the
// target is fixed) and the cones P >= 0, D' >= 0, E' >= eps I.
// Throws InfeasibleError when the solver certifies infeasibility (the target
// is not achievable by any cost falsification).
AttackSolution synthesize(const LinearSystem& sys, const CostParams& cost, Discount gamma,
                          const AttackTarget& target, const SynthesizeSettings& settings = {});

enum class FeasibilityVerdict { FeasibleEvidence, InfeasibleEvidence, Inconclusive };

struct FeasibilityReport {
    double cond1_W0_min_eig = 0.0;
    double cond2_min_eig_over_grid = 0.0;
    int grid_size = 0;
    int skipped_points = 0;  // grid points too close to a pole of W(z)
    double w0_asymmetry = 0.0;
    // Condition 3 needs symbolic polynomial-matrix computation and is not
    // checked here; the convex program's own status is the operational test.
    static constexpr const char* cond3_status = "not_checked_symbolically";
    FeasibilityVerdict verdict = FeasibilityVerdict::Inconclusive;
    std::vector<double> min_eig_series;  // per-frequency, for plotting
};

struct FeasibilitySettings {
    int grid_size = 1024;
    double tol = 1e-7;
    double cond_skip_threshold = 1e10;
    bool parallel = false;  // OpenMP over grid points, deterministic reduction
};

// Frequency-domain achievability evidence for a target gain with a trial
// input weight. Uses the return-difference function of the discounted
// problem in normalized input coordinates,
//   W(z) = I - E^{1/2} K (zI - sqrt(g) A)^{-1} sqrt(g) B E^{-1/2},
// and checks W(0) > 0 and W(z)^H sym(W(0))^{-1} W(z) - I >= -tol on the unit
// circle. (At an optimum W(0) = E^{1/2}(E + g B'PB)^{-1}E^{1/2}, so the
// inverse appears in the middle factor; the congruence to the polynomial
// form is via the denominators of the coprime factorization.)
FeasibilityReport feasibility_check(const LinearSystem& sys, const Matrix& E_trial,
                                    Discount gamma, const AttackTarget& target,
                                    const FeasibilitySettings& settings = {});

// Falsified cost channel c'(x,u) = x'D'x + d''x + r + u'E'u.
double falsified_cost(const CostParams& cost_dag, const Vector& x, const Vector& u);

namespace detail {
// Optimality equations of a fixed target policy as equality rows, linear in
// (D~, E~, d~, P, h). Shared between the parameter attack (exact dynamics)
// and the batch attack (estimated dynamics).
void add_optimality_rows(ConicProblem& p, const Matrix& A, const Matrix& B, double g,
                         const Matrix& K, const Vector& k, BlockId Dt, BlockId Et,
                         BlockId dt, BlockId P, BlockId h);
}  // namespace detail

}  // namespace lqgd
