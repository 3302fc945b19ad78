#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lqgd/types.hpp"

namespace lqgd {

struct AssumptionReport {
    bool controllable = false;
    bool observable = false;
    bool b_full_rank = false;
    bool a_invertible = false;

    bool dlqg_ok() const { return controllable && observable; }
};

// Rank tests for controllability of (A,B), observability of (A, D^{1/2}),
// full column rank of B, and invertibility of A (the latter is only needed
// by the feasibility checker).
AssumptionReport check_assumptions(const LinearSystem& sys, const CostParams& cost);

// Fixed-point solve of P = D + gamma A'PA - gamma^2 A'PB (E + gamma B'PB)^{-1} B'PA
// by value iteration from P0 (defaults to D). Returned P is symmetric PSD with
// ||P - RHS(P)||_F <= tol. The fixed point is unique, so different P0 reach
// the same solution.
Matrix riccati_solve(const LinearSystem& sys, const CostParams& cost, Discount gamma,
                     double tol = tol::kRiccati, int max_iter = tol::kRiccatiMaxIter,
                     const Matrix* P0 = nullptr);

// Full map (D,E,d) -> optimal policy and value:
//   K = -gamma (E + gamma B'PB)^{-1} B'PA
//   h solves (I - gamma A_c') h = d with A_c = A + BK
//   k = -(gamma/2) (E + gamma B'PB)^{-1} B'h
//   l = [r + gamma sigma^2 tr(C'PC) - (gamma^2/4) h'B(E+gamma B'PB)^{-1}B'h] / (1-gamma)
std::pair<Policy, ValueQuad> dlqg(const LinearSystem& sys, const CostParams& cost,
                                  Discount gamma, double tol = tol::kRiccati,
                                  int max_iter = tol::kRiccatiMaxIter);

// Q-matrix blocks for a value function (P,h,l):
//   H_xx = D + gamma A'PA     H_xu = gamma A'PB    H_uu = E + gamma B'PB
//   H_x1 = (d + gamma A'h)/2  H_u1 = (gamma/2) B'h
//   H_11 = r + gamma sigma^2 tr(C'PC) + gamma l
QMatrix q_matrix(const LinearSystem& sys, const CostParams& cost, Discount gamma,
                 const ValueQuad& value);

// Greedy policy from a Q-matrix: (-H_uu^{-1} H_ux, -H_uu^{-1} H_u1).
// Throws ParameterError if H_uu is not positive definite.
Policy policy_improve(const QMatrix& q);

struct TrajectoryStep {
    Vector x;
    Vector u;
    double c = 0.0;
    Vector x_next;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    bool diverged = false;
};

using CostChannel = std::function<double(const Vector&, const Vector&)>;

struct SimulateOptions {
    double blowup_threshold = 1e9;
    // Optional interceptor for the cost signal; defaults to the supplied cost.
    CostChannel cost_channel;
};

// Rolls the closed loop for T steps. Deterministic given the seed. If the
// state norm exceeds the blow-up threshold the trajectory is truncated and
// flagged as diverged.
Trajectory simulate(const LinearSystem& sys, const Policy& pi, const CostParams& cost,
                    const Vector& x0, int T, std::uint64_t seed,
                    const SimulateOptions& opts = {});

}  // namespace lqgd
