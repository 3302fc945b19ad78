#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "lqgd/attack.hpp"
#include "lqgd/lqg.hpp"
#include "lqgd/types.hpp"

namespace lqgd {

// Recursive least-squares state for the Q-function weights. theta_hat has
// length (n+m+1)(n+m+2)/2; S is the (scaled) inverse information matrix.
struct RlsState {
    Vector theta_hat;
    Matrix S;
    long update_count = 0;

    static RlsState fresh(Eigen::Index dim, double beta) {
        return {Vector::Zero(dim), beta * Matrix::Identity(dim, dim), 0};
    }
};

inline Eigen::Index adp_theta_dim(Eigen::Index n, Eigen::Index m) {
    return halfvec_dim(n + m + 1);
}

// phi = bar([x;u;1]) - gamma bar([x_next; K x_next + k; 1]): the temporal
// difference of the quadratic features under the evaluated policy.
Vector phi_features(const Vector& x, const Vector& u, const Vector& x_next,
                    const Policy& policy, Discount gamma);

// One RLS step with denominator 1 + phi'S phi. Pure: returns the new state.
RlsState rls_update(const RlsState& state, const Vector& phi, double c);
// In-place equivalent used by the learner's inner loop; returns the step
// norm ||theta_new - theta_old||.
double rls_update_inplace(RlsState& state, const Vector& phi, double c);

struct AdpConfig {
    double beta = 10.0;      // RLS prior scale, S_0 = beta I
    double eps1 = 1e-5;      // inner stop: ||theta_i - theta_{i-1}|| < eps1
    double eps2 = 1e-5;      // outer stop: ||K_z-K_{z-1}||_F + ||k_z-k_{z-1}|| < eps2
    double probe_std = 0.5;  // probing noise e_t ~ N(0, probe_std^2 I)
    // Minimum RLS updates before the inner test is consulted; 0 means the
    // identifiability floor dim(theta) + 5.
    int min_inner = 0;
    int max_inner = 100000;
    int max_outer = 100;
    std::uint64_t seed = 0;
    double blowup_threshold = 1e6;  // state reset (to x0) level, logged
    int max_resets_per_inner = 1000;
    void validate() const;
};

enum class AdpStop { PolicyConverged, MaxOuter, HuuNotPd, ExcessiveResets };

struct AdpTrace {
    std::vector<Policy> policy_sequence;  // K_0..K_Z, length = updates + 1
    std::vector<int> inner_counts;
    // (reference cost, received cost) per step; equal when not attacked.
    std::vector<std::pair<double, double>> cost_log;
    int resets = 0;
    long total_steps = 0;
    AdpStop stop_reason = AdpStop::MaxOuter;

    int updates() const { return static_cast<int>(policy_sequence.size()) - 1; }
};

// Q-function policy iteration driven by online RLS. cost_channel is what the
// agent receives; reference_cost (when given) is logged alongside it for the
// deviation diagnostics. Requires a stabilizing initial policy and a
// controllable plant.
std::pair<Policy, AdpTrace> adp_learn(const LinearSystem& sys, const CostChannel& cost_channel,
                                      Discount gamma, const Policy& init, const Vector& x0,
                                      const AdpConfig& cfg,
                                      const CostChannel& reference_cost = nullptr);

struct AdpAttackResult {
    Policy learned;
    AdpTrace trace;
    AttackSolution attack;
};

// Synthesizes the minimal falsification for the target, then runs the
// learner against the falsified cost channel.
AdpAttackResult adp_attack_run(const LinearSystem& sys, const CostParams& cost, Discount gamma,
                               const AttackTarget& target, const Policy& init, const Vector& x0,
                               const AdpConfig& cfg,
                               const SynthesizeSettings& synth_settings = {});

}  // namespace lqgd
