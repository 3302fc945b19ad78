#pragma once

// Shared test fixture: the 6-state / 3-input vehicle system used across the
// test suites, together with its known optimal gain, the adversary's target
// policy, and the minimal-falsification cost parameters.

#include <lqgd/types.hpp>

namespace fixtures {

inline lqgd::LinearSystem vehicle6d() {
    lqgd::LinearSystem sys;
    sys.A = lqgd::Matrix::Zero(6, 6);
    sys.A.topLeftCorner(3, 3) = lqgd::Matrix::Identity(3, 3);
    sys.A.topRightCorner(3, 3) = 0.1 * lqgd::Matrix::Identity(3, 3);
    sys.A.bottomRightCorner(3, 3) = 0.95 * lqgd::Matrix::Identity(3, 3);
    sys.B = lqgd::Matrix::Zero(6, 3);
    sys.B.bottomRows(3) = 0.1 * lqgd::Matrix::Identity(3, 3);
    sys.C = lqgd::Matrix::Identity(6, 6);
    sys.noise_std = 0.1;
    return sys;
}

inline lqgd::CostParams vehicle6d_cost() {
    lqgd::CostParams cost;
    cost.D = lqgd::Matrix::Identity(6, 6);
    cost.E = 0.5 * lqgd::Matrix::Identity(3, 3);
    cost.d = lqgd::Vector::Zero(6);
    cost.r = 0.0;
    return cost;
}

inline lqgd::Vector vehicle6d_x0() {
    lqgd::Vector x0(6);
    x0 << 1.0, 1.0, 0.5, -1.0, -0.5, -1.0;
    return x0;
}

// Published optimal gain: -0.5316 on positions, -0.9700 on velocities.
inline lqgd::Matrix k_star_published() {
    lqgd::Matrix K = lqgd::Matrix::Zero(3, 6);
    for (int i = 0; i < 3; ++i) {
        K(i, i) = -0.5316;
        K(i, i + 3) = -0.9700;
    }
    return K;
}

// Adversary's target: same gain, affine part steering to position (1,0,-1).
inline lqgd::Policy nefarious_target(const lqgd::Matrix& K_opt) {
    lqgd::Policy target;
    target.K = K_opt;
    target.k = lqgd::Vector(3);
    target.k << 0.5316, 0.0, -0.5316;
    return target;
}

// Minimal-falsification parameters for the target above. Two published
// entries are corrected for obvious print errors: d4 = -0.1608 (printed
// -1.6084 contradicts the problem's swap symmetry) and E(3,1) = 0.2096
// (the printed 2.095 would make the symmetric variable asymmetric). Both
// confirmed by two independent convex solvers during development.
inline lqgd::CostParams falsified_published() {
    lqgd::CostParams c;
    c.D = lqgd::Matrix(6, 6);
    c.D << 0.7163, 0.0, 0.2837, -0.1218, 0.0, 0.1218,
           0.0, 1.0, 0.0, 0.0, 0.0, 0.0,
           0.2837, 0.0, 0.7163, 0.1218, 0.0, -0.1218,
           -0.1218, 0.0, 0.1218, 0.5687, 0.0, 0.4313,
           0.0, 0.0, 0.0, 0.0, 1.0, 0.0,
           0.1218, 0.0, -0.1218, 0.4313, 0.0, 0.5687;
    c.d = lqgd::Vector(6);
    c.d << -0.1448, 0.0, 0.1448, -0.1608, 0.0, 0.1608;
    c.E = lqgd::Matrix(3, 3);
    c.E << 0.2904, 0.0, 0.2096,
           0.0, 0.5000, 0.0,
           0.2096, 0.0, 0.2904;
    c.r = 0.0;
    return c;
}

// Published objective of the minimal falsification.
inline constexpr double kAttackObjective = 1.8137;

}  // namespace fixtures
