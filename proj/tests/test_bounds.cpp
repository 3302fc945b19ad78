#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <lqgd/bounds.hpp>
#include <lqgd/lqg.hpp>
#include <lqgd/rng.hpp>

#include "fixtures.hpp"

using namespace lqgd;

namespace {

LinearSystem scalar_system(double a, double b) {
    LinearSystem sys;
    sys.A = Matrix::Constant(1, 1, a);
    sys.B = Matrix::Constant(1, 1, b);
    sys.C = Matrix::Identity(1, 1);
    return sys;
}

CostParams scalar_cost(double D, double E, double d = 0.0) {
    CostParams c;
    c.D = Matrix::Constant(1, 1, D);
    c.E = Matrix::Constant(1, 1, E);
    c.d = Vector::Constant(1, d);
    return c;
}

// Direct power-and-norm loop, the independent route for tau.
double tau_brute_force(const Matrix& M, int k_max) {
    const double rho = spectral_radius(M);
    double sup = 1.0;
    Matrix Mk = Matrix::Identity(M.rows(), M.cols());
    double denom = 1.0;
    for (int k = 1; k <= k_max; ++k) {
        Mk = Mk * M;
        denom *= rho;
        sup = std::max(sup, operator_norm(Mk) / denom);
    }
    return sup;
}

}  // namespace

TEST_CASE("tau: scalars and normal matrices have no transient growth") {
    CHECK(tau(Matrix::Constant(1, 1, 0.9)).value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tau(0.5 * Matrix::Identity(3, 3)).value == doctest::Approx(1.0).epsilon(1e-12));

    Rng rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix G(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                G(i, j) = rng.normal();
        // Symmetric (hence normal) contraction.
        Matrix S = 0.5 * (G + G.transpose());
        S *= 0.8 / spectral_radius(S);
        CHECK(std::abs(tau(S).value - 1.0) < 1e-10);
    }
}

TEST_CASE("tau: Jordan block matches the brute-force oracle and reports no settlement") {
    Matrix M(2, 2);
    M << 0.5, 1.0, 0.0, 0.5;
    // The ratio grows like 2k for this defective matrix, so the truncated
    // sup is the value at k_max and the settle window never fires.
    const double oracle = tau_brute_force(M, 1000);
    const TauResult t = tau(M, 1000, 25);
    CHECK(t.value == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(t.value == doctest::Approx(2000.0005).epsilon(1e-6));
    CHECK_FALSE(t.settled);
}

TEST_CASE("tau: stable non-normal matrix with real spectrum settles") {
    // Distinct real eigenvalues: the ratio decreases monotonically once the
    // dominant mode takes over, so the settle window fires early.
    Matrix M(2, 2);
    M << 0.5, 0.3, 0.0, 0.1;
    const TauResult t = tau(M);
    CHECK(t.settled);
    CHECK(t.value >= 1.0);
    CHECK(t.value == doctest::Approx(tau_brute_force(M, 200)).epsilon(1e-9));
}

TEST_CASE("tau: rotating contraction never settles but the sup is still valid") {
    // Complex eigenvalue pair: ||M^k||/rho^k oscillates forever, so the
    // window cannot fire; the truncated sup is returned with the flag down.
    Matrix M(2, 2);
    M << 0.5, 0.3, -0.2, 0.1;
    const TauResult t = tau(M);
    CHECK_FALSE(t.settled);
    CHECK(t.value == doctest::Approx(tau_brute_force(M, 1000)).epsilon(1e-9));
}

TEST_CASE("tau: nilpotent matrix is rejected") {
    Matrix M(2, 2);
    M << 0.0, 1.0, 0.0, 0.0;
    CHECK_THROWS_AS(tau(M), ParameterError);
}

TEST_CASE("perturbation_bounds: vanishing spectral radius collapses gamma1 to 4 gamma^2") {
    // With A ~ 0 the closed loop is ~ 0, tau = 1, rho = 0: gamma1 -> 4 g^2.
    auto b = perturbation_bounds(scalar_system(1e-3, 1.0), scalar_cost(1.0, 1.0),
                                 Discount(0.5));
    CHECK(std::abs(b.gamma1 - 1.0) < 1e-5);
    CHECK(b.tau_Ac == doctest::Approx(1.0));
    CHECK(b.rho_Ac < 1e-3);
}

TEST_CASE("perturbation_bounds: hand-evaluated gamma4") {
    // D chosen so the optimal scalar gain is exactly -0.3 (P = 5/3):
    // gamma4 = 2 g |K| / lambda_min(E) = 2 * 0.9 * 0.3 / 1 = 0.54.
    const double P = 5.0 / 3.0;
    const double D = P - 0.9 * 0.25 * P + 0.81 * 0.25 * P * P / (1.0 + 0.9 * P);
    auto b = perturbation_bounds(scalar_system(0.5, 1.0), scalar_cost(D, 1.0), Discount(0.9));
    CHECK(b.gamma4 == doctest::Approx(0.54).epsilon(1e-9));
}

TEST_CASE("perturbation_bounds: vehicle system against the transcription oracle") {
    auto b = perturbation_bounds(fixtures::vehicle6d(), fixtures::vehicle6d_cost(),
                                 Discount(0.9));
    // Frozen values from an independent term-by-term transcription of the
    // closed forms (spectral norms via SVD throughout).
    CHECK(b.rho_Ac == doctest::Approx(0.9358060518372393).epsilon(1e-9));
    CHECK(b.tau_Ac == doctest::Approx(8.29008691291793).epsilon(1e-9));
    CHECK(b.gamma1 == doctest::Approx(1051.1254061304073).epsilon(1e-8));
    CHECK(b.gamma3 == doctest::Approx(8.077761879211227).epsilon(1e-8));
    CHECK(b.gamma4 == doctest::Approx(3.9818941905138177).epsilon(1e-8));
    CHECK(b.gamma5 == doctest::Approx(18.107816470014306).epsilon(1e-8));
    CHECK(b.gamma6 == 0.0);
    CHECK(b.gamma7 == 0.0);
    CHECK(b.gamma8 == 0.0);
    CHECK(b.gamma9 == doctest::Approx(0.72).epsilon(1e-12));
    // ||E^{-1}|| = 2 >= 1: the bounds through 1 - ||E^{-1}|| are inapplicable,
    // never negative.
    CHECK_FALSE(b.e_inv_applicable);
    CHECK(std::isnan(b.gamma2));
    CHECK(std::isnan(b.eps_prop1));
    CHECK(b.eps_max == doctest::Approx(0.25));
    // Composite coefficients: the zero factors annihilate the inapplicable
    // gamma2 terms; only the d coefficient survives.
    CHECK(b.K_coef_D == doctest::Approx(b.gamma3 * b.gamma1));
    CHECK(std::isnan(b.K_coef_E));
    CHECK(b.k_coef_D == 0.0);
    CHECK(b.k_coef_E == 0.0);
    CHECK(b.k_coef_d == doctest::Approx(b.gamma5 * b.gamma9));
}

TEST_CASE("perturbation_bounds: K-bound coefficient grows with the closed-loop radius") {
    double prev_g1 = 0.0, prev_coef = 0.0, prev_rho = 0.0;
    for (double a : {0.3, 0.5, 0.7, 0.9}) {
        auto b = perturbation_bounds(scalar_system(a, 1.0), scalar_cost(1.0, 2.0),
                                     Discount(0.9));
        CHECK(b.e_inv_applicable);
        CHECK(b.rho_Ac > prev_rho);
        CHECK(b.gamma1 > prev_g1);
        CHECK(b.K_coef_D > prev_coef);
        prev_rho = b.rho_Ac;
        prev_g1 = b.gamma1;
        prev_coef = b.K_coef_D;
    }
}

TEST_CASE("verify_bounds: zero perturbation gives zero deviations") {
    VerifySettings vs;
    vs.n_trials = 5;
    vs.eps = 0.0;
    vs.seed = 1;
    auto rep = verify_bounds(fixtures::vehicle6d(), fixtures::vehicle6d_cost(), Discount(0.9),
                             vs);
    CHECK(rep.violations == 0);
    CHECK(rep.max_ratio == 0.0);
}

TEST_CASE("verify_bounds: vehicle system, 100 trials at eps 1e-3, no violations") {
    VerifySettings vs;
    vs.n_trials = 100;
    vs.eps = 1e-3;
    vs.seed = 2;
    auto rep = verify_bounds(fixtures::vehicle6d(), fixtures::vehicle6d_cost(), Discount(0.9),
                             vs);
    CHECK(rep.trials == 100);
    CHECK(rep.violations == 0);
}

TEST_CASE("verify_bounds: parallel path reproduces the serial report") {
    VerifySettings vs;
    vs.n_trials = 40;
    vs.eps = 1e-3;
    vs.seed = 3;
    vs.parallel = false;
    auto serial = verify_bounds(fixtures::vehicle6d(), fixtures::vehicle6d_cost(),
                                Discount(0.9), vs);
    vs.parallel = true;
    auto parallel = verify_bounds(fixtures::vehicle6d(), fixtures::vehicle6d_cost(),
                                  Discount(0.9), vs);
    CHECK(serial.violations == parallel.violations);
    CHECK(serial.resampled == parallel.resampled);
    CHECK(serial.max_ratio == parallel.max_ratio);  // bit-identical by construction
}

TEST_CASE("verify_bounds: applicable regime (E = 2I) keeps every ratio below one") {
    LinearSystem sys;
    sys.A = Matrix(2, 2);
    sys.A << 0.8, 0.2, 0.0, 0.5;
    sys.B = Matrix(2, 2);
    sys.B << 1.0, 0.0, 0.3, 1.0;
    sys.C = Matrix::Identity(2, 2);
    CostParams cost;
    cost.D = Matrix::Identity(2, 2);
    cost.E = 2.0 * Matrix::Identity(2, 2);
    cost.d = Vector::Constant(2, 0.4);

    auto b = perturbation_bounds(sys, cost, Discount(0.9));
    REQUIRE(b.e_inv_applicable);
    REQUIRE(b.eps_prop1 > 0.0);

    VerifySettings vs;
    vs.n_trials = 60;
    vs.eps = std::min(b.eps_max, 1e-3);
    vs.seed = 5;
    auto rep = verify_bounds(sys, cost, Discount(0.9), vs);
    CHECK(rep.violations == 0);
    CHECK(rep.max_ratio < 1.0);
    CHECK(rep.max_ratio > 0.0);
}

TEST_CASE("d-only perturbation moves k but not K") {
    auto sys = fixtures::vehicle6d();
    auto cost = fixtures::vehicle6d_cost();
    const Discount g(0.9);
    auto [pi_star, v_star] = dlqg(sys, cost, g);
    auto b = perturbation_bounds(sys, cost, g);

    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        Vector dd = rng.normal_vector(6);
        dd *= 1e-3 / dd.norm();
        CostParams pert = cost;
        pert.d = cost.d + dd;
        auto [pi_p, v_p] = dlqg(sys, pert, g);
        CHECK((pi_p.K - pi_star.K).norm() == 0.0);  // K never touches d
        CHECK((pi_p.k - pi_star.k).norm() <= b.k_coef_d * dd.norm());
    }
}
