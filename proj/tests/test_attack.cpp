#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include <lqgd/attack.hpp>
#include <lqgd/lqg.hpp>
#include <lqgd/rng.hpp>

#include "fixtures.hpp"

using namespace lqgd;

namespace {

LinearSystem scalar_system(double a, double b = 1.0) {
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

}  // namespace

TEST_CASE("synthesize: vehicle system reproduces the published falsification") {
    auto sys = fixtures::vehicle6d();
    auto cost = fixtures::vehicle6d_cost();
    auto [pi_star, v] = dlqg(sys, cost, Discount(0.9));
    AttackTarget target;
    target.K = fixtures::k_star_published();
    target.k = fixtures::nefarious_target(target.K).k;

    const AttackSolution sol = synthesize(sys, cost, Discount(0.9), target);
    CHECK(sol.solver_status == ConicStatus::Optimal);
    CHECK(std::abs(sol.objective - fixtures::kAttackObjective) / fixtures::kAttackObjective <
          0.01);
    const CostParams ref = fixtures::falsified_published();
    CHECK((sol.cost_dag.D - ref.D).cwiseAbs().maxCoeff() < 5e-3);
    CHECK((sol.cost_dag.d - ref.d).cwiseAbs().maxCoeff() < 5e-3);
    CHECK((sol.cost_dag.E - ref.E).cwiseAbs().maxCoeff() < 5e-3);
    CHECK(sol.certified);
    CHECK(sol.certification_error < 1e-3);
    CHECK(sol.cost_dag.r == cost.r);  // the constant is never falsified
}

TEST_CASE("synthesize: the optimal policy itself costs nothing to install") {
    auto sys = fixtures::vehicle6d();
    auto cost = fixtures::vehicle6d_cost();
    auto [pi_star, v] = dlqg(sys, cost, Discount(0.9));
    AttackTarget target{pi_star.K, pi_star.k};
    const AttackSolution sol = synthesize(sys, cost, Discount(0.9), target);
    CHECK(sol.objective < 1e-5);
    CHECK((sol.cost_dag.D - cost.D).norm() < 1e-5);
    CHECK((sol.cost_dag.E - cost.E).norm() < 1e-5);
    CHECK(sol.cost_dag.d.norm() < 1e-5);
}

TEST_CASE("synthesize: random scalar targets certify by round trip") {
    Rng rng(31);
    int done = 0;
    while (done < 5) {
        const double a = 0.3 + 0.9 * rng.uniform();
        const double D = 0.5 + 2.0 * rng.uniform();
        const double E = 0.5 + 1.5 * rng.uniform();
        const double d = -1.0 + 2.0 * rng.uniform();
        auto sys = scalar_system(a);
        auto [pi, v] = dlqg(sys, scalar_cost(D, E, d), Discount(0.9));
        AttackTarget target{pi.K, pi.k};

        // Attack from different original parameters.
        const AttackSolution sol =
            synthesize(sys, scalar_cost(1.0, 1.0, 0.0), Discount(0.9), target);
        CHECK(sol.certified);
        CHECK(sol.certification_error < 1e-6);
        ++done;
    }
}

TEST_CASE("synthesize: scaling a certified solution stays certified") {
    auto sys = scalar_system(0.6);
    auto cost = scalar_cost(1.0, 1.0, 0.2);
    auto [pi, v] = dlqg(sys, cost, Discount(0.9));
    AttackTarget target{pi.K, pi.k};
    const AttackSolution sol = synthesize(sys, scalar_cost(2.0, 0.7, 0.0), Discount(0.9), target);
    REQUIRE(sol.certified);
    for (double alpha : {0.5, 3.0}) {
        CostParams scaled = sol.cost_dag;
        scaled.D *= alpha;
        scaled.E *= alpha;
        scaled.d *= alpha;
        auto [pi2, v2] = dlqg(sys, scaled, Discount(0.9));
        CHECK((pi2.K - target.K).cwiseAbs().maxCoeff() < 1e-5);
        CHECK((pi2.k - target.k).cwiseAbs().maxCoeff() < 1e-5);
    }
}

TEST_CASE("synthesize: non-stabilizing target is rejected up front") {
    auto sys = fixtures::vehicle6d();
    AttackTarget target{Matrix::Zero(3, 6), Vector::Zero(3)};  // rho(A) = 1
    CHECK_THROWS_AS(synthesize(sys, fixtures::vehicle6d_cost(), Discount(0.9), target),
                    ParameterError);
}

TEST_CASE("feasibility_check: vehicle system with identity trial weight") {
    auto sys = fixtures::vehicle6d();
    auto [pi_star, v] = dlqg(sys, fixtures::vehicle6d_cost(), Discount(0.9));
    AttackTarget target;
    target.K = fixtures::k_star_published();
    target.k = fixtures::nefarious_target(target.K).k;

    const FeasibilityReport rep =
        feasibility_check(sys, Matrix::Identity(3, 3), Discount(0.9), target);
    CHECK(rep.verdict == FeasibilityVerdict::FeasibleEvidence);
    CHECK(rep.cond1_W0_min_eig > 0.0);
    CHECK(rep.cond2_min_eig_over_grid >= -1e-7);
    CHECK(rep.grid_size == 1024);
    CHECK(rep.min_eig_series.size() == 1024);
}

TEST_CASE("feasibility_check: non-stabilizing target errors before the grid") {
    auto sys = fixtures::vehicle6d();
    AttackTarget target{Matrix::Zero(3, 6), Vector::Zero(3)};
    CHECK_THROWS_AS(
        feasibility_check(sys, Matrix::Identity(3, 3), Discount(0.9), target),
        ParameterError);
}

TEST_CASE("feasibility_check: singular A and non-PD E_trial are rejected") {
    auto sys = scalar_system(0.0);
    AttackTarget target{Matrix::Constant(1, 1, -0.3), Vector::Zero(1)};
    CHECK_THROWS_AS(
        feasibility_check(sys, Matrix::Identity(1, 1), Discount(0.9), target),
        ParameterError);

    auto sys2 = scalar_system(0.5);
    CHECK_THROWS_AS(
        feasibility_check(sys2, Matrix::Constant(1, 1, -1.0), Discount(0.9), target),
        ParameterError);
}

TEST_CASE("feasibility_check: scalar optimum satisfies the return-difference inequality") {
    auto sys = scalar_system(0.5);
    auto cost = scalar_cost(1.0, 1.0);
    auto [pi, v] = dlqg(sys, cost, Discount(0.9));
    AttackTarget target{pi.K, pi.k};
    const FeasibilityReport rep = feasibility_check(sys, cost.E, Discount(0.9), target);
    CHECK(rep.cond2_min_eig_over_grid >= -1e-9);
    CHECK(rep.verdict == FeasibilityVerdict::FeasibleEvidence);
}

TEST_CASE("feasibility_check: parallel grid equals serial grid") {
    auto sys = fixtures::vehicle6d();
    auto [pi_star, v] = dlqg(sys, fixtures::vehicle6d_cost(), Discount(0.9));
    AttackTarget target{pi_star.K, fixtures::nefarious_target(pi_star.K).k};
    FeasibilitySettings fsopt;
    fsopt.grid_size = 256;
    fsopt.parallel = false;
    const auto serial = feasibility_check(sys, Matrix::Identity(3, 3), Discount(0.9), target, fsopt);
    fsopt.parallel = true;
    const auto parallel =
        feasibility_check(sys, Matrix::Identity(3, 3), Discount(0.9), target, fsopt);
    CHECK(serial.cond2_min_eig_over_grid == parallel.cond2_min_eig_over_grid);
    CHECK(serial.skipped_points == parallel.skipped_points);
}

TEST_CASE("feasibility_check agrees with the solver on random scalar targets") {
    // Checker verdict and synthesis status must tell the same story, allowing
    // inconclusive margins.
    auto sys = scalar_system(0.5);
    auto cost = scalar_cost(1.0, 1.0);
    Rng rng(77);
    int agreements = 0;
    for (int trial = 0; trial < 12; ++trial) {
        // Stabilizing gains lie in (-1.5, 0.5); inverse-optimal ones in (-0.5, 0].
        const double Kval = -1.45 + 1.9 * rng.uniform();
        AttackTarget target{Matrix::Constant(1, 1, Kval), Vector::Constant(1, 0.1)};
        const FeasibilityReport rep = feasibility_check(sys, cost.E, Discount(0.9), target);
        if (rep.verdict == FeasibilityVerdict::Inconclusive)
            continue;

        bool solver_feasible = true;
        bool certified = false;
        try {
            SynthesizeSettings ss;
            ss.conic.max_iters = 60000;
            const AttackSolution sol = synthesize(sys, cost, Discount(0.9), target, ss);
            certified = sol.certified;
            solver_feasible = (sol.solver_status == ConicStatus::Optimal) && certified;
        } catch (const InfeasibleError&) {
            solver_feasible = false;
        }
        if (rep.verdict == FeasibilityVerdict::FeasibleEvidence)
            CHECK(solver_feasible);
        else
            CHECK_FALSE(solver_feasible);
        ++agreements;
    }
    CHECK(agreements >= 8);  // the draw range must actually exercise both sides
}

TEST_CASE("falsified_cost: identity falsification and constant term") {
    auto cost = fixtures::vehicle6d_cost();
    Rng rng(3);
    for (int i = 0; i < 5; ++i) {
        const Vector x = rng.normal_vector(6);
        const Vector u = rng.normal_vector(3);
        CHECK(falsified_cost(cost, x, u) == doctest::Approx(cost(x, u)).epsilon(1e-15));
    }
    CostParams with_r = cost;
    with_r.r = 2.5;
    CHECK(falsified_cost(with_r, Vector::Zero(6), Vector::Zero(3)) == 2.5);
}

TEST_CASE("falsified_cost: published parameters satisfy the deviation envelope") {
    // |c' - c| <= 1.088 ||x||^2 + 0.419 ||u||^2 + 0.3060 ||x|| for the
    // published falsification against the true cost.
    auto cost = fixtures::vehicle6d_cost();
    auto dag = fixtures::falsified_published();
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        const Vector x = 3.0 * rng.normal_vector(6);
        const Vector u = 3.0 * rng.normal_vector(3);
        const double dev = std::abs(falsified_cost(dag, x, u) - cost(x, u));
        const double envelope =
            1.088 * x.squaredNorm() + 0.419 * u.squaredNorm() + 0.3060 * x.norm();
        CHECK(dev <= envelope * (1.0 + 1e-9));
    }
}
