#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <lqgd/batch.hpp>
#include <lqgd/lqg.hpp>
#include <lqgd/rng.hpp>

#include "fixtures.hpp"

using namespace lqgd;

namespace {

LinearSystem small_system(double noise) {
    LinearSystem sys;
    sys.A = Matrix(2, 2);
    sys.A << 0.9, 0.2, 0.0, 0.7;
    sys.B = Matrix(2, 1);
    sys.B << 0.0, 1.0;
    sys.C = Matrix::Identity(2, 2);
    sys.noise_std = noise;
    return sys;
}

CostParams small_cost() {
    CostParams c;
    c.D = Matrix::Identity(2, 2);
    c.E = Matrix::Constant(1, 1, 0.5);
    c.d = Vector::Zero(2);
    return c;
}

}  // namespace

TEST_CASE("generate_dataset: boundary, determinism, and divergence flag") {
    auto sys = small_system(0.1);
    auto cost = small_cost();
    const Dataset one = generate_dataset(sys, cost, 1, 7);
    CHECK(one.size() == 1);

    const Dataset a = generate_dataset(sys, cost, 50, 7);
    const Dataset b = generate_dataset(sys, cost, 50, 7);
    for (Eigen::Index t = 0; t < 50; ++t)
        CHECK((a.transitions[t].x_next - b.transitions[t].x_next).norm() == 0.0);

    LinearSystem unstable = sys;
    unstable.A *= 3.0;
    DatasetOptions opts;
    opts.x0 = Vector::Constant(2, 1.0);
    opts.blowup_threshold = 100.0;
    const Dataset diva = generate_dataset(unstable, cost, 200, 7, opts);
    CHECK(diva.diverged);
    CHECK(diva.size() < 200);

    CHECK_THROWS_AS(generate_dataset(sys, cost, 0, 7), ParameterError);
}

TEST_CASE("generate_dataset: noiseless zero-control costs follow the free recursion") {
    auto sys = small_system(0.0);
    auto cost = small_cost();
    DatasetOptions opts;
    opts.control_box = 0.0;
    opts.x0 = Vector::Constant(2, 1.0);
    const Dataset ds = generate_dataset(sys, cost, 20, 0, opts);
    Vector x = opts.x0;
    for (Eigen::Index t = 0; t < 20; ++t) {
        CHECK(ds.transitions[t].c == doctest::Approx(x.dot(cost.D * x)).epsilon(1e-12));
        x = sys.A * x;
    }
}

TEST_CASE("fit_dynamics: exact recovery from noiseless data") {
    auto sys = small_system(0.0);
    DatasetOptions opts;
    opts.control_box = 1.0;
    opts.x0 = Vector::Constant(2, 1.0);
    const Dataset ds = generate_dataset(sys, small_cost(), 30, 3, opts);
    auto [A_hat, B_hat] = fit_dynamics(ds);
    CHECK((A_hat - sys.A).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((B_hat - sys.B).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fit_dynamics: matches the pseudo-inverse oracle on noisy data") {
    auto sys = small_system(0.2);
    DatasetOptions opts;
    opts.x0 = Vector::Constant(2, 0.5);
    const Dataset ds = generate_dataset(sys, small_cost(), 60, 11, opts);
    auto [A_hat, B_hat] = fit_dynamics(ds);

    // Oracle: stacked least squares through a rank-revealing QR.
    Matrix Z(60, 3), X(60, 2);
    for (Eigen::Index t = 0; t < 60; ++t) {
        Z.row(t) << ds.transitions[t].x.transpose(), ds.transitions[t].u.transpose();
        X.row(t) = ds.transitions[t].x_next.transpose();
    }
    const Matrix AB = Z.completeOrthogonalDecomposition().solve(X).transpose();
    CHECK((A_hat - AB.leftCols(2)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((B_hat - AB.rightCols(1)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit_dynamics: transition order does not matter") {
    auto sys = small_system(0.2);
    DatasetOptions opts;
    opts.x0 = Vector::Constant(2, 0.5);
    Dataset ds = generate_dataset(sys, small_cost(), 40, 13, opts);
    auto [A1, B1] = fit_dynamics(ds);
    std::reverse(ds.transitions.begin(), ds.transitions.end());
    std::swap(ds.transitions[3], ds.transitions[17]);
    auto [A2, B2] = fit_dynamics(ds);
    CHECK((A1 - A2).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((B1 - B2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit_dynamics: rank-deficient regressors are reported") {
    // Zero controls and a state pinned at zero excite nothing.
    auto sys = small_system(0.0);
    DatasetOptions opts;
    opts.control_box = 0.0;
    const Dataset ds = generate_dataset(sys, small_cost(), 30, 3, opts);
    CHECK_THROWS_AS(fit_dynamics(ds), SolveError);
}

TEST_CASE("fit_cost: interior problem recovers the generator exactly") {
    auto sys = small_system(0.1);
    auto cost = small_cost();
    cost.d = Vector::Constant(2, 0.3);
    cost.r = 0.7;
    DatasetOptions opts;
    opts.x0 = Vector::Constant(2, 1.0);
    const Dataset ds = generate_dataset(sys, cost, 80, 5, opts);
    const CostParams fit = fit_cost(ds);
    CHECK((fit.D - cost.D).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((fit.E - cost.E).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((fit.d - cost.d).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(fit.r - cost.r) < 1e-6);
}

TEST_CASE("fit_cost: indefinite unconstrained fit is projected onto the cone") {
    // Costs generated from an indefinite quadratic: the unconstrained LS fit
    // is that quadratic itself, so the constraint must activate.
    auto sys = small_system(0.0);
    Matrix D_ind(2, 2);
    D_ind << 1.0, 0.0, 0.0, -0.4;
    DatasetOptions opts;
    opts.x0 = Vector::Constant(2, 1.0);
    Dataset ds = generate_dataset(sys, small_cost(), 60, 9, opts);
    for (auto& tr : ds.transitions)
        tr.c = tr.x.dot(D_ind * tr.x) + 0.5 * tr.u.squaredNorm();

    const CostParams fit = fit_cost(ds);
    Eigen::SelfAdjointEigenSolver<Matrix> es(fit.D, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);

    // Long-horizon projected-gradient reference on the same objective.
    const Eigen::Index T = ds.size();
    Matrix H(T, 3 + 1 + 2 + 1);
    Vector c(T);
    for (Eigen::Index t = 0; t < T; ++t) {
        H.row(t) << bar_features(ds.transitions[t].x).transpose(),
            bar_features(ds.transitions[t].u).transpose(), ds.transitions[t].x.transpose(),
            1.0;
        c[t] = ds.transitions[t].c;
    }
    const Matrix HtH = H.transpose() * H;
    const Vector Htc = H.transpose() * c;
    const double L = Eigen::SelfAdjointEigenSolver<Matrix>(HtH, Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .maxCoeff();
    Vector theta = Vector::Zero(7);
    for (int it = 0; it < 400000; ++it) {
        Vector grad = HtH * theta - Htc;
        theta -= grad / L;
        // project the D block onto PSD and the E block onto E >= eps.
        Matrix Dblk = halfvec_to_sym(theta.head(3), 2);
        Eigen::SelfAdjointEigenSolver<Matrix> pes(Dblk);
        Dblk = pes.eigenvectors() * pes.eigenvalues().cwiseMax(0.0).asDiagonal() *
               pes.eigenvectors().transpose();
        theta.head(3) = theta_halfvec(Dblk);
        theta[3] = std::max(theta[3], 1e-6);
    }
    CHECK((fit.D - halfvec_to_sym(theta.head(3), 2)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(fit.E(0, 0) - theta[3]) < 1e-6);
    CHECK((fit.d - theta.segment(4, 2)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(fit.r - theta[6]) < 1e-6);
}

TEST_CASE("batch_learn: noiseless dataset reproduces the exact policy") {
    auto sys = small_system(0.0);
    auto cost = small_cost();
    DatasetOptions opts;
    opts.x0 = Vector::Constant(2, 1.0);
    const Dataset ds = generate_dataset(sys, cost, 60, 17, opts);
    const Policy learned = batch_learn(ds, Discount(0.9));
    auto [pi, v] = dlqg(sys, cost, Discount(0.9));
    CHECK((learned.K - pi.K).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((learned.k - pi.k).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("batch_attack: self-target needs no falsification") {
    auto sys = small_system(0.05);
    auto cost = small_cost();
    DatasetOptions opts;
    opts.x0 = Vector::Constant(2, 1.0);
    const Dataset ds = generate_dataset(sys, cost, 80, 19, opts);
    const Policy learned = batch_learn(ds, Discount(0.9));
    AttackTarget target{learned.K, learned.k};
    const PoisonedDataset poisoned = batch_attack(ds, Discount(0.9), target);
    CHECK(poisoned.relative_falsification < 1e-6);
}

TEST_CASE("batch_attack: poisoned learner lands on the target") {
    auto sys = fixtures::vehicle6d();
    auto cost = fixtures::vehicle6d_cost();
    const Discount g(0.9);
    DatasetOptions opts;
    opts.control_box = 10.0;
    opts.x0 = fixtures::vehicle6d_x0();
    const Dataset ds = generate_dataset(sys, cost, 150, 20240, opts);

    auto [pi_star, v] = dlqg(sys, cost, g);
    AttackTarget target;
    target.K = fixtures::k_star_published();
    target.k = fixtures::nefarious_target(target.K).k;

    const PoisonedDataset poisoned = batch_attack(ds, g, target);
    REQUIRE(poisoned.solver_status == ConicStatus::Optimal);

    // Structural consistency: the falsified column is the quadratic evaluated
    // on the recorded data, and only the cost column changed.
    for (Eigen::Index t = 0; t < ds.size(); ++t) {
        const auto& orig = ds.transitions[static_cast<std::size_t>(t)];
        const auto& pois = poisoned.base.transitions[static_cast<std::size_t>(t)];
        CHECK(std::abs(pois.c - falsified_cost(poisoned.cost_dag, pois.x, pois.u)) <= 1e-12);
        CHECK((pois.x - orig.x).norm() == 0.0);
        CHECK((pois.u - orig.u).norm() == 0.0);
        CHECK((pois.x_next - orig.x_next).norm() == 0.0);
    }

    const Policy relearned = batch_learn(poisoned.base, g);
    CHECK((relearned.K - target.K).cwiseAbs().maxCoeff() < 1e-2);
    CHECK((relearned.k - target.k).cwiseAbs().maxCoeff() < 1e-2);
    CHECK(poisoned.relative_falsification > 0.0);
    CHECK(poisoned.relative_falsification < 0.2);
}
