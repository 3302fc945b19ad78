#include "lqgd/batch.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lqgd/lqg.hpp"
#include "lqgd/rng.hpp"

namespace lqgd {
namespace {

// Feature matrix of the cost regression: rows [bar(x)', bar(u)', x', 1].
Matrix cost_features(const Dataset& ds) {
    const auto n = ds.state_dim();
    const auto m = ds.input_dim();
    const auto T = ds.size();
    const auto cols = halfvec_dim(n) + halfvec_dim(m) + n + 1;
    Matrix H(T, cols);
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto& tr = ds.transitions[static_cast<std::size_t>(t)];
        H.row(t) << bar_features(tr.x).transpose(), bar_features(tr.u).transpose(),
            tr.x.transpose(), 1.0;
    }
    return H;
}

}  // namespace

Vector Dataset::costs() const {
    Vector c(size());
    for (Eigen::Index t = 0; t < size(); ++t)
        c[t] = transitions[static_cast<std::size_t>(t)].c;
    return c;
}

Dataset generate_dataset(const LinearSystem& sys, const CostParams& cost, Eigen::Index T,
                         std::uint64_t seed, const DatasetOptions& opts) {
    sys.validate();
    const auto n = sys.state_dim();
    const auto m = sys.input_dim();
    cost.validate(n, m);
    if (T < 1)
        throw ParameterError("generate_dataset: T must be >= 1");

    Rng rng(seed);
    Dataset ds;
    ds.seed = seed;
    ds.generating_policy =
        "uniform controls on [-" + std::to_string(opts.control_box) + "," +
        std::to_string(opts.control_box) + "]^" + std::to_string(m);
    ds.transitions.reserve(static_cast<std::size_t>(T));
    Vector x = opts.x0.size() == n ? opts.x0 : Vector::Zero(n);
    for (Eigen::Index t = 0; t < T; ++t) {
        if (x.norm() > opts.blowup_threshold) {
            ds.diverged = true;
            break;
        }
        Transition tr;
        tr.x = x;
        tr.u = rng.uniform_vector(m, -opts.control_box, opts.control_box);
        tr.c = cost(tr.x, tr.u);
        const Vector w = sys.noise_std * rng.normal_vector(sys.noise_dim());
        tr.x_next = sys.A * x + sys.B * tr.u + sys.C * w;
        x = tr.x_next;
        ds.transitions.push_back(std::move(tr));
    }
    return ds;
}

std::pair<Matrix, Matrix> fit_dynamics(const Dataset& ds, double* rms, double* zz_condition) {
    const auto n = ds.state_dim();
    const auto m = ds.input_dim();
    const auto T = ds.size();
    if (T < 1)
        throw ParameterError("fit_dynamics: empty dataset");

    Matrix Z(T, n + m);
    Matrix X(T, n);
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto& tr = ds.transitions[static_cast<std::size_t>(t)];
        Z.row(t) << tr.x.transpose(), tr.u.transpose();
        X.row(t) = tr.x_next.transpose();
    }
    const Matrix ZtZ = Z.transpose() * Z;
    Eigen::SelfAdjointEigenSolver<Matrix> es(ZtZ, Eigen::EigenvaluesOnly);
    const double lam_min = es.eigenvalues().minCoeff();
    const double lam_max = es.eigenvalues().maxCoeff();
    if (zz_condition)
        *zz_condition = lam_min > 0.0 ? lam_max / lam_min : std::numeric_limits<double>::infinity();
    if (lam_min <= tol::kRank * lam_max)
        throw SolveError("fit_dynamics: Z'Z is numerically singular; the regressors do not "
                         "excite all state/control directions");
    // [A B]' = (Z'Z)^{-1} Z'X, the minimizer of the stated least squares.
    const Matrix AB = ZtZ.ldlt().solve(Z.transpose() * X).transpose();
    if (rms)
        *rms = std::sqrt((Z * AB.transpose() - X).squaredNorm() / static_cast<double>(T));
    return {AB.leftCols(n), AB.rightCols(m)};
}

CostParams fit_cost(const Dataset& ds, const FitCostSettings& settings, double* rms) {
    const auto n = ds.state_dim();
    const auto m = ds.input_dim();
    const auto T = ds.size();
    const Matrix H = cost_features(ds);
    const Vector c = ds.costs();

    Eigen::JacobiSVD<Matrix> svd(H);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) <= tol::kRank * s(0))
        throw SolveError("fit_cost: feature matrix H is column-rank-deficient");

    ConicProblem p;
    const BlockId Db = p.add_symmetric("D", n);
    const BlockId Eb = p.add_symmetric("E", m);
    const BlockId db = p.add_vector("d", n);
    const BlockId rb = p.add_scalar("r");
    const BlockId yb = p.add_vector("y", T);

    // y_t = bar(x_t).Theta(D) + bar(u_t).Theta(E) + d'x_t + r, then the
    // squared-residual objective becomes the distance of y to the cost
    // column (same minimizer over the convex feasible set).
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto& tr = ds.transitions[static_cast<std::size_t>(t)];
        ConicProblem::Row row(p);
        row.sym(Db, tr.x * tr.x.transpose());
        row.sym(Eb, tr.u * tr.u.transpose());
        row.vec(db, tr.x);
        row.scalar(rb, 1.0);
        Vector ycoef = Vector::Zero(T);
        ycoef[t] = -1.0;
        row.vec(yb, ycoef);
        row.rhs(0.0);
        p.add_equality(row);
    }
    p.add_distance_term(yb, c);
    p.add_psd(Db, 0.0);
    p.add_psd(Eb, settings.eps_strict);

    const ConicSolution solution = solve(p, settings.conic);
    if (solution.status == ConicStatus::InfeasibleDetected)
        throw SolveError("fit_cost: constraint system inconsistent (unexpected)");

    CostParams out;
    out.D = solution.matrix_value(Db);
    out.E = solution.matrix_value(Eb);
    out.d = solution.vector_value(db);
    out.r = solution.scalar_value(rb);
    if (rms) {
        Vector theta(H.cols());
        theta << theta_halfvec(out.D, 1e-6), theta_halfvec(out.E, 1e-6), out.d, out.r;
        *rms = std::sqrt((H * theta - c).squaredNorm() / static_cast<double>(T));
    }
    return out;
}

Policy batch_learn(const Dataset& ds, Discount gamma, BatchEstimates* estimates) {
    BatchEstimates est;
    std::tie(est.A_hat, est.B_hat) = fit_dynamics(ds, &est.dynamics_rms, &est.zz_condition);
    const CostParams cost_hat = fit_cost(ds, {}, &est.cost_rms);
    est.D_hat = cost_hat.D;
    est.E_hat = cost_hat.E;
    est.d_hat = cost_hat.d;
    est.r_hat = cost_hat.r;
    if (estimates)
        *estimates = est;

    LinearSystem sys_hat;
    sys_hat.A = est.A_hat;
    sys_hat.B = est.B_hat;
    sys_hat.C = Matrix::Identity(ds.state_dim(), ds.state_dim());
    sys_hat.noise_std = 0.0;  // the policy does not depend on the noise level
    const auto rep = check_assumptions(sys_hat, cost_hat);
    if (!rep.controllable)
        throw SolveError("batch_learn: estimated (A,B) is not controllable");
    if (!rep.observable)
        throw SolveError("batch_learn: estimated (A, D^{1/2}) is not observable");
    auto [pi, value] = dlqg(sys_hat, cost_hat, gamma);
    return pi;
}

PoisonedDataset batch_attack(const Dataset& ds, Discount gamma, const AttackTarget& target,
                             const BatchAttackSettings& settings) {
    const auto n = ds.state_dim();
    const auto m = ds.input_dim();
    const auto T = ds.size();
    const double g = gamma.gamma;

    auto [A_hat, B_hat] = fit_dynamics(ds);
    {
        LinearSystem est;
        est.A = A_hat;
        est.B = B_hat;
        est.C = Matrix::Identity(n, n);
        AttackTarget check = target;
        check.validate(est);  // target must stabilize the estimated dynamics
    }

    ConicProblem p;
    const BlockId Dt = p.add_symmetric("D_tilde", n);
    const BlockId Et = p.add_symmetric("E_tilde", m);
    const BlockId dt = p.add_vector("d_tilde", n);
    const BlockId rt = p.add_scalar("r_tilde");
    const BlockId P = p.add_symmetric("P", n);
    const BlockId h = p.add_vector("h", n);
    const BlockId yb = p.add_vector("c_dag", T);

    detail::add_optimality_rows(p, A_hat, B_hat, g, target.K, target.k, Dt, Et, dt, P, h);

    // Consistency with the dataset: the falsified costs are exactly the
    // quadratic evaluated on the recorded states and controls.
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto& tr = ds.transitions[static_cast<std::size_t>(t)];
        ConicProblem::Row row(p);
        row.sym(Dt, tr.x * tr.x.transpose());
        row.sym(Et, tr.u * tr.u.transpose());
        row.vec(dt, tr.x);
        row.scalar(rt, 1.0);
        Vector ycoef = Vector::Zero(T);
        ycoef[t] = -1.0;
        row.vec(yb, ycoef);
        row.rhs(0.0);
        p.add_equality(row);
    }

    p.add_distance_term(yb, ds.costs());
    p.add_psd(P, 0.0);
    p.add_psd(Dt, 0.0);
    p.add_psd(Et, settings.eps_strict);

    const ConicSolution solution = solve(p, settings.conic);
    if (solution.status == ConicStatus::InfeasibleDetected)
        throw InfeasibleError("batch_attack: target not achievable under the estimated "
                              "dynamics for any consistent cost falsification");

    PoisonedDataset out;
    out.solver_status = solution.status;
    out.cost_dag.D = solution.matrix_value(Dt);
    out.cost_dag.E = solution.matrix_value(Et);
    out.cost_dag.d = solution.vector_value(dt);
    out.cost_dag.r = solution.scalar_value(rt);
    out.objective = solution.objective;

    // The falsified column is derived from the parameters, never the solver's
    // auxiliary block: consistency is structural.
    out.base = ds;
    out.c_orig = ds.costs();
    out.c_dag = Vector(T);
    for (Eigen::Index t = 0; t < T; ++t) {
        auto& tr = out.base.transitions[static_cast<std::size_t>(t)];
        out.c_dag[t] = falsified_cost(out.cost_dag, tr.x, tr.u);
        tr.c = out.c_dag[t];
    }
    out.relative_falsification = (out.c_dag - out.c_orig).norm() / out.c_orig.norm();
    return out;
}

}  // namespace lqgd
