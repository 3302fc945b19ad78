#include "lqgd/attack.hpp"

#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "lqgd/lqg.hpp"

namespace lqgd {
namespace {

Matrix unit(Eigen::Index i, Eigen::Index j, Eigen::Index rows, Eigen::Index cols) {
    Matrix M = Matrix::Zero(rows, cols);
    M(i, j) = 1.0;
    return M;
}

// Symmetric square root and inverse square root via eigendecomposition.
std::pair<Matrix, Matrix> sym_sqrt_pair(const Matrix& E) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(E);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw ParameterError("E_trial must be positive definite");
    const Vector s = es.eigenvalues().cwiseSqrt();
    const Matrix root = es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
    const Matrix inv_root =
        es.eigenvectors() * s.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    return {root, inv_root};
}

}  // namespace

void AttackTarget::validate(const LinearSystem& sys) const {
    if (K.rows() != sys.input_dim() || K.cols() != sys.state_dim() ||
        k.size() != sys.input_dim())
        throw DimensionError("attack target dimensions do not match the system");
    if (spectral_radius(sys.A + sys.B * K) >= 1.0)
        throw ParameterError("attack target is not stabilizing (a non-stabilizing gain "
                             "cannot be optimal for any admissible cost)");
}

namespace detail {

// Constraint families, linear in (D~, E~, d~, P, h) for a fixed target (K, k):
//   P  = D~ + g A'PA - K'(E~ + g B'PB)K
//   (E~ + g B'PB) K = -g B'PA
//   h  = d~ + g (A + BK)'h
//   2 (E~ + g B'PB) k = -g B'h
void add_optimality_rows(ConicProblem& p, const Matrix& A, const Matrix& B, double g,
                         const Matrix& K, const Vector& k, BlockId Dt, BlockId Et,
                         BlockId dt, BlockId P, BlockId h) {
    const auto n = A.rows();
    const auto m = B.cols();

    // Riccati block, upper triangle only (the equation is symmetric).
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            const Matrix S = 0.5 * (unit(i, j, n, n) + unit(j, i, n, n));
            ConicProblem::Row row(p);
            row.sym(P, S - g * (A * S * A.transpose()) + g * (B * K * S * K.transpose() * B.transpose()));
            row.sym(Dt, -S);
            row.sym(Et, K * S * K.transpose());
            row.rhs(0.0);
            p.add_equality(row);
        }
    // Gain-optimality block, m x n rows.
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index j = 0; j < n; ++j) {
            const Matrix Eab = unit(a, j, m, n);
            ConicProblem::Row row(p);
            row.sym(Et, Eab * K.transpose());
            row.sym(P, g * (B * Eab * K.transpose() * B.transpose()) + g * (B * Eab * A.transpose()));
            row.rhs(0.0);
            p.add_equality(row);
        }
    // Affine value equation, n rows.
    const Matrix Ac = A + B * K;
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector ch = Vector::Zero(n);
        ch[i] = 1.0;
        ch -= g * Ac.col(i);  // (g Ac' h)_i = g sum_j Ac(j,i) h_j
        Vector cd = Vector::Zero(n);
        cd[i] = -1.0;
        ConicProblem::Row row(p);
        row.vec(h, ch).vec(dt, cd).rhs(0.0);
        p.add_equality(row);
    }
    // Affine-gain optimality, m rows.
    for (Eigen::Index a = 0; a < m; ++a) {
        Vector ea = Vector::Zero(m);
        ea[a] = 1.0;
        ConicProblem::Row row(p);
        row.sym(Et, 2.0 * ea * k.transpose());
        row.sym(P, 2.0 * g * (B * ea * k.transpose() * B.transpose()));
        row.vec(h, g * B.col(a));
        row.rhs(0.0);
        p.add_equality(row);
    }
}

}  // namespace detail

SynthesisProblem build_synthesis_problem(const LinearSystem& sys, const CostParams& cost,
                                         Discount gamma, const AttackTarget& target,
                                         double eps_strict) {
    sys.validate();
    const auto n = sys.state_dim();
    const auto m = sys.input_dim();
    cost.validate(n, m);
    target.validate(sys);

    SynthesisProblem sp;
    ConicProblem& p = sp.problem;
    sp.Dt = p.add_symmetric("D_tilde", n);
    sp.Et = p.add_symmetric("E_tilde", m);
    sp.dt = p.add_vector("d_tilde", n);
    sp.P = p.add_symmetric("P", n);
    sp.h = p.add_vector("h", n);

    detail::add_optimality_rows(p, sys.A, sys.B, gamma.gamma, target.K, target.k, sp.Dt,
                                sp.Et, sp.dt, sp.P, sp.h);

    p.add_distance_term(sp.Dt, cost.D);
    p.add_distance_term(sp.dt, cost.d);
    p.add_distance_term(sp.Et, cost.E);
    p.add_psd(sp.P, 0.0);
    p.add_psd(sp.Dt, 0.0);
    p.add_psd(sp.Et, eps_strict);
    return sp;
}

AttackSolution synthesize(const LinearSystem& sys, const CostParams& cost, Discount gamma,
                          const AttackTarget& target, const SynthesizeSettings& settings) {
    const SynthesisProblem sp =
        build_synthesis_problem(sys, cost, gamma, target, settings.eps_strict);
    const BlockId Dt = sp.Dt, Et = sp.Et, dt = sp.dt, P = sp.P, h = sp.h;
    const ConicSolution solution = solve(sp.problem, settings.conic);
    if (solution.status == ConicStatus::InfeasibleDetected)
        throw InfeasibleError(
            "attack synthesis: the optimality constraints admit no solution; the target "
            "policy is not achievable by cost falsification");

    AttackSolution out;
    out.solver_status = solution.status;
    out.primal_residual = solution.primal_residual;
    out.iterations = solution.iterations;
    out.cost_dag.D = solution.matrix_value(Dt);
    out.cost_dag.E = solution.matrix_value(Et);
    out.cost_dag.d = solution.vector_value(dt);
    out.cost_dag.r = cost.r;  // minimal footprint: the constant is untouched
    out.P = solution.matrix_value(P);
    out.h = solution.vector_value(h);
    out.objective = (out.cost_dag.D - cost.D).norm() + (out.cost_dag.d - cost.d).norm() +
                    (out.cost_dag.E - cost.E).norm();

    auto [pi_check, value_check] = dlqg(sys, out.cost_dag, gamma);
    out.certification_error =
        std::max((pi_check.K - target.K).cwiseAbs().maxCoeff(),
                 (pi_check.k - target.k).cwiseAbs().maxCoeff());
    out.certified = out.certification_error <= settings.certify_tol;
    return out;
}

FeasibilityReport feasibility_check(const LinearSystem& sys, const Matrix& E_trial,
                                    Discount gamma, const AttackTarget& target,
                                    const FeasibilitySettings& settings) {
    sys.validate();
    const auto n = sys.state_dim();
    const auto m = sys.input_dim();
    if (E_trial.rows() != m || E_trial.cols() != m)
        throw DimensionError("E_trial must be m x m");
    target.validate(sys);
    {
        Eigen::FullPivLU<Matrix> lu(sys.A);
        if (!lu.isInvertible())
            throw ParameterError("feasibility_check requires an invertible A");
    }

    const double sg = std::sqrt(gamma.gamma);
    const Matrix Ab = sg * sys.A;
    const Matrix Bb = sg * sys.B;
    auto [E_half, E_half_inv] = sym_sqrt_pair(E_trial);
    const Matrix KE = E_half * target.K;  // normalized-input gain

    using CMatrix = Eigen::MatrixXcd;
    const CMatrix Ab_c = Ab.cast<std::complex<double>>();
    const CMatrix Bb_c = Bb.cast<std::complex<double>>();
    const CMatrix KE_c = KE.cast<std::complex<double>>();
    const CMatrix Ei_c = E_half_inv.cast<std::complex<double>>();
    const CMatrix I_m = CMatrix::Identity(m, m);
    const CMatrix I_n = CMatrix::Identity(n, n);

    auto W_at = [&](std::complex<double> z) -> CMatrix {
        const CMatrix zIA = z * I_n - Ab_c;
        return I_m - KE_c * zIA.lu().solve(Bb_c) * Ei_c;
    };

    FeasibilityReport rep;
    rep.grid_size = settings.grid_size;

    // Condition 1: W(0) (symmetrized) positive definite. A is invertible and
    // sqrt(g) > 0, so z = 0 is never a pole.
    const CMatrix W0 = W_at(0.0);
    const Matrix W0_real = W0.real();
    rep.w0_asymmetry = (W0_real - W0_real.transpose()).norm() + W0.imag().norm();
    const Matrix W0_sym = 0.5 * (W0_real + W0_real.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es0(W0_sym, Eigen::EigenvaluesOnly);
    rep.cond1_W0_min_eig = es0.eigenvalues().minCoeff();
    if (rep.cond1_W0_min_eig <= 0.0) {
        rep.verdict = FeasibilityVerdict::InfeasibleEvidence;
        return rep;
    }
    const CMatrix W0_inv = W0_sym.inverse().cast<std::complex<double>>();

    rep.min_eig_series.assign(static_cast<std::size_t>(settings.grid_size),
                              std::numeric_limits<double>::quiet_NaN());
    std::vector<char> skipped(static_cast<std::size_t>(settings.grid_size), 0);

    auto eval_point = [&](int j) {
        const double omega = 2.0 * M_PI * j / settings.grid_size;
        const std::complex<double> z(std::cos(omega), std::sin(omega));
        const CMatrix zIA = z * I_n - Ab_c;
        Eigen::JacobiSVD<CMatrix> svd(zIA);
        const auto& s = svd.singularValues();
        if (s(s.size() - 1) <= 0.0 ||
            s(0) / s(s.size() - 1) > settings.cond_skip_threshold) {
            skipped[static_cast<std::size_t>(j)] = 1;
            return;
        }
        const CMatrix Wz = W_at(z);
        const CMatrix Psi = Wz.adjoint() * W0_inv * Wz - I_m;
        Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (Psi + Psi.adjoint()),
                                                  Eigen::EigenvaluesOnly);
        rep.min_eig_series[static_cast<std::size_t>(j)] = es.eigenvalues().minCoeff();
    };

    if (settings.parallel) {
#pragma omp parallel for schedule(static)
        for (int j = 0; j < settings.grid_size; ++j)
            eval_point(j);
    } else {
        for (int j = 0; j < settings.grid_size; ++j)
            eval_point(j);
    }

    double min_eig = std::numeric_limits<double>::infinity();
    for (int j = 0; j < settings.grid_size; ++j) {
        if (skipped[static_cast<std::size_t>(j)])
            ++rep.skipped_points;
        else
            min_eig = std::min(min_eig, rep.min_eig_series[static_cast<std::size_t>(j)]);
    }
    rep.cond2_min_eig_over_grid = min_eig;

    if (min_eig >= -settings.tol) {
        // Margins below 10 tol are treated as inconclusive rather than as
        // positive evidence.
        rep.verdict = (min_eig > -settings.tol && min_eig < 10.0 * settings.tol &&
                       min_eig < 0.0)
                          ? FeasibilityVerdict::Inconclusive
                          : FeasibilityVerdict::FeasibleEvidence;
    } else {
        rep.verdict = FeasibilityVerdict::InfeasibleEvidence;
    }
    return rep;
}

double falsified_cost(const CostParams& cost_dag, const Vector& x, const Vector& u) {
    return cost_dag(x, u);
}

}  // namespace lqgd
