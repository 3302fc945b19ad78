#include "lqgd/lqg.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "lqgd/rng.hpp"

namespace lqgd {
namespace {

Eigen::Index numeric_rank(const Matrix& M) {
    Eigen::JacobiSVD<Matrix> svd(M);
    const auto& s = svd.singularValues();
    if (s.size() == 0)
        return 0;
    const double cut = tol::kRank * s[0];
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > cut)
            ++r;
    return r;
}

// Symmetric PSD square root, clipping eigenvalues at zero.
Matrix sym_sqrt(const Matrix& M) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(M);
    Vector lam = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

AssumptionReport check_assumptions(const LinearSystem& sys, const CostParams& cost) {
    sys.validate();
    const auto n = sys.state_dim();
    const auto m = sys.input_dim();
    cost.validate(n, m);

    AssumptionReport rep;

    Matrix ctrb(n, n * m);
    Matrix Apow = Matrix::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        ctrb.middleCols(i * m, m) = Apow * sys.B;
        Apow = sys.A * Apow;
    }
    rep.controllable = numeric_rank(ctrb) == n;

    const Matrix Dsqrt = sym_sqrt(cost.D);
    Matrix obsv(n * n, n);
    Matrix ApowT = Matrix::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        obsv.middleRows(i * n, n) = Dsqrt * ApowT;
        ApowT = ApowT * sys.A;
    }
    rep.observable = numeric_rank(obsv) == n;

    rep.b_full_rank = numeric_rank(sys.B) == m;

    Eigen::JacobiSVD<Matrix> asvd(sys.A);
    const auto& s = asvd.singularValues();
    rep.a_invertible = s.size() > 0 && s[s.size() - 1] > tol::kRank * s[0];

    return rep;
}

Matrix riccati_solve(const LinearSystem& sys, const CostParams& cost, Discount gamma,
                     double tol, int max_iter, const Matrix* P0) {
    sys.validate();
    const auto n = sys.state_dim();
    const auto m = sys.input_dim();
    cost.validate(n, m);
    if (P0 && (P0->rows() != n || P0->cols() != n))
        throw DimensionError("riccati_solve: P0 must be n x n");
    const double g = gamma.gamma;

    auto rhs = [&](const Matrix& P) -> Matrix {
        const Matrix G = cost.E + g * sys.B.transpose() * P * sys.B;
        Eigen::LLT<Matrix> llt(G);
        if (llt.info() != Eigen::Success)
            throw ParameterError("riccati_solve: E + gamma B'PB lost positive definiteness");
        const Matrix BtPA = sys.B.transpose() * P * sys.A;
        Matrix next = cost.D + g * sys.A.transpose() * P * sys.A -
                      g * g * BtPA.transpose() * llt.solve(BtPA);
        return 0.5 * (next + next.transpose());
    };

    Matrix P = P0 ? *P0 : cost.D;
    double residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        Matrix next = rhs(P);
        residual = (next - P).norm();
        P = next;
        // residual(P_j) = ||P_j - P_{j+1}||_F exactly; iterate one step past
        // tol/2 so the returned P satisfies the contract outright.
        if (residual <= 0.5 * tol) {
            if ((P - rhs(P)).norm() <= tol)
                return P;
        }
    }
    std::ostringstream msg;
    msg << "riccati_solve: no convergence after " << max_iter
        << " iterations, last residual " << residual;
    throw SolveError(msg.str());
}

std::pair<Policy, ValueQuad> dlqg(const LinearSystem& sys, const CostParams& cost,
                                  Discount gamma, double tol, int max_iter) {
    const double g = gamma.gamma;
    const Matrix P = riccati_solve(sys, cost, gamma, tol, max_iter);
    const auto n = sys.state_dim();

    const Matrix G = cost.E + g * sys.B.transpose() * P * sys.B;
    Eigen::LLT<Matrix> llt(G);
    Policy pi;
    pi.K = -g * llt.solve(sys.B.transpose() * P * sys.A);

    const Matrix Ac = sys.A + sys.B * pi.K;
    // (I - gamma A_c') h = d; invertible for any stabilizing K since
    // gamma < 1 keeps all eigenvalues of gamma A_c inside the unit disc.
    Eigen::PartialPivLU<Matrix> lin(Matrix::Identity(n, n) - g * Ac.transpose());
    ValueQuad value;
    value.P = P;
    value.h = lin.solve(cost.d);
    pi.k = -(g / 2.0) * llt.solve(sys.B.transpose() * value.h);

    const Vector Bth = sys.B.transpose() * value.h;
    const double sigma2 = sys.noise_std * sys.noise_std;
    value.l = (cost.r + g * sigma2 * (sys.C.transpose() * P * sys.C).trace() -
               (g * g / 4.0) * Bth.dot(llt.solve(Bth))) /
              (1.0 - g);
    return {pi, value};
}

QMatrix q_matrix(const LinearSystem& sys, const CostParams& cost, Discount gamma,
                 const ValueQuad& value) {
    sys.validate();
    const auto n = sys.state_dim();
    const auto m = sys.input_dim();
    cost.validate(n, m);
    if (value.P.rows() != n || value.h.size() != n)
        throw DimensionError("q_matrix: value dimensions do not match the system");
    const double g = gamma.gamma;
    const Matrix& P = value.P;

    QMatrix q;
    q.n = n;
    q.m = m;
    q.H = Matrix::Zero(n + m + 1, n + m + 1);
    q.H.topLeftCorner(n, n) = cost.D + g * sys.A.transpose() * P * sys.A;
    q.H.block(0, n, n, m) = g * sys.A.transpose() * P * sys.B;
    q.H.block(n, 0, m, n) = q.H.block(0, n, n, m).transpose();
    q.H.block(n, n, m, m) = cost.E + g * sys.B.transpose() * P * sys.B;
    q.H.block(0, n + m, n, 1) = 0.5 * (cost.d + g * sys.A.transpose() * value.h);
    q.H.block(n + m, 0, 1, n) = q.H.block(0, n + m, n, 1).transpose();
    q.H.block(n, n + m, m, 1) = (g / 2.0) * sys.B.transpose() * value.h;
    q.H.block(n + m, n, 1, m) = q.H.block(n, n + m, m, 1).transpose();
    const double sigma2 = sys.noise_std * sys.noise_std;
    q.H(n + m, n + m) =
        cost.r + g * sigma2 * (sys.C.transpose() * P * sys.C).trace() + g * value.l;
    return q;
}

Policy policy_improve(const QMatrix& q) {
    const Matrix Huu = 0.5 * (q.uu() + q.uu().transpose());
    Eigen::LLT<Matrix> llt(Huu);
    if (llt.info() != Eigen::Success)
        throw ParameterError(
            "policy_improve: H_uu is not positive definite (non-stabilizing policy or "
            "corrupted estimate)");
    Policy pi;
    pi.K = -llt.solve(Matrix(q.ux()));
    pi.k = -llt.solve(Vector(q.u1()));
    return pi;
}

Trajectory simulate(const LinearSystem& sys, const Policy& pi, const CostParams& cost,
                    const Vector& x0, int T, std::uint64_t seed,
                    const SimulateOptions& opts) {
    sys.validate();
    const auto n = sys.state_dim();
    const auto m = sys.input_dim();
    if (pi.K.rows() != m || pi.K.cols() != n || pi.k.size() != m)
        throw DimensionError("simulate: policy dimensions do not match the system");
    if (x0.size() != n)
        throw DimensionError("simulate: x0 has wrong length");

    CostChannel channel = opts.cost_channel;
    if (!channel)
        channel = [&cost](const Vector& x, const Vector& u) { return cost(x, u); };

    Rng rng(seed);
    Trajectory traj;
    traj.steps.reserve(static_cast<std::size_t>(T));
    Vector x = x0;
    for (int t = 0; t < T; ++t) {
        if (x.norm() > opts.blowup_threshold) {
            traj.diverged = true;
            break;
        }
        TrajectoryStep step;
        step.x = x;
        step.u = pi(x);
        step.c = channel(step.x, step.u);
        const Vector w = sys.noise_std * rng.normal_vector(sys.noise_dim());
        step.x_next = sys.A * x + sys.B * step.u + sys.C * w;
        x = step.x_next;
        traj.steps.push_back(std::move(step));
    }
    return traj;
}

}  // namespace lqgd
