#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace lqgd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical failure in an iterative solver (non-convergence etc.).
struct SolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Constraint system has no solution (attack target not achievable).
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace tol {
// Singular values below kRank * sigma_max count as zero in rank tests.
inline constexpr double kRank = 1e-9;
// Symmetric PSD means lambda_min >= -kPsd.
inline constexpr double kPsd = 1e-9;
inline constexpr double kRiccati = 1e-10;
inline constexpr int kRiccatiMaxIter = 100000;
}  // namespace tol

// Plant x_{t+1} = A x_t + B u_t + C w_t with w_t ~ N(0, noise_std^2 I).
struct LinearSystem {
    Matrix A;
    Matrix B;
    Matrix C;
    double noise_std = 0.0;

    Eigen::Index state_dim() const { return A.rows(); }
    Eigen::Index input_dim() const { return B.cols(); }
    Eigen::Index noise_dim() const { return C.cols(); }

    void validate() const;
};

// Stage cost c(x,u) = x'Dx + d'x + r + u'Eu.
struct CostParams {
    Matrix D;
    Matrix E;
    Vector d;
    double r = 0.0;

    void validate(Eigen::Index n, Eigen::Index m) const;
    double operator()(const Vector& x, const Vector& u) const {
        return x.dot(D * x) + d.dot(x) + r + u.dot(E * u);
    }
};

// Affine state feedback u = K x + k.
struct Policy {
    Matrix K;
    Vector k;

    Vector operator()(const Vector& x) const { return K * x + k; }
};

// Closed-loop matrix A + BK.
inline Matrix closed_loop(const LinearSystem& sys, const Policy& pi) {
    return sys.A + sys.B * pi.K;
}

double spectral_radius(const Matrix& M);

inline bool is_stabilizing(const LinearSystem& sys, const Policy& pi) {
    return spectral_radius(closed_loop(sys, pi)) < 1.0;
}

// Value function V(x) = x'Px + h'x + l.
struct ValueQuad {
    Matrix P;
    Vector h;
    double l = 0.0;
};

struct Discount {
    double gamma;

    explicit Discount(double g) : gamma(g) {
        if (!(g > 0.0 && g < 1.0))
            throw ParameterError("discount factor must lie strictly in (0,1), got " +
                                 std::to_string(g));
    }
};

// Q(x,u) = [x;u;1]' H [x;u;1] with H symmetric of order n+m+1.
struct QMatrix {
    Matrix H;
    Eigen::Index n = 0;
    Eigen::Index m = 0;

    auto xx() const { return H.topLeftCorner(n, n); }
    auto xu() const { return H.block(0, n, n, m); }
    auto ux() const { return H.block(n, 0, m, n); }
    auto uu() const { return H.block(n, n, m, m); }
    auto x1() const { return H.block(0, n + m, n, 1); }
    auto u1() const { return H.block(n, n + m, m, 1); }
    double h11() const { return H(n + m, n + m); }
};

// --- Half-vectorization feature maps -----------------------------------
//
// theta_halfvec stacks the upper triangle of a symmetric M row-major:
// [m_11, m_12, ..., m_1n, m_22, ..., m_nn], length n(n+1)/2.
// bar_features(x) = [x_1^2, 2 x_1 x_2, ..., 2 x_1 x_n, x_2^2, ..., x_n^2]
// so that x'Mx = bar_features(x) . theta_halfvec(M) exactly.
// The ordering is a wire-format contract shared with the ADP learner.

inline Eigen::Index halfvec_dim(Eigen::Index n) { return n * (n + 1) / 2; }

Vector theta_halfvec(const Matrix& M, double sym_tol = 1e-9);
Vector bar_features(const Vector& x);
// Inverse of theta_halfvec: rebuilds the symmetric matrix of order n.
Matrix halfvec_to_sym(const Vector& theta, Eigen::Index n);

}  // namespace lqgd
