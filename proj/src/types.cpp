#include "lqgd/types.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace lqgd {

double spectral_radius(const Matrix& M) {
    if (M.rows() != M.cols())
        throw DimensionError("spectral radius needs a square matrix");
    return M.eigenvalues().cwiseAbs().maxCoeff();
}

void LinearSystem::validate() const {
    const auto n = A.rows();
    if (A.cols() != n)
        throw DimensionError("A must be square");
    if (B.rows() != n)
        throw DimensionError("B must have as many rows as A");
    if (C.rows() != n)
        throw DimensionError("C must have as many rows as A");
    if (noise_std < 0.0)
        throw ParameterError("noise_std must be >= 0");
}

void CostParams::validate(Eigen::Index n, Eigen::Index m) const {
    if (D.rows() != n || D.cols() != n)
        throw DimensionError("D must be n x n");
    if (E.rows() != m || E.cols() != m)
        throw DimensionError("E must be m x m");
    if (d.size() != n)
        throw DimensionError("d must have length n");
    const double dscale = std::max(1.0, D.norm());
    const double escale = std::max(1.0, E.norm());
    if ((D - D.transpose()).norm() > 1e-9 * dscale)
        throw ParameterError("D must be symmetric");
    if ((E - E.transpose()).norm() > 1e-9 * escale)
        throw ParameterError("E must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> de(D, Eigen::EigenvaluesOnly);
    if (de.eigenvalues().minCoeff() < -tol::kPsd * dscale)
        throw ParameterError("D must be positive semidefinite");
    Eigen::SelfAdjointEigenSolver<Matrix> ee(E, Eigen::EigenvaluesOnly);
    if (ee.eigenvalues().minCoeff() <= 0.0)
        throw ParameterError("E must be positive definite");
}

Vector theta_halfvec(const Matrix& M, double sym_tol) {
    if (M.rows() != M.cols())
        throw DimensionError("theta_halfvec needs a square matrix");
    const double scale = std::max(1.0, M.norm());
    if ((M - M.transpose()).norm() > sym_tol * scale)
        throw ParameterError("theta_halfvec: matrix is not symmetric");
    const auto n = M.rows();
    Vector v(halfvec_dim(n));
    Eigen::Index t = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j)
            v[t++] = M(i, j);
    return v;
}

Vector bar_features(const Vector& x) {
    const auto n = x.size();
    Vector v(halfvec_dim(n));
    Eigen::Index t = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j)
            v[t++] = (i == j) ? x[i] * x[i] : 2.0 * x[i] * x[j];
    return v;
}

Matrix halfvec_to_sym(const Vector& theta, Eigen::Index n) {
    if (theta.size() != halfvec_dim(n))
        throw DimensionError("halfvec_to_sym: length does not match order");
    Matrix M(n, n);
    Eigen::Index t = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            M(i, j) = theta[t];
            M(j, i) = theta[t];
            ++t;
        }
    return M;
}

}  // namespace lqgd
