#include "lqgd/conic.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <json.hpp>

namespace lqgd {
namespace {

constexpr double kSqrt2 = 1.4142135623730951;

Eigen::Index internal_size(BlockKind kind, Eigen::Index rows, Eigen::Index cols) {
    switch (kind) {
        case BlockKind::Symmetric: return rows * (rows + 1) / 2;
        case BlockKind::Rectangular: return rows * cols;
        case BlockKind::Vec: return rows;
        case BlockKind::Scalar: return 1;
    }
    return 0;
}

// scaled svec <-> symmetric matrix (isometric for the Frobenius norm)
Vector sym_to_svec(const Matrix& M) {
    const auto n = M.rows();
    Vector v(n * (n + 1) / 2);
    Eigen::Index t = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j)
            v[t++] = (i == j) ? M(i, i) : kSqrt2 * 0.5 * (M(i, j) + M(j, i));
    return v;
}

Matrix svec_to_sym(const Eigen::Ref<const Vector>& v, Eigen::Index n) {
    Matrix M(n, n);
    Eigen::Index t = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            const double x = (i == j) ? v[t] : v[t] / kSqrt2;
            M(i, j) = x;
            M(j, i) = x;
            ++t;
        }
    return M;
}

}  // namespace

BlockId ConicProblem::add_symmetric(std::string name, Eigen::Index order) {
    Block blk{std::move(name), BlockKind::Symmetric, order, order, total_dim_,
              internal_size(BlockKind::Symmetric, order, order)};
    total_dim_ += blk.size;
    blocks_.push_back(std::move(blk));
    return BlockId{static_cast<int>(blocks_.size()) - 1};
}

BlockId ConicProblem::add_rectangular(std::string name, Eigen::Index rows, Eigen::Index cols) {
    Block blk{std::move(name), BlockKind::Rectangular, rows, cols, total_dim_,
              internal_size(BlockKind::Rectangular, rows, cols)};
    total_dim_ += blk.size;
    blocks_.push_back(std::move(blk));
    return BlockId{static_cast<int>(blocks_.size()) - 1};
}

BlockId ConicProblem::add_vector(std::string name, Eigen::Index size) {
    Block blk{std::move(name), BlockKind::Vec, size, 1, total_dim_,
              internal_size(BlockKind::Vec, size, 1)};
    total_dim_ += blk.size;
    blocks_.push_back(std::move(blk));
    return BlockId{static_cast<int>(blocks_.size()) - 1};
}

BlockId ConicProblem::add_scalar(std::string name) {
    Block blk{std::move(name), BlockKind::Scalar, 1, 1, total_dim_, 1};
    total_dim_ += 1;
    blocks_.push_back(std::move(blk));
    return BlockId{static_cast<int>(blocks_.size()) - 1};
}

const ConicProblem::Block& ConicProblem::block_of(BlockId b) const {
    if (b.index < 0 || b.index >= static_cast<int>(blocks_.size()))
        throw DimensionError("conic: unknown block id");
    return blocks_[static_cast<std::size_t>(b.index)];
}

Vector ConicProblem::to_internal(const Block& blk, const Matrix& M) const {
    if (M.rows() != blk.rows || M.cols() != blk.cols)
        throw DimensionError("conic: matrix shape does not match block " + blk.name);
    if (blk.kind == BlockKind::Symmetric)
        return sym_to_svec(M);
    Vector v(blk.size);
    Eigen::Index t = 0;
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            v[t++] = M(i, j);
    return v;
}

ConicProblem::Row::Row(const ConicProblem& p)
    : problem_(&p), coeffs_(Vector::Zero(p.total_dim_)) {}

ConicProblem::Row& ConicProblem::Row::sym(BlockId b, const Matrix& C) {
    const auto& blk = problem_->block_of(b);
    if (blk.kind != BlockKind::Symmetric)
        throw DimensionError("conic: sym() coefficient on non-symmetric block " + blk.name);
    if (C.rows() != blk.rows || C.cols() != blk.rows)
        throw DimensionError("conic: coefficient shape mismatch on block " + blk.name);
    Eigen::Index t = 0;
    for (Eigen::Index i = 0; i < blk.rows; ++i)
        for (Eigen::Index j = i; j < blk.rows; ++j) {
            // <C, X> = sum_i C_ii X_ii + sum_{i<j} (C_ij + C_ji) X_ij,
            // and the stored coordinate is sqrt(2) X_ij off the diagonal.
            coeffs_[blk.offset + t] +=
                (i == j) ? C(i, i) : (C(i, j) + C(j, i)) / kSqrt2;
            ++t;
        }
    return *this;
}

ConicProblem::Row& ConicProblem::Row::rect(BlockId b, const Matrix& C) {
    const auto& blk = problem_->block_of(b);
    if (blk.kind != BlockKind::Rectangular)
        throw DimensionError("conic: rect() coefficient on non-rectangular block " + blk.name);
    if (C.rows() != blk.rows || C.cols() != blk.cols)
        throw DimensionError("conic: coefficient shape mismatch on block " + blk.name);
    Eigen::Index t = 0;
    for (Eigen::Index i = 0; i < C.rows(); ++i)
        for (Eigen::Index j = 0; j < C.cols(); ++j)
            coeffs_[blk.offset + t++] += C(i, j);
    return *this;
}

ConicProblem::Row& ConicProblem::Row::vec(BlockId b, const Vector& c) {
    const auto& blk = problem_->block_of(b);
    if (blk.kind != BlockKind::Vec)
        throw DimensionError("conic: vec() coefficient on non-vector block " + blk.name);
    if (c.size() != blk.size)
        throw DimensionError("conic: coefficient length mismatch on block " + blk.name);
    coeffs_.segment(blk.offset, blk.size) += c;
    return *this;
}

ConicProblem::Row& ConicProblem::Row::scalar(BlockId b, double c) {
    const auto& blk = problem_->block_of(b);
    if (blk.kind != BlockKind::Scalar)
        throw DimensionError("conic: scalar() coefficient on non-scalar block " + blk.name);
    coeffs_[blk.offset] += c;
    return *this;
}

ConicProblem::Row& ConicProblem::Row::rhs(double value) {
    rhs_ = value;
    return *this;
}

void ConicProblem::add_equality(const Row& row) {
    rows_.push_back(row.coeffs_);
    rhs_.push_back(row.rhs_);
}

void ConicProblem::add_distance_term_impl(BlockId b, const Matrix& anchor, double weight) {
    const auto& blk = block_of(b);
    if (blk.kind == BlockKind::Vec) {
        if (anchor.cols() != 1 || anchor.rows() != blk.size)
            throw DimensionError("conic: vector anchor mismatch on block " + blk.name);
        norm_terms_.push_back({b.index, Vector(anchor.col(0)), weight});
        return;
    }
    if (blk.kind == BlockKind::Scalar) {
        if (anchor.size() != 1)
            throw DimensionError("conic: scalar anchor mismatch on block " + blk.name);
        norm_terms_.push_back({b.index, Vector::Constant(1, anchor(0, 0)), weight});
        return;
    }
    norm_terms_.push_back({b.index, to_internal(blk, anchor), weight});
}

void ConicProblem::add_distance_term(BlockId b, double anchor, double weight) {
    const auto& blk = block_of(b);
    if (blk.kind != BlockKind::Scalar)
        throw DimensionError("conic: scalar anchor on non-scalar block " + blk.name);
    norm_terms_.push_back({b.index, Vector::Constant(1, anchor), weight});
}

void ConicProblem::add_psd(BlockId b, double shift) {
    const auto& blk = block_of(b);
    if (blk.kind != BlockKind::Symmetric)
        throw DimensionError("conic: PSD cone on non-symmetric block " + blk.name);
    cones_.push_back({b.index, shift});
}

std::string ConicProblem::dump_json() const {
    nlohmann::json j;
    for (const auto& blk : blocks_) {
        j["blocks"].push_back({{"name", blk.name},
                               {"kind", static_cast<int>(blk.kind)},
                               {"rows", blk.rows},
                               {"cols", blk.cols},
                               {"offset", blk.offset},
                               {"size", blk.size}});
    }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        nlohmann::json row;
        row["rhs"] = rhs_[r];
        std::vector<double> c(rows_[r].data(), rows_[r].data() + rows_[r].size());
        row["coeffs"] = c;
        j["equalities"].push_back(row);
    }
    for (const auto& t : norm_terms_) {
        std::vector<double> a(t.anchor.data(), t.anchor.data() + t.anchor.size());
        j["objective"].push_back(
            {{"block", blocks_[static_cast<std::size_t>(t.block)].name},
             {"weight", t.weight},
             {"anchor_internal", a}});
    }
    for (const auto& c : cones_)
        j["psd_blocks"].push_back(
            {{"block", blocks_[static_cast<std::size_t>(c.block)].name}, {"shift", c.shift}});
    return j.dump(2);
}

Matrix ConicSolution::matrix_value(BlockId b) const {
    const auto& blk = layout_.at(static_cast<std::size_t>(b.index));
    if (blk.kind == BlockKind::Symmetric)
        return svec_to_sym(x_.segment(blk.offset, blk.size), blk.rows);
    if (blk.kind == BlockKind::Rectangular) {
        Matrix M(blk.rows, blk.cols);
        Eigen::Index t = 0;
        for (Eigen::Index i = 0; i < blk.rows; ++i)
            for (Eigen::Index j = 0; j < blk.cols; ++j)
                M(i, j) = x_[blk.offset + t++];
        return M;
    }
    throw DimensionError("conic: matrix_value on non-matrix block " + blk.name);
}

Vector ConicSolution::vector_value(BlockId b) const {
    const auto& blk = layout_.at(static_cast<std::size_t>(b.index));
    if (blk.kind != BlockKind::Vec)
        throw DimensionError("conic: vector_value on non-vector block " + blk.name);
    return x_.segment(blk.offset, blk.size);
}

double ConicSolution::scalar_value(BlockId b) const {
    const auto& blk = layout_.at(static_cast<std::size_t>(b.index));
    if (blk.kind != BlockKind::Scalar)
        throw DimensionError("conic: scalar_value on non-scalar block " + blk.name);
    return x_[blk.offset];
}

ConicSolution solve(const ConicProblem& problem, const ConicSettings& settings) {
    const Eigen::Index N = problem.total_dim_;
    ConicSolution sol;
    sol.layout_ = problem.blocks_;
    sol.x_ = Vector::Zero(N);

    // Stack and equilibrate the equality rows (unit row norms keep the
    // residual test meaningful across constraint families of very different
    // coefficient scales).
    std::vector<Eigen::Index> kept;
    for (std::size_t r = 0; r < problem.rows_.size(); ++r) {
        const double nrm = problem.rows_[r].norm();
        if (nrm == 0.0) {
            if (std::abs(problem.rhs_[r]) > settings.tol_primal) {
                sol.status = ConicStatus::InfeasibleDetected;
                return sol;
            }
            continue;
        }
        kept.push_back(static_cast<Eigen::Index>(r));
    }
    const Eigen::Index R = static_cast<Eigen::Index>(kept.size());
    Matrix L(R, N);
    Vector b(R);
    for (Eigen::Index i = 0; i < R; ++i) {
        const auto r = static_cast<std::size_t>(kept[static_cast<std::size_t>(i)]);
        const double nrm = problem.rows_[r].norm();
        L.row(i) = problem.rows_[r].transpose() / nrm;
        b[i] = problem.rhs_[r] / nrm;
    }

    Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
    bool have_equalities = R > 0;
    if (have_equalities) {
        cod.compute(L);
        const Vector x_part = cod.solve(b);
        const double incons = (L * x_part - b).cwiseAbs().maxCoeff();
        if (incons > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff())) {
            sol.status = ConicStatus::InfeasibleDetected;
            sol.primal_residual = incons;
            return sol;
        }
    }

    auto proj_affine = [&](const Vector& v) -> Vector {
        if (!have_equalities)
            return v;
        return v - cod.solve(L * v - b);
    };
    auto proj_cones = [&](Vector v) -> Vector {
        for (const auto& cone : problem.cones_) {
            const auto& blk = problem.blocks_[static_cast<std::size_t>(cone.block)];
            Matrix M = svec_to_sym(v.segment(blk.offset, blk.size), blk.rows);
            Eigen::SelfAdjointEigenSolver<Matrix> es(M);
            const Vector lam = es.eigenvalues().cwiseMax(cone.shift);
            M = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
            v.segment(blk.offset, blk.size) = sym_to_svec(M);
        }
        return v;
    };
    auto prox_norms = [&](Vector v) -> Vector {
        for (const auto& term : problem.norm_terms_) {
            const auto& blk = problem.blocks_[static_cast<std::size_t>(term.block)];
            auto seg = v.segment(blk.offset, blk.size);
            const Vector diff = seg - term.anchor;
            const double dist = diff.norm();
            const double thresh = settings.prox_scale * term.weight;
            seg = (dist <= thresh) ? term.anchor
                                   : Vector(term.anchor + (1.0 - thresh / dist) * diff);
        }
        return v;
    };

    auto cone_violation = [&](const Vector& v) -> double {
        double worst = 0.0;
        for (const auto& cone : problem.cones_) {
            const auto& blk = problem.blocks_[static_cast<std::size_t>(cone.block)];
            const Matrix M = svec_to_sym(v.segment(blk.offset, blk.size), blk.rows);
            Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
            worst = std::max(worst, cone.shift - es.eigenvalues().minCoeff());
        }
        return worst;
    };
    auto objective_at = [&](const Vector& v) -> double {
        double obj = 0.0;
        for (const auto& term : problem.norm_terms_) {
            const auto& blk = problem.blocks_[static_cast<std::size_t>(term.block)];
            obj += term.weight * (v.segment(blk.offset, blk.size) - term.anchor).norm();
        }
        return obj;
    };

    constexpr int kCopies = 3;
    std::vector<Vector> z(kCopies, Vector::Zero(N));
    std::vector<Vector> y(kCopies, Vector::Zero(N));
    std::vector<Vector> z_at_check = z;
    Vector prev_displacement;
    int stable_since = -1;
    double last_r_primal = 0.0, last_r_dual = 0.0;

    int it = 0;
    for (; it < settings.max_iters; ++it) {
        Vector p = (z[0] + z[1] + z[2]) / 3.0;
        y[0] = proj_affine(2.0 * p - z[0]);
        y[1] = proj_cones(2.0 * p - z[1]);
        y[2] = prox_norms(2.0 * p - z[2]);
        for (int k = 0; k < kCopies; ++k)
            z[k] += settings.relax * (y[k] - p);

        if ((it + 1) % settings.check_interval != 0)
            continue;

        const Vector ybar = (y[0] + y[1] + y[2]) / 3.0;
        const double r_eq = have_equalities ? (L * p - b).cwiseAbs().maxCoeff() : 0.0;
        const double r_cone = cone_violation(p);
        const double r_primal = std::max(r_eq, r_cone);
        const double r_dual = (ybar - p).norm() / (1.0 + p.norm());
        last_r_primal = r_primal;
        last_r_dual = r_dual;
        if (r_primal <= settings.tol_primal && r_dual <= settings.tol_dual) {
            sol.status = ConicStatus::Optimal;
            sol.x_ = p;
            sol.objective = objective_at(p);
            sol.primal_residual = r_primal;
            sol.dual_residual = r_dual;
            sol.iterations = it + 1;
            return sol;
        }

        // Infeasibility certificate: between checks the iterate displacement
        // converges to a fixed nonzero vector when no feasible point exists.
        Vector displacement(kCopies * N);
        displacement << z[0] - z_at_check[0], z[1] - z_at_check[1], z[2] - z_at_check[2];
        z_at_check = z;
        const double dn = displacement.norm();
        if (prev_displacement.size() > 0 && dn > 1e-7 * (1.0 + p.norm())) {
            const double rel = (displacement - prev_displacement).norm() / dn;
            if (rel < settings.infeas_rel_change) {
                if (stable_since < 0)
                    stable_since = it;
                if (it - stable_since >= settings.infeas_window) {
                    sol.status = ConicStatus::InfeasibleDetected;
                    sol.x_ = p;
                    sol.displacement_norm = dn / settings.check_interval;
                    sol.iterations = it + 1;
                    sol.primal_residual = r_primal;
                    sol.dual_residual = r_dual;
                    return sol;
                }
            } else {
                stable_since = -1;
            }
        } else {
            stable_since = -1;
        }
        prev_displacement = displacement;
    }

    const Vector p = (z[0] + z[1] + z[2]) / 3.0;
    sol.status = ConicStatus::MaxIters;
    sol.x_ = p;
    sol.objective = objective_at(p);
    sol.primal_residual = last_r_primal;
    sol.dual_residual = last_r_dual;
    sol.iterations = it;
    return sol;
}

}  // namespace lqgd
