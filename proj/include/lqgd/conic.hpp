#pragma once

#include <string>
#include <vector>

#include "lqgd/types.hpp"

namespace lqgd {

// A small convex solver for the recurring problem family
//
//   minimize    sum_j w_j ||X_{b_j} - A_j||      (Frobenius / Euclidean, un-squared)
//   subject to  linear equalities over all blocks
//               X_b is PSD (optionally shifted, X_b >= shift I) for chosen blocks
//
// solved by Douglas-Rachford splitting in the product space of three prox
// operators (affine projection, cone projection, norm proximal maps).
//
// Symmetric blocks are stored internally as scaled half-vectorizations
// (off-diagonals times sqrt(2)), an isometry between (S^n, Frobenius) and
// Euclidean space, so symmetry holds by construction and the norm terms and
// PSD projections are exact in the stacked coordinates.

enum class BlockKind { Symmetric, Rectangular, Vec, Scalar };

struct BlockId {
    int index = -1;
};

enum class ConicStatus { Optimal, InfeasibleDetected, MaxIters };

class ConicProblem;
class ConicSolution;
struct ConicSettings;
ConicSolution solve(const ConicProblem& problem, const ConicSettings& settings);

struct ConicSettings {
    double tol_primal = 1e-8;
    double tol_dual = 1e-8;
    int max_iters = 200000;
    double relax = 1.7;       // over-relaxation factor of the splitting step
    double prox_scale = 1.0;  // step of the norm proximal maps
    int check_interval = 25;
    // Infeasibility certificate: iterate displacement bounded away from zero
    // and stable to this relative change over infeas_window iterations.
    int infeas_window = 500;
    double infeas_rel_change = 1e-8;
};

class ConicProblem {
  public:
    BlockId add_symmetric(std::string name, Eigen::Index order);
    BlockId add_rectangular(std::string name, Eigen::Index rows, Eigen::Index cols);
    BlockId add_vector(std::string name, Eigen::Index size);
    BlockId add_scalar(std::string name);

    // Equality rows are assembled one at a time. Coefficients for a symmetric
    // block are given as a full matrix C meaning the functional <C, X>; the
    // builder folds C into the half-vectorized coordinates.
    class Row {
      public:
        explicit Row(const ConicProblem& p);
        Row& sym(BlockId b, const Matrix& C);
        Row& rect(BlockId b, const Matrix& C);
        Row& vec(BlockId b, const Vector& c);
        Row& scalar(BlockId b, double c);
        Row& rhs(double value);

      private:
        friend class ConicProblem;
        const ConicProblem* problem_;
        Vector coeffs_;
        double rhs_ = 0.0;
    };

    void add_equality(const Row& row);

    // Anchor shape must match the block: square for symmetric blocks,
    // rows x cols for rectangular, a column vector for vector blocks.
    template <typename Derived>
    void add_distance_term(BlockId b, const Eigen::MatrixBase<Derived>& anchor,
                           double weight = 1.0) {
        add_distance_term_impl(b, anchor.eval(), weight);
    }
    void add_distance_term(BlockId b, double anchor, double weight = 1.0);

    // X >= shift * I on a symmetric block.
    void add_psd(BlockId b, double shift = 0.0);

    Eigen::Index total_dim() const { return total_dim_; }
    Eigen::Index equality_count() const { return static_cast<Eigen::Index>(rows_.size()); }

    std::string dump_json() const;

  private:
    friend class ConicSolution;
    friend ConicSolution solve(const ConicProblem&, const ConicSettings&);

    void add_distance_term_impl(BlockId b, const Matrix& anchor, double weight);

    struct Block {
        std::string name;
        BlockKind kind;
        Eigen::Index rows = 0;
        Eigen::Index cols = 0;
        Eigen::Index offset = 0;
        Eigen::Index size = 0;
    };
    struct NormTerm {
        int block = -1;
        Vector anchor;  // in internal coordinates
        double weight = 1.0;
    };
    struct PsdCone {
        int block = -1;
        double shift = 0.0;
    };

    const Block& block_of(BlockId b) const;
    Vector to_internal(const Block& blk, const Matrix& M) const;

    std::vector<Block> blocks_;
    std::vector<Vector> rows_;
    std::vector<double> rhs_;
    std::vector<NormTerm> norm_terms_;
    std::vector<PsdCone> cones_;
    Eigen::Index total_dim_ = 0;
};

class ConicSolution {
  public:
    ConicStatus status = ConicStatus::MaxIters;
    double objective = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
    // Norm of the stabilized iterate displacement when infeasibility was
    // declared; zero otherwise.
    double displacement_norm = 0.0;

    Matrix matrix_value(BlockId b) const;
    Vector vector_value(BlockId b) const;
    double scalar_value(BlockId b) const;

  private:
    friend ConicSolution solve(const ConicProblem&, const ConicSettings&);
    std::vector<ConicProblem::Block> layout_;
    Vector x_;
};

// Redeclaration supplying the default settings.
ConicSolution solve(const ConicProblem& problem, const ConicSettings& settings = ConicSettings{});

}  // namespace lqgd
