#include "lqgd/bounds.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "lqgd/lqg.hpp"
#include "lqgd/rng.hpp"

namespace lqgd {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Extended product: a factor of exactly zero annihilates an inapplicable
// (NaN) bound, since the term it multiplies is absent from the inequality.
double mul_ext(double a, double b) {
    if ((a == 0.0 && !std::isnan(a)) || (b == 0.0 && !std::isnan(b)))
        return 0.0;
    return a * b;
}

Matrix random_symmetric_with_norm(Rng& rng, Eigen::Index n, double target) {
    Matrix G(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            G(i, j) = rng.normal();
    Matrix S = 0.5 * (G + G.transpose());
    const double nrm = operator_norm(S);
    if (nrm == 0.0)
        return S;
    return S * (target / nrm);
}

struct TrialResult {
    bool resampled = false;
    bool violated = false;
    double ratio = 0.0;
};

}  // namespace

double operator_norm(const Matrix& M) {
    if (M.size() == 0)
        return 0.0;
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues()(0);
}

TauResult tau(const Matrix& M, int k_max, int settle_window) {
    if (M.rows() != M.cols())
        throw DimensionError("tau needs a square matrix");
    const double rho = spectral_radius(M);
    if (rho == 0.0)
        throw ParameterError("tau undefined: matrix is nilpotent (rho = 0)");

    const double log_rho = std::log(rho);
    TauResult result;
    result.value = 1.0;  // k = 0 term
    Matrix Mk = Matrix::Identity(M.rows(), M.cols());
    double log_scale = 0.0;
    double prev_log_ratio = 0.0;
    int decreasing = 0;
    for (int k = 1; k <= k_max; ++k) {
        Mk = Mk * M;
        const double fro = Mk.norm();
        if (fro > 1e100 || (fro < 1e-100 && fro > 0.0)) {
            log_scale += std::log(fro);
            Mk /= fro;
        }
        const double log_ratio = std::log(operator_norm(Mk)) + log_scale - k * log_rho;
        result.value = std::max(result.value, std::exp(log_ratio));
        if (log_ratio < prev_log_ratio) {
            if (++decreasing >= settle_window) {
                result.settled = true;
                return result;
            }
        } else {
            decreasing = 0;
        }
        prev_log_ratio = log_ratio;
    }
    result.settled = false;
    return result;
}

PerturbationBounds perturbation_bounds(const LinearSystem& sys, const CostParams& cost,
                                       Discount gamma) {
    const double g = gamma.gamma;
    auto [pi, value] = dlqg(sys, cost, gamma);
    const Matrix Ac = closed_loop(sys, pi);
    const auto n = sys.state_dim();

    PerturbationBounds b;
    b.rho_Ac = spectral_radius(Ac);
    const TauResult t = tau(Ac);
    b.tau_Ac = t.value;
    b.tau_settled = t.settled;

    Eigen::SelfAdjointEigenSolver<Matrix> ee(cost.E, Eigen::EigenvaluesOnly);
    b.lambda_min_E = ee.eigenvalues().minCoeff();
    const Matrix E_inv = cost.E.inverse();
    b.norm_E_inv = operator_norm(E_inv);
    b.e_inv_applicable = b.norm_E_inv < 1.0;

    const double normA = operator_norm(sys.A);
    const double normB = operator_norm(sys.B);
    const double normP = operator_norm(value.P);
    const double normK = operator_norm(pi.K);
    const double norm_k = pi.k.norm();
    const double denom = 1.0 - g * b.rho_Ac * b.rho_Ac;

    b.gamma1 = 4.0 * g * g * b.tau_Ac * b.tau_Ac / denom;
    if (b.e_inv_applicable) {
        b.gamma2 = b.gamma1 * normA * normA * (normP + 1.0) * (normP + 1.0) *
                   b.norm_E_inv * b.norm_E_inv * normB * normB / (1.0 - b.norm_E_inv);
    } else {
        b.gamma2 = kNaN;
    }
    const double maxAB = std::max(normA, normB);
    b.gamma3 = (2.0 * g / b.lambda_min_E) * maxAB * maxAB * (normK + 1.0);
    b.gamma4 = (2.0 * g / b.lambda_min_E) * normK;
    const Matrix resolvent = (Matrix::Identity(n, n) - g * Ac).inverse();
    const double norm_res = operator_norm(resolvent);
    b.gamma5 = 2.0 * norm_res;
    b.gamma6 = 2.0 * g * norm_res * cost.d.norm() * normB;
    b.gamma7 = (4.0 / b.lambda_min_E) * norm_k;
    b.gamma8 = (4.0 * g / b.lambda_min_E) * norm_k * normB * normB;
    b.gamma9 = (4.0 * g / b.lambda_min_E) * normB;

    // Contraction radius from the fixed-point argument: the admissible
    // eps satisfies (Gamma1 + Gamma2) eps <= min(denom / (g^2 tau ||Ac|| ||S||), 1)
    // with S = B E^{-1} B'.
    if (b.e_inv_applicable) {
        const Matrix S = sys.B * E_inv * sys.B.transpose();
        const double cap =
            std::min(denom / (g * g * b.tau_Ac * operator_norm(Ac) * operator_norm(S)), 1.0);
        b.eps_prop1 = cap / (b.gamma1 + b.gamma2);
        b.eps_max = std::min(b.eps_prop1, b.lambda_min_E / 2.0);
    } else {
        b.eps_prop1 = kNaN;
        b.eps_max = b.lambda_min_E / 2.0;
    }

    b.K_coef_D = mul_ext(b.gamma3, b.gamma1);
    b.K_coef_E = mul_ext(b.gamma3, b.gamma2) + b.gamma4;
    b.k_coef_D = mul_ext(b.gamma1, b.gamma8) +
                 mul_ext(mul_ext(mul_ext(b.gamma1, b.gamma3), b.gamma6), b.gamma9);
    b.k_coef_E = b.gamma7 + mul_ext(b.gamma2, b.gamma8) +
                 mul_ext(mul_ext(b.gamma4 + mul_ext(b.gamma2, b.gamma3), b.gamma6), b.gamma9);
    b.k_coef_d = mul_ext(b.gamma5, b.gamma9);
    return b;
}

VerifyReport verify_bounds(const LinearSystem& sys, const CostParams& cost, Discount gamma,
                           const VerifySettings& settings) {
    if (settings.eps < 0.0)
        throw ParameterError("verify_bounds: eps must be nonnegative");
    const PerturbationBounds b = perturbation_bounds(sys, cost, gamma);
    auto [pi_star, v_star] = dlqg(sys, cost, gamma);
    const auto n = sys.state_dim();
    const auto m = sys.input_dim();

    auto run_trial = [&](int trial) -> TrialResult {
        TrialResult res;
        Rng rng(derive_seed(settings.seed, static_cast<std::uint64_t>(trial)));
        CostParams pert = cost;
        double ndD = 0.0, ndE = 0.0, ndd = 0.0;
        for (int attempt = 0;; ++attempt) {
            const Matrix dD = random_symmetric_with_norm(rng, n, settings.eps);
            const Matrix dE = random_symmetric_with_norm(rng, m, settings.eps);
            Vector dd = rng.normal_vector(n);
            if (dd.norm() > 0.0)
                dd *= settings.eps / dd.norm();
            pert.D = cost.D + dD;
            pert.E = cost.E + dE;
            pert.d = cost.d + dd;
            Eigen::SelfAdjointEigenSolver<Matrix> es(pert.E, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() > 0.0) {
                ndD = operator_norm(dD);
                ndE = operator_norm(dE);
                ndd = dd.norm();
                break;
            }
            res.resampled = true;
            if (attempt > 100)
                throw SolveError("verify_bounds: could not draw a PD perturbation of E");
        }
        auto [pi_p, v_p] = dlqg(sys, pert, gamma);
        const double dK = operator_norm(pi_p.K - pi_star.K);
        const double dk = (pi_p.k - pi_star.k).norm();

        const double bound_K = mul_ext(b.K_coef_D, ndD) + mul_ext(b.K_coef_E, ndE);
        const double bound_k =
            mul_ext(b.k_coef_D, ndD) + mul_ext(b.k_coef_E, ndE) + mul_ext(b.k_coef_d, ndd);
        for (auto [actual, bound] : {std::pair{dK, bound_K}, std::pair{dk, bound_k}}) {
            if (std::isnan(bound))
                continue;  // inapplicable: vacuous for this trial
            if (actual > bound * (1.0 + 1e-9) + 1e-12)
                res.violated = true;
            if (bound > 0.0)
                res.ratio = std::max(res.ratio, actual / bound);
        }
        return res;
    };

    std::vector<TrialResult> results(static_cast<std::size_t>(settings.n_trials));
    if (settings.parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < settings.n_trials; ++i)
            results[static_cast<std::size_t>(i)] = run_trial(i);
    } else {
        for (int i = 0; i < settings.n_trials; ++i)
            results[static_cast<std::size_t>(i)] = run_trial(i);
    }

    VerifyReport report;
    report.trials = settings.n_trials;
    for (const auto& res : results) {
        report.violations += res.violated ? 1 : 0;
        report.resampled += res.resampled ? 1 : 0;
        report.max_ratio = std::max(report.max_ratio, res.ratio);
    }
    return report;
}

}  // namespace lqgd
