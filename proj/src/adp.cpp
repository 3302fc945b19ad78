#include "lqgd/adp.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lqgd/lqg.hpp"
#include "lqgd/rng.hpp"

namespace lqgd {

void AdpConfig::validate() const {
    if (beta <= 0.0 || eps1 <= 0.0 || eps2 <= 0.0 || probe_std <= 0.0)
        throw ParameterError("adp: beta, eps1, eps2 and probe_std must be positive");
    if (max_inner <= 0 || max_outer <= 0)
        throw ParameterError("adp: iteration caps must be positive");
}

Vector phi_features(const Vector& x, const Vector& u, const Vector& x_next,
                    const Policy& policy, Discount gamma) {
    const auto n = x.size();
    const auto m = u.size();
    if (x_next.size() != n || policy.K.rows() != m || policy.K.cols() != n)
        throw DimensionError("phi_features: inconsistent dimensions");
    Vector z(n + m + 1);
    z << x, u, 1.0;
    Vector z_next(n + m + 1);
    z_next << x_next, policy(x_next), 1.0;
    return bar_features(z) - gamma.gamma * bar_features(z_next);
}

double rls_update_inplace(RlsState& state, const Vector& phi, double c) {
    const Vector Sphi = state.S * phi;
    const double den = 1.0 + phi.dot(Sphi);
    const double innovation = c - phi.dot(state.theta_hat);
    const Vector step = Sphi * (innovation / den);
    state.theta_hat += step;
    state.S -= (Sphi * Sphi.transpose()) / den;
    ++state.update_count;
    return step.norm();
}

RlsState rls_update(const RlsState& state, const Vector& phi, double c) {
    RlsState next = state;
    rls_update_inplace(next, phi, c);
    return next;
}

std::pair<Policy, AdpTrace> adp_learn(const LinearSystem& sys, const CostChannel& cost_channel,
                                      Discount gamma, const Policy& init, const Vector& x0,
                                      const AdpConfig& cfg, const CostChannel& reference_cost) {
    sys.validate();
    cfg.validate();
    const auto n = sys.state_dim();
    const auto m = sys.input_dim();
    if (init.K.rows() != m || init.K.cols() != n || init.k.size() != m)
        throw DimensionError("adp_learn: init policy dimensions do not match the system");
    if (x0.size() != n)
        throw DimensionError("adp_learn: x0 has wrong length");
    if (!is_stabilizing(sys, init))
        throw ParameterError("adp_learn: initial policy must be stabilizing");
    {
        Matrix ctrb(n, n * m);
        Matrix Apow = Matrix::Identity(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            ctrb.middleCols(i * m, m) = Apow * sys.B;
            Apow = sys.A * Apow;
        }
        Eigen::JacobiSVD<Matrix> svd(ctrb);
        const auto& s = svd.singularValues();
        if (s(s.size() - 1) <= tol::kRank * s(0))
            throw ParameterError("adp_learn: (A,B) must be controllable");
    }

    const Eigen::Index dim = adp_theta_dim(n, m);
    const int min_inner = cfg.min_inner > 0 ? cfg.min_inner : static_cast<int>(dim) + 5;

    Rng rng(cfg.seed);
    Policy pi = init;
    RlsState rls = RlsState::fresh(dim, cfg.beta);  // theta_0(0) = 0
    Vector x = x0;

    AdpTrace trace;
    trace.policy_sequence.push_back(pi);

    for (int z = 0; z < cfg.max_outer; ++z) {
        rls.S = cfg.beta * Matrix::Identity(dim, dim);  // S_z(0) = beta I
        int i = 0;
        int resets_this_inner = 0;
        while (true) {
            const Vector probe = cfg.probe_std * rng.normal_vector(m);
            const Vector u = pi(x) + probe;
            const double c = cost_channel(x, u);
            const Vector w = sys.noise_std * rng.normal_vector(sys.noise_dim());
            const Vector x_next = sys.A * x + sys.B * u + sys.C * w;
            const Vector phi = phi_features(x, u, x_next, pi, gamma);
            const double step = rls_update_inplace(rls, phi, c);

            trace.cost_log.emplace_back(reference_cost ? reference_cost(x, u) : c, c);
            ++trace.total_steps;
            x = x_next;
            ++i;
            if (x.norm() > cfg.blowup_threshold) {
                x = x0;
                ++trace.resets;
                if (++resets_this_inner > cfg.max_resets_per_inner) {
                    trace.inner_counts.push_back(i);
                    trace.stop_reason = AdpStop::ExcessiveResets;
                    return {pi, trace};
                }
            }
            if (i >= min_inner && step < cfg.eps1)
                break;
            if (i >= cfg.max_inner)
                break;
        }
        trace.inner_counts.push_back(i);

        QMatrix q;
        q.n = n;
        q.m = m;
        q.H = halfvec_to_sym(rls.theta_hat, n + m + 1);
        Policy next;
        try {
            next = policy_improve(q);
        } catch (const ParameterError&) {
            trace.stop_reason = AdpStop::HuuNotPd;
            return {pi, trace};
        }
        const double dK = (next.K - pi.K).norm() + (next.k - pi.k).norm();
        pi = next;
        trace.policy_sequence.push_back(pi);
        // theta_{z+1}(0) = theta_z(i): the estimate is warm-started, only the
        // information matrix is reset at the top of the loop.
        if (dK < cfg.eps2) {
            trace.stop_reason = AdpStop::PolicyConverged;
            return {pi, trace};
        }
    }
    trace.stop_reason = AdpStop::MaxOuter;
    return {pi, trace};
}

AdpAttackResult adp_attack_run(const LinearSystem& sys, const CostParams& cost, Discount gamma,
                               const AttackTarget& target, const Policy& init, const Vector& x0,
                               const AdpConfig& cfg, const SynthesizeSettings& synth_settings) {
    AdpAttackResult result;
    result.attack = synthesize(sys, cost, gamma, target, synth_settings);
    const CostParams cost_dag = result.attack.cost_dag;
    const CostChannel falsified = [cost_dag](const Vector& x, const Vector& u) {
        return falsified_cost(cost_dag, x, u);
    };
    const CostChannel truth = [&cost](const Vector& x, const Vector& u) { return cost(x, u); };
    std::tie(result.learned, result.trace) =
        adp_learn(sys, falsified, gamma, init, x0, cfg, truth);
    return result;
}

}  // namespace lqgd
