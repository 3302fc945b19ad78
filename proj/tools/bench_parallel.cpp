// Times the two OpenMP-parallel harnesses against their serial reference
// paths: the perturbation-bound verification trials and the feasibility
// frequency grid. Both paths produce identical results by construction
// (per-trial derived seeds, deterministic reductions); this tool reports the
// speedup only.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <lqgd/attack.hpp>
#include <lqgd/bounds.hpp>
#include <lqgd/lqg.hpp>

using namespace lqgd;

namespace {

LinearSystem vehicle6d() {
    LinearSystem sys;
    sys.A = Matrix::Zero(6, 6);
    sys.A.topLeftCorner(3, 3) = Matrix::Identity(3, 3);
    sys.A.topRightCorner(3, 3) = 0.1 * Matrix::Identity(3, 3);
    sys.A.bottomRightCorner(3, 3) = 0.95 * Matrix::Identity(3, 3);
    sys.B = Matrix::Zero(6, 3);
    sys.B.bottomRows(3) = 0.1 * Matrix::Identity(3, 3);
    sys.C = Matrix::Identity(6, 6);
    sys.noise_std = 0.1;
    return sys;
}

template <typename F>
double time_ms(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not enabled; both paths run serially\n");
#endif

    const LinearSystem sys = vehicle6d();
    CostParams cost;
    cost.D = Matrix::Identity(6, 6);
    cost.E = 0.5 * Matrix::Identity(3, 3);
    cost.d = Vector::Zero(6);
    const Discount gamma(0.9);

    VerifySettings vs;
    vs.n_trials = 400;
    vs.eps = 1e-3;
    vs.seed = 17;

    vs.parallel = false;
    VerifyReport serial_report;
    const double t_serial = time_ms([&] { serial_report = verify_bounds(sys, cost, gamma, vs); });
    vs.parallel = true;
    VerifyReport parallel_report;
    const double t_parallel =
        time_ms([&] { parallel_report = verify_bounds(sys, cost, gamma, vs); });
    const bool same_verify = serial_report.violations == parallel_report.violations &&
                             serial_report.max_ratio == parallel_report.max_ratio;
    std::printf("verify_bounds (%d trials): serial %.1f ms, openmp %.1f ms, speedup %.2fx, "
                "identical results: %s\n",
                vs.n_trials, t_serial, t_parallel, t_serial / t_parallel,
                same_verify ? "yes" : "NO");

    auto [pi, value] = dlqg(sys, cost, gamma);
    AttackTarget target;
    target.K = pi.K;
    target.k = Vector::Zero(3);
    target.k << 0.5316, 0.0, -0.5316;

    FeasibilitySettings fsopt;
    fsopt.grid_size = 16384;
    fsopt.parallel = false;
    FeasibilityReport serial_feas;
    const double f_serial = time_ms(
        [&] { serial_feas = feasibility_check(sys, Matrix::Identity(3, 3), gamma, target, fsopt); });
    fsopt.parallel = true;
    FeasibilityReport parallel_feas;
    const double f_parallel = time_ms(
        [&] { parallel_feas = feasibility_check(sys, Matrix::Identity(3, 3), gamma, target, fsopt); });
    const bool same_feas =
        serial_feas.cond2_min_eig_over_grid == parallel_feas.cond2_min_eig_over_grid &&
        serial_feas.skipped_points == parallel_feas.skipped_points;
    std::printf("feasibility grid (%d points): serial %.1f ms, openmp %.1f ms, speedup %.2fx, "
                "identical results: %s\n",
                fsopt.grid_size, f_serial, f_parallel, f_serial / f_parallel,
                same_feas ? "yes" : "NO");
    return (same_verify && same_feas) ? 0 : 1;
}
