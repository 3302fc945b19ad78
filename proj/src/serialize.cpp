#include "lqgd/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace lqgd {
namespace {

// 17 significant digits round-trip doubles exactly and keep files
// byte-stable across runs.
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const char* stop_reason_name(AdpStop reason) {
    switch (reason) {
        case AdpStop::PolicyConverged: return "policy_converged";
        case AdpStop::MaxOuter: return "max_outer";
        case AdpStop::HuuNotPd: return "huu_not_pd";
        case AdpStop::ExcessiveResets: return "excessive_resets";
    }
    return "unknown";
}

const char* status_name(ConicStatus status) {
    switch (status) {
        case ConicStatus::Optimal: return "optimal";
        case ConicStatus::InfeasibleDetected: return "infeasible_detected";
        case ConicStatus::MaxIters: return "max_iters";
    }
    return "unknown";
}

Json nan_safe(double v) {
    if (std::isnan(v))
        return "inapplicable";
    return v;
}

}  // namespace

Json matrix_to_json(const Matrix& M) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(v[i]);
    return out;
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ParameterError(what + ": expected a nested array (row-major matrix)");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ParameterError(what + ": ragged matrix rows");
        for (Eigen::Index c = 0; c < cols; ++c)
            M(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return M;
}

Vector vector_from_json(const Json& j, const std::string& what) {
    if (!j.is_array())
        throw ParameterError(what + ": expected an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

Json policy_to_json(const Policy& pi) {
    return Json{{"K", matrix_to_json(pi.K)}, {"k", vector_to_json(pi.k)}};
}

Json value_to_json(const ValueQuad& v) {
    return Json{{"P", matrix_to_json(v.P)}, {"h", vector_to_json(v.h)}, {"l", v.l}};
}

Json bounds_to_json(const PerturbationBounds& b) {
    Json j;
    j["gamma1"] = b.gamma1;
    j["gamma2"] = nan_safe(b.gamma2);
    j["gamma3"] = b.gamma3;
    j["gamma4"] = b.gamma4;
    j["gamma5"] = b.gamma5;
    j["gamma6"] = b.gamma6;
    j["gamma7"] = b.gamma7;
    j["gamma8"] = b.gamma8;
    j["gamma9"] = b.gamma9;
    j["e_inv_applicable"] = b.e_inv_applicable;
    j["rho_Ac"] = b.rho_Ac;
    j["tau_Ac"] = b.tau_Ac;
    j["tau_settled"] = b.tau_settled;
    j["eps_prop1"] = nan_safe(b.eps_prop1);
    j["eps_max"] = b.eps_max;
    j["lambda_min_E"] = b.lambda_min_E;
    j["norm_E_inv"] = b.norm_E_inv;
    j["K_coef_D"] = nan_safe(b.K_coef_D);
    j["K_coef_E"] = nan_safe(b.K_coef_E);
    j["k_coef_D"] = nan_safe(b.k_coef_D);
    j["k_coef_E"] = nan_safe(b.k_coef_E);
    j["k_coef_d"] = nan_safe(b.k_coef_d);
    return j;
}

Json verify_report_to_json(const VerifyReport& r) {
    return Json{{"trials", r.trials},
                {"violations", r.violations},
                {"resampled", r.resampled},
                {"max_ratio", r.max_ratio}};
}

Json attack_solution_to_json(const AttackSolution& a) {
    Json j;
    j["D_dag"] = matrix_to_json(a.cost_dag.D);
    j["E_dag"] = matrix_to_json(a.cost_dag.E);
    j["d_dag"] = vector_to_json(a.cost_dag.d);
    j["r"] = a.cost_dag.r;
    j["objective"] = a.objective;
    j["certified"] = a.certified;
    j["certification_error"] = a.certification_error;
    j["P"] = matrix_to_json(a.P);
    j["h"] = vector_to_json(a.h);
    j["solver_status"] = status_name(a.solver_status);
    j["primal_residual"] = a.primal_residual;
    j["iterations"] = a.iterations;
    return j;
}

Json feasibility_report_to_json(const FeasibilityReport& r) {
    Json j;
    j["cond1_W0_min_eig"] = r.cond1_W0_min_eig;
    j["cond2_min_eig_over_grid"] = r.cond2_min_eig_over_grid;
    j["grid_size"] = r.grid_size;
    j["skipped_points"] = r.skipped_points;
    j["w0_asymmetry"] = r.w0_asymmetry;
    j["cond3_status"] = FeasibilityReport::cond3_status;
    switch (r.verdict) {
        case FeasibilityVerdict::FeasibleEvidence: j["verdict"] = "feasible_evidence"; break;
        case FeasibilityVerdict::InfeasibleEvidence: j["verdict"] = "infeasible_evidence"; break;
        case FeasibilityVerdict::Inconclusive: j["verdict"] = "inconclusive"; break;
    }
    Json series = Json::array();
    for (double v : r.min_eig_series)
        series.push_back(std::isnan(v) ? Json("skipped") : Json(v));
    j["min_eig_series"] = std::move(series);
    return j;
}

std::string trajectory_to_csv(const Trajectory& traj) {
    std::ostringstream out;
    if (traj.steps.empty())
        return "t,c\n";
    const auto n = traj.steps[0].x.size();
    const auto m = traj.steps[0].u.size();
    out << "t";
    for (Eigen::Index i = 1; i <= n; ++i)
        out << ",x_" << i;
    for (Eigen::Index i = 1; i <= m; ++i)
        out << ",u_" << i;
    out << ",c\n";
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        const auto& s = traj.steps[t];
        out << t;
        for (Eigen::Index i = 0; i < n; ++i)
            out << "," << fmt(s.x[i]);
        for (Eigen::Index i = 0; i < m; ++i)
            out << "," << fmt(s.u[i]);
        out << "," << fmt(s.c) << "\n";
    }
    return out.str();
}

std::string dataset_to_csv(const Dataset& ds, const Vector* c_dag) {
    std::ostringstream out;
    const auto n = ds.state_dim();
    const auto m = ds.input_dim();
    out << "t";
    for (Eigen::Index i = 1; i <= n; ++i)
        out << ",x_" << i;
    for (Eigen::Index i = 1; i <= m; ++i)
        out << ",u_" << i;
    out << ",c";
    for (Eigen::Index i = 1; i <= n; ++i)
        out << ",x_next_" << i;
    if (c_dag)
        out << ",c_dagger";
    out << "\n";
    for (Eigen::Index t = 0; t < ds.size(); ++t) {
        const auto& tr = ds.transitions[static_cast<std::size_t>(t)];
        out << t;
        for (Eigen::Index i = 0; i < n; ++i)
            out << "," << fmt(tr.x[i]);
        for (Eigen::Index i = 0; i < m; ++i)
            out << "," << fmt(tr.u[i]);
        out << "," << fmt(tr.c);
        for (Eigen::Index i = 0; i < n; ++i)
            out << "," << fmt(tr.x_next[i]);
        if (c_dag)
            out << "," << fmt((*c_dag)[t]);
        out << "\n";
    }
    return out.str();
}

Json dataset_meta_json(const Dataset& ds) {
    return Json{{"seed", ds.seed},
                {"generating_policy", ds.generating_policy},
                {"T", ds.size()},
                {"diverged", ds.diverged}};
}

std::string adp_trace_to_csv(const AdpTrace& trace, int stride) {
    if (stride < 1)
        stride = 1;
    std::ostringstream out;
    out << "outer_z,inner_i,t,c,c_dagger\n";
    std::size_t t = 0;
    int z = 0;
    long inner_left = trace.inner_counts.empty() ? -1 : trace.inner_counts[0];
    long i = 0;
    for (t = 0; t < trace.cost_log.size(); ++t) {
        while (inner_left == 0 && z + 1 < static_cast<int>(trace.inner_counts.size())) {
            ++z;
            i = 0;
            inner_left = trace.inner_counts[static_cast<std::size_t>(z)];
        }
        if (t % static_cast<std::size_t>(stride) == 0) {
            out << z << "," << i << "," << t << "," << fmt(trace.cost_log[t].first) << ","
                << fmt(trace.cost_log[t].second) << "\n";
        }
        ++i;
        --inner_left;
    }
    return out.str();
}

Json adp_policies_json(const AdpTrace& trace) {
    Json j;
    j["stop_reason"] = stop_reason_name(trace.stop_reason);
    j["updates"] = trace.updates();
    j["resets"] = trace.resets;
    j["total_steps"] = trace.total_steps;
    j["inner_counts"] = trace.inner_counts;
    Json seq = Json::array();
    for (const auto& pi : trace.policy_sequence)
        seq.push_back(policy_to_json(pi));
    j["policies"] = std::move(seq);
    return j;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw SolveError("cannot open for writing: " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw SolveError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_json_file(const std::string& path, const Json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace lqgd
