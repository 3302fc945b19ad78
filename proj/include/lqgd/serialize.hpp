#pragma once

#include <string>

#include <json.hpp>

#include "lqgd/adp.hpp"
#include "lqgd/attack.hpp"
#include "lqgd/batch.hpp"
#include "lqgd/bounds.hpp"
#include "lqgd/lqg.hpp"
#include "lqgd/types.hpp"

namespace lqgd {

using Json = nlohmann::json;

// Matrices serialize as row-major nested arrays.
Json matrix_to_json(const Matrix& M);
Json vector_to_json(const Vector& v);
Matrix matrix_from_json(const Json& j, const std::string& what);
Vector vector_from_json(const Json& j, const std::string& what);

Json policy_to_json(const Policy& pi);
Json value_to_json(const ValueQuad& v);
Json bounds_to_json(const PerturbationBounds& b);
Json verify_report_to_json(const VerifyReport& r);
Json attack_solution_to_json(const AttackSolution& a);
Json feasibility_report_to_json(const FeasibilityReport& r);

// CSV: header "t,x_1..x_n,u_1..u_m,c", one row per step.
std::string trajectory_to_csv(const Trajectory& traj);
// CSV: header "t,x_1..,u_1..,c,x_next_1.."; a poisoned dataset appends and
// fills the c_dagger column.
std::string dataset_to_csv(const Dataset& ds, const Vector* c_dag = nullptr);
Json dataset_meta_json(const Dataset& ds);
// CSV: "outer_z,inner_i,t,c,c_dagger", sub-sampled by stride (>= 1).
std::string adp_trace_to_csv(const AdpTrace& trace, int stride = 1);
// Per-update policy list for convergence plots.
Json adp_policies_json(const AdpTrace& trace);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace lqgd
