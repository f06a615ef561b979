#include "nrcc/milp.hpp"

#ifdef NRCC_HAVE_HIGHS
#include <Highs.h>
#endif

namespace nrcc {

#ifdef NRCC_HAVE_HIGHS

bool has_inprocess_backend() { return true; }

namespace detail {

namespace {

void set_common_options(Highs& h, const SolverOptions& opts) {
  h.setOptionValue("output_flag", false);
  h.setOptionValue("time_limit", opts.time_limit_s);
  h.setOptionValue("mip_rel_gap", opts.mip_gap);
  h.setOptionValue("threads", std::max(1, opts.threads));
  h.setOptionValue("random_seed", 0);
  h.setOptionValue("primal_feasibility_tolerance", 1e-9);
  h.setOptionValue("dual_feasibility_tolerance", 1e-9);
  h.setOptionValue("mip_feasibility_tolerance", 1e-9);
}

}  // namespace

Solution solve_inprocess(const MilpModel& model) {
  Solution sol;
  const auto a = model.constraint_matrix();

  HighsLp lp;
  lp.num_col_ = static_cast<HighsInt>(model.num_vars());
  lp.num_row_ = static_cast<HighsInt>(model.num_rows());
  lp.sense_ = model.objective_sense() == nrcc::ObjSense::kMaximize ? ::ObjSense::kMaximize
                                                                   : ::ObjSense::kMinimize;
  lp.offset_ = model.objective_offset();
  lp.col_cost_ = model.objective();
  bool any_integer = false;
  for (const auto& c : model.columns()) {
    lp.col_lower_.push_back(c.lo == -kInf ? -kHighsInf : c.lo);
    lp.col_upper_.push_back(c.hi == kInf ? kHighsInf : c.hi);
    lp.integrality_.push_back(c.integer ? HighsVarType::kInteger : HighsVarType::kContinuous);
    any_integer = any_integer || c.integer;
  }
  if (!any_integer) lp.integrality_.clear();
  for (const auto& r : model.rows()) {
    lp.row_lower_.push_back(r.sense == Sense::kLe ? -kHighsInf : r.rhs);
    lp.row_upper_.push_back(r.sense == Sense::kGe ? kHighsInf : r.rhs);
  }
  lp.a_matrix_.format_ = MatrixFormat::kColwise;
  lp.a_matrix_.num_col_ = lp.num_col_;
  lp.a_matrix_.num_row_ = lp.num_row_;
  lp.a_matrix_.start_.assign(a.outerIndexPtr(), a.outerIndexPtr() + a.outerSize() + 1);
  lp.a_matrix_.index_.assign(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros());
  lp.a_matrix_.value_.assign(a.valuePtr(), a.valuePtr() + a.nonZeros());

  Highs h;
  set_common_options(h, with_env_override(model.options));
  if (h.passModel(std::move(lp)) == HighsStatus::kError) {
    sol.status = SolveStatus::kError;
    sol.diagnostic = "HiGHS rejected the model";
    return sol;
  }
  if (h.run() == HighsStatus::kError) {
    sol.status = SolveStatus::kError;
    sol.diagnostic = "HiGHS run failed: " + h.modelStatusToString(h.getModelStatus());
    return sol;
  }

  const auto& info = h.getInfo();
  const bool has_primal = info.primal_solution_status == kSolutionStatusFeasible;
  switch (h.getModelStatus()) {
    case HighsModelStatus::kOptimal: sol.status = SolveStatus::kOptimal; break;
    case HighsModelStatus::kInfeasible: sol.status = SolveStatus::kInfeasible; break;
    case HighsModelStatus::kUnbounded:
    case HighsModelStatus::kUnboundedOrInfeasible:
      sol.status = SolveStatus::kUnbounded;
      break;
    case HighsModelStatus::kTimeLimit: sol.status = SolveStatus::kTimeLimit; break;
    case HighsModelStatus::kObjectiveBound:
    case HighsModelStatus::kObjectiveTarget:
    case HighsModelStatus::kIterationLimit:
    case HighsModelStatus::kSolutionLimit:
    case HighsModelStatus::kInterrupt:
      sol.status = has_primal ? SolveStatus::kFeasible : SolveStatus::kError;
      break;
    default: sol.status = SolveStatus::kError; break;
  }
  // An unbounded-or-infeasible LP verdict is resolved by re-solving without
  // presolve.
  if (h.getModelStatus() == HighsModelStatus::kUnboundedOrInfeasible) {
    h.setOptionValue("presolve", "off");
    h.run();
    if (h.getModelStatus() == HighsModelStatus::kInfeasible) sol.status = SolveStatus::kInfeasible;
  }
  sol.diagnostic = h.modelStatusToString(h.getModelStatus());
  if (has_primal && (sol.ok() || sol.status == SolveStatus::kTimeLimit)) {
    sol.values = h.getSolution().col_value;
    sol.objective = info.objective_function_value;
    sol.gap = any_integer ? info.mip_gap : 0.0;
    // Snap binaries so downstream code sees clean 0/1 decisions.
    for (std::size_t j = 0; j < model.num_vars(); ++j)
      if (model.columns()[j].integer) sol.values[j] = std::round(sol.values[j]);
  }
  return sol;
}

}  // namespace detail

#else

bool has_inprocess_backend() { return false; }

namespace detail {
Solution solve_inprocess(const MilpModel&) {
  Solution sol;
  sol.status = SolveStatus::kError;
  sol.diagnostic = "solver unavailable: built without HiGHS";
  return sol;
}
}  // namespace detail

#endif

}  // namespace nrcc
