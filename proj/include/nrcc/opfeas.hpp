#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "nrcc/milp.hpp"
#include "nrcc/netmodel.hpp"

namespace nrcc {

/// Raised when a block references elements the network does not define.
class BuildError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// Shared investment decisions: one binary per candidate and a continuous
/// power rating (pu) for storage candidates.
struct InvestmentVars {
  std::vector<Var> u;
  std::vector<Var> v;  // invalid for non-storage candidates
};

/// Numeric investment decision, power in kW.
struct InvestmentPlan {
  std::vector<double> u;
  std::vector<double> v_kw;
  friend bool operator==(const InvestmentPlan&, const InvestmentPlan&) = default;
};

InvestmentVars add_investments(MilpModel& model, const NetworkModel& net, const std::string& prefix = "");
/// Annualized investment cost in $/yr.
LinExpr investment_cost(const NetworkModel& net, const InvestmentVars& inv);
double investment_cost(const NetworkModel& net, const InvestmentPlan& plan);
InvestmentPlan extract_plan(const NetworkModel& net, const InvestmentVars& inv, const Solution& sol);
/// Pins every investment variable to `plan`.
void fix_investments(MilpModel& model, const NetworkModel& net, const InvestmentVars& inv, const InvestmentPlan& plan);

struct BlockOptions {
  std::string tag;
  bool allow_shed = true;
  int thermal_sides = 16;
};

/// LinDistFlow operational schedule for one scenario over the whole horizon,
/// in per unit. Indexing is [step][element].
struct OperationalBlock {
  std::string tag;
  int scenario = -1;
  int steps = 0;
  double dt_h = 1.0;
  double base_kva = 1.0;
  std::vector<std::vector<Var>> v_sq;  // [t][bus]
  std::vector<std::vector<Var>> p_line;  // [t][line], flow from parent to child
  std::vector<std::vector<Var>> q_line;
  std::vector<std::vector<Var>> boost;  // [t][line], invalid without a regulator
  std::vector<std::vector<Var>> charge;  // [t][candidate], invalid for non-storage
  std::vector<std::vector<Var>> discharge;
  std::vector<std::vector<Var>> soc;  // end-of-step state of charge, pu*h
  std::vector<std::vector<Var>> shed;  // [t][bus], invalid when shedding is off or load <= 0
  std::vector<Var> p_sub;  // [t]

  /// Shed energy over the horizon in kWh.
  LinExpr shed_energy_kwh() const;
};

OperationalBlock build_operational_block(MilpModel& model, const NetworkModel& net, const TimeGrid& grid,
                                         const Scenario& scenario, int scenario_index, const InvestmentVars& inv,
                                         const BlockOptions& opts);

/// Boundary adjustment on the service steps of one window, as horizon step
/// indices. Values are kW.
struct CallTrajectory {
  std::vector<int> steps;
  std::vector<double> xi_down;
  std::vector<double> xi_up;
};

/// Same as CallTrajectory but each entry is an affine expression in pu, which
/// lets ratings enter as decision variables.
struct CallExpr {
  std::vector<int> steps;
  std::vector<LinExpr> xi_down;
  std::vector<LinExpr> xi_up;
};

CallExpr to_call_expr(const CallTrajectory& call, double base_kva);

/// p_sub = baseline - xi_down + xi_up on the call steps. `window_steps` are the
/// horizon steps of the service window; calls outside it throw BuildError.
void apply_service_coupling(MilpModel& model, const OperationalBlock& block, const std::vector<double>& baseline_pu,
                            const CallExpr& call, const std::vector<int>& window_steps);

/// -lambda_r <= p_sub <= lambda_d on `steps`.
void apply_caps(MilpModel& model, const OperationalBlock& block, const LinExpr& lambda_d, const LinExpr& lambda_r,
                const std::vector<int>& steps);

/// |p_sub - baseline| <= eta on `steps`.
void apply_deviation_bound(MilpModel& model, const OperationalBlock& block, const std::vector<double>& baseline_pu,
                           Var eta, const std::vector<int>& steps);

enum class Variant { kA, kB, kC };
std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view s);

/// Rebound governance for one window. Sets are day-local and replicated over
/// the horizon.
void apply_governance(MilpModel& model, const OperationalBlock& block, Variant variant,
                      const std::vector<double>& baseline_pu, const LinExpr& lambda_d, const LinExpr& lambda_r, Var eta,
                      const ServiceWindowSpec& window, const TimeGrid& grid);

/// Horizon steps of every day not in `excluded` (day-local indices).
std::vector<int> complement_steps(const std::vector<std::vector<int>>& excluded, const TimeGrid& grid);

}  // namespace nrcc
