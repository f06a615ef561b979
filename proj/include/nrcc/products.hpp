#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nrcc/milp.hpp"
#include "nrcc/netmodel.hpp"
#include "nrcc/opfeas.hpp"

namespace nrcc {

/// A stage whose solve did not produce a usable optimum.
class StageError : public std::runtime_error {
 public:
  StageError(SolveStatus status, const std::string& what) : std::runtime_error(what), status(status) {}
  SolveStatus status;
};

/// Ratings in kW and energy budgets in kWh.
struct CallSetParams {
  double r_down = 0.0;
  double r_up = 0.0;
  double e_down = 0.0;
  double e_up = 0.0;
};

/// Checks bounds and per-occurrence energy budgets. With `steps_per_day` > 0,
/// each day's part of the call is one occurrence.
bool call_admissible(const CallSetParams& params, const CallTrajectory& call, double dt_h, int steps_per_day = 0,
                     double tol = 1e-9);

enum class PatternKind { kBase, kSust, kStart, kEnd };
std::string_view to_string(PatternKind k);

/// Per-unit-rating trajectory of one pattern over H window steps.
std::vector<double> pattern_shape(PatternKind kind, int H, double theta_h, double dt_h);

/// Pattern pair with unit shapes; a realized call is shape * rating.
struct StressPattern {
  PatternKind down = PatternKind::kBase;
  PatternKind up = PatternKind::kBase;
  std::vector<double> unit_down;  // H entries
  std::vector<double> unit_up;
  std::string name() const;
  bool is_base() const;
};

struct PatternSet {
  std::vector<StressPattern> patterns;
  bool clamped = false;  // theta exceeded the window length in some direction
};

/// Deduplicated pattern pairs in base, sust, start, end order. A disabled
/// direction contributes only its base pattern. Throws BuildError for an
/// empty window.
PatternSet gen_stress_patterns(const ServiceWindowSpec& window, double dt_h);

/// Realizes a pattern on every day of the horizon with ratings in kW.
CallTrajectory realize(const StressPattern& p, const ServiceWindowSpec& window, const TimeGrid& grid, double r_down_kw,
                       double r_up_kw);
/// Realizes a pattern with ratings given as expressions in pu.
CallExpr realize(const StressPattern& p, const ServiceWindowSpec& window, const TimeGrid& grid, const LinExpr& r_down,
                 const LinExpr& r_up);

struct Model1Result {
  SolveStatus status = SolveStatus::kError;
  double gamma0 = 0.0;  // $/yr
  double investment_cost = 0.0;
  double expected_shed_kwh = 0.0;
  InvestmentPlan plan;
  std::vector<std::vector<double>> baseline_kw;  // [scenario][t]
};

struct ExpectedPeaks {
  double d = 0.0;  // kW
  double r = 0.0;
};

struct P0Result {
  SolveStatus status = SolveStatus::kError;
  double lambda_d = 0.0;  // kW
  double lambda_r = 0.0;
  double objective = 0.0;  // kW, primary objective
  InvestmentPlan plan;
};

struct WindowEnvelope {
  std::string id;
  double r_down = 0.0;  // kW
  double r_up = 0.0;
  double e_down = 0.0;  // kWh
  double e_up = 0.0;
};

struct P1Result {
  SolveStatus status = SolveStatus::kError;
  double objective = 0.0;  // weighted kW
  double lambda_d_used = 0.0;
  double lambda_r_used = 0.0;
  std::vector<WindowEnvelope> windows;
  InvestmentPlan plan;
  bool clamped = false;
};

struct P2Result {
  Variant variant = Variant::kA;
  SolveStatus status = SolveStatus::kError;
  std::optional<double> eta;  // kW, present when solved
  InvestmentPlan plan;
  std::vector<WindowEnvelope> windows;  // ratings chosen subject to the floors
  std::vector<double> profile_kw;  // p_sub of the first sustained-call block
};

struct TierResult {
  int k = 0;
  double delta_gamma = 0.0;
  double gamma = 0.0;
  P0Result p0;
  std::optional<P1Result> p1;  // absent when the case has no windows
  std::array<std::optional<P2Result>, 3> p2;
};

/// Model inputs shared by the stage builders.
struct Model1Build {
  MilpModel model;
  InvestmentVars inv;
  std::vector<OperationalBlock> blocks;
};

struct Model2Build {
  MilpModel model;
  InvestmentVars inv;
  std::vector<OperationalBlock> blocks;
  Var lambda_d, lambda_r, z_d, z_r;
};

/// Lexicographic stage of Model 2: the primary objective, then the tight
/// direct cap, then the tight reverse cap.
enum class Model2Stage { kPrimary, kLambdaD, kLambdaR };

struct Model2Bounds {
  double primary = kInf;  // pu
  double lambda_d = kInf;  // pu
};

struct ScreeningBlock {
  int window = 0;
  int scenario = 0;
  int pattern = 0;
  OperationalBlock block;
};

struct Model3Build {
  MilpModel model;
  InvestmentVars inv;
  std::vector<Var> r_down, r_up;  // per window, pu
  std::vector<PatternSet> patterns;  // per window
  std::vector<ScreeningBlock> blocks;
};

struct Model4Build {
  MilpModel model;
  InvestmentVars inv;
  std::vector<Var> r_down, r_up, e_down, e_up;  // pu, pu*h
  Var eta;
  std::vector<PatternSet> patterns;
  std::vector<ScreeningBlock> blocks;
};

Model1Build build_model1(const Case& c, const std::vector<Scenario>& scenarios);
Model1Result solve_model1(const Case& c);
/// Model 1 on the expected scenario; peaks of its substation netload.
ExpectedPeaks expected_peaks(const Case& c);

Model2Build build_model2(const Case& c, const Model1Result& m1, const ExpectedPeaks& peaks, double delta_gamma,
                         Model2Stage stage, const Model2Bounds& bounds = {});
P0Result solve_model2(const Case& c, const Model1Result& m1, const ExpectedPeaks& peaks, double delta_gamma);

Model3Build build_model3(const Case& c, const Model1Result& m1, const P0Result& p0, double delta_gamma);
P1Result solve_model3(const Case& c, const Model1Result& m1, const P0Result& p0, double delta_gamma);

Model4Build build_model4(const Case& c, const Model1Result& m1, const P0Result& p0, const P1Result& p1,
                         double delta_gamma, Variant variant);
P2Result solve_model4(const Case& c, const Model1Result& m1, const P0Result& p0, const P1Result& p1,
                      double delta_gamma, Variant variant);

/// Budget slack added to Gamma to absorb solver round-off.
double budget_tolerance(double gamma);
/// Lower bound used for an optimized floor value, relaxed by 1e-10 relative
/// so that re-solves stay feasible under solver round-off.
double floor_bound(double value);

}  // namespace nrcc
