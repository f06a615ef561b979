#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nrcc/milp.hpp"
#include "nrcc/netmodel.hpp"
#include "nrcc/products.hpp"

namespace nrcc {

struct VerifyOptions {
  int samples = 100;  // random calls per window, on top of the screening patterns
  std::uint64_t seed = 1;
  int jobs = 1;
  double tol_pu = 1e-6;
};

enum class SampleKind { kScreening, kBox, kVertex };

struct SampledCall {
  SampleKind kind = SampleKind::kBox;
  std::string label;
  CallTrajectory call;
};

struct WindowReport {
  int tier = 0;
  std::string window;
  std::uint64_t seed = 0;
  int n = 0;  // calls checked
  int violations = 0;
  double worst_residual_kw = 0.0;  // infinite when some check was infeasible
  int screening_n = 0;
  int screening_violations = 0;
  int random_n = 0;
  int random_violations = 0;
  int solver_failures = 0;
  double violation_rate() const { return n > 0 ? static_cast<double>(violations) / n : 0.0; }
  double random_violation_rate() const { return random_n > 0 ? static_cast<double>(random_violations) / random_n : 0.0; }
};

/// Screening calls followed by `samples` random calls (alternating box and
/// vertex draws) for one window. Deterministic for a fixed seed.
std::vector<SampledCall> sample_calls(const ServiceWindowSpec& window, const WindowEnvelope& env, const TimeGrid& grid,
                                      int samples, std::uint64_t seed);

/// Minimum total slack (kW) needed to implement `call` under `scenario` with
/// the investments fixed and no load shedding.
struct ResidualCheck {
  SolveStatus status = SolveStatus::kError;
  double residual_kw = 0.0;
};
ResidualCheck call_residual(const Case& c, const Model1Result& m1, const P0Result& p0, const InvestmentPlan& plan,
                            int window, int scenario, const CallTrajectory& call);

std::vector<WindowReport> verify_envelope(const Case& c, const Model1Result& m1, const TierResult& tier,
                                          const VerifyOptions& opts);

/// Re-solve of one screening block with fixed investments and no shedding.
struct BlockCheck {
  int window = 0;
  int scenario = 0;
  std::string pattern;
  SolveStatus status = SolveStatus::kError;
  double max_residual_pu = 0.0;
};
std::vector<BlockCheck> resolve_screening_blocks(const Case& c, const Model1Result& m1, const P0Result& p0,
                                                 const P1Result& p1);

/// Exhaustive search over binary columns, one LP per assignment.
Solution enumerate_binaries(const MilpModel& model, int max_binaries = 20);

enum class OracleModel { kModel1 = 1, kModel2 = 2, kModel3 = 3, kModel4 = 4 };

/// Optimum of a model on `c` at tier `tier` obtained by enumeration. Upstream
/// inputs (baseline, caps, floors) come from the regular solve path.
Solution enumerate_oracle(const Case& c, OracleModel model, int tier, Variant variant = Variant::kA);

}  // namespace nrcc
