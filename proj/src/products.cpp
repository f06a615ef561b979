#include "nrcc/products.hpp"

#include <algorithm>
#include <cmath>

namespace nrcc {

namespace {

std::vector<double> to_pu(const std::vector<double>& kw, double base) {
  std::vector<double> out(kw.size());
  std::transform(kw.begin(), kw.end(), out.begin(), [base](double v) { return v / base; });
  return out;
}

double shed_price(const Case& c, double weight) {
  return c.budget.voll * c.budget.shed_annualization * weight;
}

BlockOptions block_opts(const Case& c, std::string tag, bool allow_shed) {
  return BlockOptions{std::move(tag), allow_shed, c.thermal_sides};
}

void check_tier_inputs(const Case& c, const Model1Result& m1) {
  if (!m1.plan.u.empty() && m1.plan.u.size() != c.network.candidates.size())
    throw BuildError("baseline plan does not match the candidate list");
  if (m1.baseline_kw.size() != c.scenarios.scenarios.size())
    throw BuildError("baseline does not cover every scenario");
  for (const auto& b : m1.baseline_kw)
    if (b.size() != static_cast<std::size_t>(c.scenarios.grid.horizon()))
      throw BuildError("baseline does not cover the horizon");
}

std::vector<WindowEnvelope> envelopes(const Case& c, const std::vector<Var>& rd, const std::vector<Var>& ru,
                                      const Solution& sol) {
  std::vector<WindowEnvelope> out;
  const double base = c.network.base_kva;
  for (std::size_t w = 0; w < c.windows.size(); ++w) {
    WindowEnvelope e;
    e.id = c.windows[w].id;
    e.r_down = std::max(0.0, sol.value(rd[w])) * base;
    e.r_up = std::max(0.0, sol.value(ru[w])) * base;
    e.e_down = c.windows[w].theta_down * e.r_down;
    e.e_up = c.windows[w].theta_up * e.r_up;
    out.push_back(e);
  }
  return out;
}

}  // namespace

bool call_admissible(const CallSetParams& params, const CallTrajectory& call, double dt_h, int steps_per_day,
                     double tol) {
  if (call.xi_down.size() != call.steps.size() || call.xi_up.size() != call.steps.size()) return false;
  const double rd_hi = params.r_down + tol * std::max(1.0, params.r_down);
  const double ru_hi = params.r_up + tol * std::max(1.0, params.r_up);
  const double ed_hi = params.e_down + tol * std::max(1.0, params.e_down);
  const double eu_hi = params.e_up + tol * std::max(1.0, params.e_up);
  double ed = 0.0, eu = 0.0;
  int occurrence = -1;
  for (std::size_t i = 0; i < call.steps.size(); ++i) {
    const int occ = steps_per_day > 0 ? call.steps[i] / steps_per_day : 0;
    if (occ != occurrence) {
      occurrence = occ;
      ed = eu = 0.0;
    }
    const double d = call.xi_down[i], u = call.xi_up[i];
    if (!(d >= -tol) || !(u >= -tol) || d > rd_hi || u > ru_hi) return false;
    ed += d * dt_h;
    eu += u * dt_h;
    if (ed > ed_hi || eu > eu_hi) return false;
  }
  return true;
}

std::string_view to_string(PatternKind k) {
  switch (k) {
    case PatternKind::kBase: return "base";
    case PatternKind::kSust: return "sust";
    case PatternKind::kStart: return "start";
    case PatternKind::kEnd: return "end";
  }
  return "base";
}

std::vector<double> pattern_shape(PatternKind kind, int H, double theta_h, double dt_h) {
  if (H < 1) throw BuildError("stress pattern needs a nonempty window");
  const double theta = std::clamp(theta_h, 0.0, H * dt_h);
  const int tau = std::min(H, static_cast<int>(std::floor(theta / dt_h + 1e-9)));
  std::vector<double> s(static_cast<std::size_t>(H), 0.0);
  switch (kind) {
    case PatternKind::kBase: break;
    case PatternKind::kSust: std::fill(s.begin(), s.end(), theta / (H * dt_h)); break;
    case PatternKind::kStart: std::fill(s.begin(), s.begin() + tau, 1.0); break;
    case PatternKind::kEnd: std::fill(s.end() - tau, s.end(), 1.0); break;
  }
  return s;
}

std::string StressPattern::name() const {
  return std::string(to_string(down)) + "/" + std::string(to_string(up));
}

bool StressPattern::is_base() const {
  auto zero = [](double v) { return v == 0.0; };
  return std::all_of(unit_down.begin(), unit_down.end(), zero) && std::all_of(unit_up.begin(), unit_up.end(), zero);
}

PatternSet gen_stress_patterns(const ServiceWindowSpec& window, double dt_h) {
  const int H = static_cast<int>(window.service_steps.size());
  if (H < 1) throw BuildError("window '" + window.id + "': empty service window");
  constexpr PatternKind kAll[] = {PatternKind::kBase, PatternKind::kSust, PatternKind::kStart, PatternKind::kEnd};
  PatternSet set;
  const double span = H * dt_h;
  set.clamped = (window.down_enabled() && window.theta_down > span) || (window.up_enabled() && window.theta_up > span);
  const int nd = window.down_enabled() ? 4 : 1;
  const int nu = window.up_enabled() ? 4 : 1;
  for (int i = 0; i < nd; ++i) {
    for (int j = 0; j < nu; ++j) {
      StressPattern p;
      p.down = kAll[i];
      p.up = kAll[j];
      p.unit_down = pattern_shape(p.down, H, window.theta_down, dt_h);
      p.unit_up = pattern_shape(p.up, H, window.theta_up, dt_h);
      const bool dup = std::any_of(set.patterns.begin(), set.patterns.end(), [&](const StressPattern& q) {
        return q.unit_down == p.unit_down && q.unit_up == p.unit_up;
      });
      if (!dup) set.patterns.push_back(std::move(p));
    }
  }
  return set;
}

CallTrajectory realize(const StressPattern& p, const ServiceWindowSpec& window, const TimeGrid& grid, double r_down_kw,
                       double r_up_kw) {
  CallTrajectory call;
  for (int d = 0; d < grid.days; ++d)
    for (std::size_t i = 0; i < window.service_steps.size(); ++i) {
      call.steps.push_back(d * grid.steps_per_day + window.service_steps[i]);
      call.xi_down.push_back(p.unit_down[i] * r_down_kw);
      call.xi_up.push_back(p.unit_up[i] * r_up_kw);
    }
  return call;
}

CallExpr realize(const StressPattern& p, const ServiceWindowSpec& window, const TimeGrid& grid, const LinExpr& r_down,
                 const LinExpr& r_up) {
  CallExpr call;
  for (int d = 0; d < grid.days; ++d)
    for (std::size_t i = 0; i < window.service_steps.size(); ++i) {
      call.steps.push_back(d * grid.steps_per_day + window.service_steps[i]);
      call.xi_down.push_back(p.unit_down[i] * r_down);
      call.xi_up.push_back(p.unit_up[i] * r_up);
    }
  return call;
}

double budget_tolerance(double gamma) { return 1e-6 * std::max(1.0, std::abs(gamma)); }

double floor_bound(double value) { return std::max(0.0, value - 1e-10 * std::max(1.0, std::abs(value))); }

Model1Build build_model1(const Case& c, const std::vector<Scenario>& scenarios) {
  Model1Build b{MilpModel("model1"), {}, {}};
  b.model.options = c.solver;
  b.inv = add_investments(b.model, c.network);
  LinExpr obj = investment_cost(c.network, b.inv);
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    b.blocks.push_back(build_operational_block(b.model, c.network, c.scenarios.grid, scenarios[s], static_cast<int>(s),
                                               b.inv, block_opts(c, "s" + std::to_string(s), true)));
    obj += shed_price(c, scenarios[s].weight) * b.blocks.back().shed_energy_kwh();
  }
  b.model.set_objective(ObjSense::kMinimize, obj);
  return b;
}

Model1Result solve_model1(const Case& c) {
  auto b = build_model1(c, c.scenarios.scenarios);
  const Solution sol = solve(b.model);
  if (!sol.ok() || !sol.has_values())
    throw StageError(sol.status, "model 1 failed: " + std::string(to_string(sol.status)) +
                                     (sol.diagnostic.empty() ? "" : " (" + sol.diagnostic + ")"));
  Model1Result r;
  r.status = sol.status;
  r.gamma0 = sol.objective;
  r.plan = extract_plan(c.network, b.inv, sol);
  r.investment_cost = investment_cost(c.network, r.plan);
  const double base = c.network.base_kva;
  for (std::size_t s = 0; s < b.blocks.size(); ++s) {
    r.expected_shed_kwh += c.scenarios.scenarios[s].weight * sol.value(b.blocks[s].shed_energy_kwh());
    std::vector<double> prof;
    for (Var p : b.blocks[s].p_sub) prof.push_back(sol.value(p) * base);
    r.baseline_kw.push_back(std::move(prof));
  }
  return r;
}

ExpectedPeaks expected_peaks(const Case& c) {
  auto b = build_model1(c, {expected_scenario(c.scenarios)});
  const Solution sol = solve(b.model);
  if (!sol.ok() || !sol.has_values())
    throw StageError(sol.status, "expected-scenario planning failed: " + std::string(to_string(sol.status)));
  ExpectedPeaks pk;
  const double base = c.network.base_kva;
  pk.d = -kInf;
  for (Var p : b.blocks.front().p_sub) {
    const double v = sol.value(p) * base;
    pk.d = std::max(pk.d, v);
    pk.r = std::max(pk.r, -v);
  }
  return pk;
}

Model2Build build_model2(const Case& c, const Model1Result& m1, const ExpectedPeaks& peaks, double delta_gamma,
                         Model2Stage stage, const Model2Bounds& bounds) {
  check_tier_inputs(c, m1);
  const double base = c.network.base_kva;
  const double W = c.budget.W;
  Model2Build b{MilpModel("model2"), {}, {}, {}, {}, {}, {}};
  b.model.options = c.solver;
  b.inv = add_investments(b.model, c.network);
  b.lambda_d = b.model.add_var(0.0, kInf, "lambda_d");
  b.lambda_r = b.model.add_var(0.0, kInf, "lambda_r");
  b.z_d = b.model.add_var(0.0, kInf, "excess_d");
  b.z_r = b.model.add_var(0.0, kInf, "excess_r");
  b.model.add_ge(LinExpr(b.z_d) - LinExpr(b.lambda_d), -peaks.d / base, "excess_d_def");
  b.model.add_ge(LinExpr(b.z_r) - LinExpr(b.lambda_r), -peaks.r / base, "excess_r_def");

  LinExpr cost = investment_cost(c.network, b.inv);
  const auto all = complement_steps({}, c.scenarios.grid);
  for (std::size_t s = 0; s < c.scenarios.scenarios.size(); ++s) {
    const auto& sc = c.scenarios.scenarios[s];
    b.blocks.push_back(build_operational_block(b.model, c.network, c.scenarios.grid, sc, static_cast<int>(s), b.inv,
                                               block_opts(c, "s" + std::to_string(s), true)));
    cost += shed_price(c, sc.weight) * b.blocks.back().shed_energy_kwh();
    apply_caps(b.model, b.blocks.back(), LinExpr(b.lambda_d), LinExpr(b.lambda_r), all);
  }
  const double gamma = m1.gamma0 + delta_gamma;
  b.model.add_le(cost, gamma + budget_tolerance(gamma), "budget");

  const LinExpr primary = W * LinExpr(b.z_d) + (1.0 - W) * LinExpr(b.z_r);
  switch (stage) {
    case Model2Stage::kPrimary: b.model.set_objective(ObjSense::kMinimize, primary); break;
    case Model2Stage::kLambdaD:
      b.model.add_le(primary, bounds.primary, "primary_fixed");
      b.model.set_objective(ObjSense::kMinimize, LinExpr(b.lambda_d));
      break;
    case Model2Stage::kLambdaR:
      b.model.add_le(primary, bounds.primary, "primary_fixed");
      b.model.add_le(LinExpr(b.lambda_d), bounds.lambda_d, "lambda_d_fixed");
      b.model.set_objective(ObjSense::kMinimize, LinExpr(b.lambda_r));
      break;
  }
  return b;
}

P0Result solve_model2(const Case& c, const Model1Result& m1, const ExpectedPeaks& peaks, double delta_gamma) {
  const double base = c.network.base_kva;
  const auto relax = [](double v) { return v + 1e-7 * std::max(1.0, std::abs(v)); };
  P0Result r;
  auto b1 = build_model2(c, m1, peaks, delta_gamma, Model2Stage::kPrimary);
  const Solution s1 = solve(b1.model);
  if (!s1.ok() || !s1.has_values()) {
    r.status = s1.status;
    return r;
  }
  r.objective = s1.objective * base;
  Model2Bounds bounds{relax(s1.objective), kInf};
  auto b2 = build_model2(c, m1, peaks, delta_gamma, Model2Stage::kLambdaD, bounds);
  const Solution s2 = solve(b2.model);
  if (!s2.ok() || !s2.has_values()) {
    r.status = s2.status;
    return r;
  }
  bounds.lambda_d = relax(s2.objective);
  auto b3 = build_model2(c, m1, peaks, delta_gamma, Model2Stage::kLambdaR, bounds);
  const Solution s3 = solve(b3.model);
  if (!s3.ok() || !s3.has_values()) {
    r.status = s3.status;
    return r;
  }
  r.status = s3.status;
  r.lambda_d = s2.value(b2.lambda_d) * base;
  r.lambda_r = s3.value(b3.lambda_r) * base;
  r.plan = extract_plan(c.network, b3.inv, s3);
  return r;
}

Model3Build build_model3(const Case& c, const Model1Result& m1, const P0Result& p0, double delta_gamma) {
  check_tier_inputs(c, m1);
  if (c.windows.empty()) throw BuildError("model 3 needs at least one service window");
  const double base = c.network.base_kva;
  const auto& grid = c.scenarios.grid;
  Model3Build b{MilpModel("model3"), {}, {}, {}, {}, {}};
  b.model.options = c.solver;
  b.inv = add_investments(b.model, c.network);
  LinExpr cost = investment_cost(c.network, b.inv);
  LinExpr obj;
  const LinExpr lam_d(p0.lambda_d / base), lam_r(p0.lambda_r / base);
  const double window_share = 1.0 / static_cast<double>(c.windows.size());

  for (std::size_t w = 0; w < c.windows.size(); ++w) {
    const auto& win = c.windows[w];
    const double cap = win.r_cap / base;
    const std::string wn = "w" + std::to_string(w);
    b.r_down.push_back(b.model.add_var(0.0, win.down_enabled() ? cap : 0.0, wn + ".r_down"));
    b.r_up.push_back(b.model.add_var(0.0, win.up_enabled() ? cap : 0.0, wn + ".r_up"));
    obj.add(b.r_down.back(), win.rho * win.beta_down).add(b.r_up.back(), win.rho * win.beta_up);
    b.patterns.push_back(gen_stress_patterns(win, grid.dt_h));

    const auto service = expand_steps(win.service_steps, grid);
    const auto outside = complement_steps({win.service_steps}, grid);
    for (std::size_t s = 0; s < c.scenarios.scenarios.size(); ++s) {
      const auto& sc = c.scenarios.scenarios[s];
      const auto baseline = to_pu(m1.baseline_kw[s], base);
      for (std::size_t m = 0; m < b.patterns[w].patterns.size(); ++m) {
        const auto& pat = b.patterns[w].patterns[m];
        const std::string tag = wn + ".s" + std::to_string(s) + ".m" + std::to_string(m);
        auto blk = build_operational_block(b.model, c.network, grid, sc, static_cast<int>(s), b.inv,
                                           block_opts(c, tag, pat.is_base()));
        apply_service_coupling(b.model, blk,
                               baseline, realize(pat, win, grid, LinExpr(b.r_down.back()), LinExpr(b.r_up.back())),
                               service);
        apply_caps(b.model, blk, lam_d, lam_r, outside);
        if (pat.is_base()) cost += (window_share * shed_price(c, sc.weight)) * blk.shed_energy_kwh();
        b.blocks.push_back({static_cast<int>(w), static_cast<int>(s), static_cast<int>(m), std::move(blk)});
      }
    }
  }
  const double gamma = m1.gamma0 + delta_gamma;
  b.model.add_le(cost, gamma + budget_tolerance(gamma), "budget");
  b.model.set_objective(ObjSense::kMaximize, obj);
  return b;
}

P1Result solve_model3(const Case& c, const Model1Result& m1, const P0Result& p0, double delta_gamma) {
  P1Result r;
  r.lambda_d_used = p0.lambda_d;
  r.lambda_r_used = p0.lambda_r;
  auto b = build_model3(c, m1, p0, delta_gamma);
  for (const auto& ps : b.patterns) r.clamped = r.clamped || ps.clamped;
  const Solution sol = solve(b.model);
  r.status = sol.status;
  if (!sol.ok() || !sol.has_values()) return r;
  r.objective = sol.objective * c.network.base_kva;
  r.windows = envelopes(c, b.r_down, b.r_up, sol);
  r.plan = extract_plan(c.network, b.inv, sol);
  return r;
}

Model4Build build_model4(const Case& c, const Model1Result& m1, const P0Result& p0, const P1Result& p1,
                         double delta_gamma, Variant variant) {
  check_tier_inputs(c, m1);
  if (c.windows.empty()) throw BuildError("model 4 needs at least one service window");
  if (p1.windows.size() != c.windows.size()) throw BuildError("capacity floors do not match the window list");
  const double base = c.network.base_kva;
  const auto& grid = c.scenarios.grid;
  Model4Build b{MilpModel("model4"), {}, {}, {}, {}, {}, {}, {}, {}};
  b.model.options = c.solver;
  b.inv = add_investments(b.model, c.network);
  b.eta = b.model.add_var(0.0, kInf, "eta");
  LinExpr cost = investment_cost(c.network, b.inv);
  const LinExpr lam_d(p0.lambda_d / base), lam_r(p0.lambda_r / base);
  const double window_share = 1.0 / static_cast<double>(c.windows.size());

  for (std::size_t w = 0; w < c.windows.size(); ++w) {
    const auto& win = c.windows[w];
    const auto& fl = p1.windows[w];
    if (fl.id != win.id) throw BuildError("capacity floor for window '" + fl.id + "' does not match '" + win.id + "'");
    const double cap = win.r_cap / base;
    const std::string wn = "w" + std::to_string(w);
    auto rating = [&](bool enabled, double floor_kw, const std::string& name) {
      if (!enabled) return b.model.add_var(0.0, 0.0, name);
      const double lo = floor_bound(floor_kw / base);
      return b.model.add_var(std::min(lo, cap), cap, name);
    };
    b.r_down.push_back(rating(win.down_enabled(), fl.r_down, wn + ".r_down"));
    b.r_up.push_back(rating(win.up_enabled(), fl.r_up, wn + ".r_up"));
    b.e_down.push_back(b.model.add_var(win.down_enabled() ? floor_bound(fl.e_down / base) : 0.0, kInf, wn + ".e_down"));
    b.e_up.push_back(b.model.add_var(win.up_enabled() ? floor_bound(fl.e_up / base) : 0.0, kInf, wn + ".e_up"));
    b.model.add_eq(LinExpr(b.e_down.back()) - win.theta_down * LinExpr(b.r_down.back()), 0.0, wn + ".e_down_def");
    b.model.add_eq(LinExpr(b.e_up.back()) - win.theta_up * LinExpr(b.r_up.back()), 0.0, wn + ".e_up_def");
    b.patterns.push_back(gen_stress_patterns(win, grid.dt_h));

    const auto service = expand_steps(win.service_steps, grid);
    for (std::size_t s = 0; s < c.scenarios.scenarios.size(); ++s) {
      const auto& sc = c.scenarios.scenarios[s];
      const auto baseline = to_pu(m1.baseline_kw[s], base);
      for (std::size_t m = 0; m < b.patterns[w].patterns.size(); ++m) {
        const auto& pat = b.patterns[w].patterns[m];
        const std::string tag = wn + ".s" + std::to_string(s) + ".m" + std::to_string(m);
        auto blk = build_operational_block(b.model, c.network, grid, sc, static_cast<int>(s), b.inv,
                                           block_opts(c, tag, pat.is_base()));
        apply_service_coupling(b.model, blk,
                               baseline, realize(pat, win, grid, LinExpr(b.r_down.back()), LinExpr(b.r_up.back())),
                               service);
        apply_governance(b.model, blk, variant, baseline, lam_d, lam_r, b.eta, win, grid);
        if (pat.is_base()) cost += (window_share * shed_price(c, sc.weight)) * blk.shed_energy_kwh();
        b.blocks.push_back({static_cast<int>(w), static_cast<int>(s), static_cast<int>(m), std::move(blk)});
      }
    }
  }
  const double gamma = m1.gamma0 + delta_gamma;
  b.model.add_le(cost, gamma + budget_tolerance(gamma), "budget");
  b.model.set_objective(ObjSense::kMinimize, LinExpr(b.eta));
  return b;
}

P2Result solve_model4(const Case& c, const Model1Result& m1, const P0Result& p0, const P1Result& p1,
                      double delta_gamma, Variant variant) {
  P2Result r;
  r.variant = variant;
  auto b = build_model4(c, m1, p0, p1, delta_gamma, variant);
  const Solution sol = solve(b.model);
  r.status = sol.status;
  if (!sol.ok() || !sol.has_values()) return r;
  const double base = c.network.base_kva;
  r.eta = std::max(0.0, sol.value(b.eta)) * base;
  r.plan = extract_plan(c.network, b.inv, sol);
  r.windows = envelopes(c, b.r_down, b.r_up, sol);
  for (std::size_t w = 0; w < c.windows.size(); ++w) {
    r.windows[w].e_down = std::max(0.0, sol.value(b.e_down[w])) * base;
    r.windows[w].e_up = std::max(0.0, sol.value(b.e_up[w])) * base;
  }

  // Profile of window 0, scenario 0 under the sustained call (or the first
  // non-base pattern when the sustained shape collapsed).
  const auto& pats = b.patterns.front().patterns;
  int pick = -1;
  for (std::size_t m = 0; m < pats.size() && pick < 0; ++m)
    if (pats[m].down == PatternKind::kSust && pats[m].up == PatternKind::kBase && !pats[m].is_base())
      pick = static_cast<int>(m);
  for (std::size_t m = 0; m < pats.size() && pick < 0; ++m)
    if (!pats[m].is_base()) pick = static_cast<int>(m);
  if (pick < 0) pick = 0;
  for (const auto& sb : b.blocks)
    if (sb.window == 0 && sb.scenario == 0 && sb.pattern == pick)
      for (Var p : sb.block.p_sub) r.profile_kw.push_back(sol.value(p) * base);
  return r;
}

}  // namespace nrcc
