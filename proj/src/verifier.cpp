#include "nrcc/verifier.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

namespace nrcc {

namespace {

std::vector<double> baseline_pu(const Model1Result& m1, int scenario, double base) {
  std::vector<double> out = m1.baseline_kw.at(static_cast<std::size_t>(scenario));
  for (double& v : out) v /= base;
  return out;
}

void fill_box(std::mt19937_64& rng, std::vector<double>& xi, std::size_t from, std::size_t n, double r, double e_cap,
              double dt) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xi[from + i] = r * U(rng);
    e += xi[from + i] * dt;
  }
  if (e > e_cap && e > 0.0)
    for (std::size_t i = 0; i < n; ++i) xi[from + i] *= e_cap / e;
}

void fill_vertex(std::mt19937_64& rng, std::vector<double>& xi, std::size_t from, std::size_t n, double r,
                 double e_cap, double dt) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  double left = e_cap;
  for (std::size_t i : order) {
    const double x = std::clamp(left / dt, 0.0, r);
    xi[from + i] = x;
    left -= x * dt;
  }
}

template <typename F>
void parallel_for(std::size_t n, int jobs, F&& f) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
}

}  // namespace

std::vector<SampledCall> sample_calls(const ServiceWindowSpec& window, const WindowEnvelope& env, const TimeGrid& grid,
                                      int samples, std::uint64_t seed) {
  std::vector<SampledCall> out;
  for (const auto& p : gen_stress_patterns(window, grid.dt_h).patterns)
    out.push_back({SampleKind::kScreening, p.name(), realize(p, window, grid, env.r_down, env.r_up)});

  std::mt19937_64 rng(seed);
  const std::size_t H = window.service_steps.size();
  const auto steps = expand_steps(window.service_steps, grid);
  for (int i = 0; i < samples; ++i) {
    SampledCall s;
    s.kind = i % 2 == 0 ? SampleKind::kBox : SampleKind::kVertex;
    s.label = (s.kind == SampleKind::kBox ? "box#" : "vertex#") + std::to_string(i);
    s.call.steps = steps;
    s.call.xi_down.assign(steps.size(), 0.0);
    s.call.xi_up.assign(steps.size(), 0.0);
    auto fill = s.kind == SampleKind::kBox ? fill_box : fill_vertex;
    for (int d = 0; d < grid.days; ++d) {
      const std::size_t from = static_cast<std::size_t>(d) * H;
      fill(rng, s.call.xi_down, from, H, env.r_down, env.e_down, grid.dt_h);
      fill(rng, s.call.xi_up, from, H, env.r_up, env.e_up, grid.dt_h);
    }
    out.push_back(std::move(s));
  }
  return out;
}

ResidualCheck call_residual(const Case& c, const Model1Result& m1, const P0Result& p0, const InvestmentPlan& plan,
                            int window, int scenario, const CallTrajectory& call) {
  const auto& grid = c.scenarios.grid;
  const auto& win = c.windows.at(static_cast<std::size_t>(window));
  const double base = c.network.base_kva;
  MilpModel m("verify");
  m.options = c.solver;
  const auto inv = add_investments(m, c.network);
  fix_investments(m, c.network, inv, plan);
  const auto blk = build_operational_block(m, c.network, grid, c.scenarios.scenarios.at(static_cast<std::size_t>(scenario)),
                                           scenario, inv, BlockOptions{"v", false, c.thermal_sides});
  const auto base_pu = baseline_pu(m1, scenario, base);
  const auto window_steps = expand_steps(win.service_steps, grid);
  const auto xi = to_call_expr(call, base);
  LinExpr slack_sum;

  for (std::size_t i = 0; i < xi.steps.size(); ++i) {
    const int t = xi.steps[i];
    if (std::find(window_steps.begin(), window_steps.end(), t) == window_steps.end())
      throw BuildError("call step " + std::to_string(t) + " outside the window");
    const Var sp = m.add_var(0.0, kInf, "sp[" + std::to_string(t) + "]");
    const Var sn = m.add_var(0.0, kInf, "sn[" + std::to_string(t) + "]");
    LinExpr e = LinExpr(blk.p_sub[static_cast<std::size_t>(t)]) + xi.xi_down[i] - xi.xi_up[i];
    e.add(sp, -1.0).add(sn, 1.0);
    m.add_eq(e, base_pu[static_cast<std::size_t>(t)], "couple[" + std::to_string(t) + "]");
    slack_sum.add(sp, 1.0).add(sn, 1.0);
  }
  for (int t : complement_steps({win.service_steps}, grid)) {
    const Var ed = m.add_var(0.0, kInf, "ed[" + std::to_string(t) + "]");
    const Var er = m.add_var(0.0, kInf, "er[" + std::to_string(t) + "]");
    const Var p = blk.p_sub[static_cast<std::size_t>(t)];
    m.add_le(LinExpr(p) - LinExpr(ed), p0.lambda_d / base, "capd[" + std::to_string(t) + "]");
    m.add_ge(LinExpr(p) + LinExpr(er), -p0.lambda_r / base, "capr[" + std::to_string(t) + "]");
    slack_sum.add(ed, 1.0).add(er, 1.0);
  }
  m.set_objective(ObjSense::kMinimize, slack_sum);
  const Solution sol = solve(m);
  ResidualCheck r;
  r.status = sol.status;
  if (sol.ok()) r.residual_kw = std::max(0.0, sol.objective) * base;
  else if (sol.status == SolveStatus::kInfeasible) r.residual_kw = kInf;
  return r;
}

std::vector<WindowReport> verify_envelope(const Case& c, const Model1Result& m1, const TierResult& tier,
                                          const VerifyOptions& opts) {
  if (!tier.p1 || !tier.p1->windows.size() || !(tier.p1->status == SolveStatus::kOptimal ||
                                                  tier.p1->status == SolveStatus::kFeasible))
    throw CaseError("missing tier result: no solved envelope for tier " + std::to_string(tier.k));
  const auto& p1 = *tier.p1;
  const int ns = static_cast<int>(c.scenarios.scenarios.size());
  std::vector<WindowReport> reports;
  for (std::size_t w = 0; w < c.windows.size(); ++w) {
    const auto seed = opts.seed + w;
    const auto calls = sample_calls(c.windows[w], p1.windows[w], c.scenarios.grid, opts.samples, seed);
    std::vector<ResidualCheck> checks(calls.size() * static_cast<std::size_t>(ns));
    parallel_for(checks.size(), opts.jobs, [&](std::size_t i) {
      const auto k = i / static_cast<std::size_t>(ns);
      const int s = static_cast<int>(i % static_cast<std::size_t>(ns));
      try {
        checks[i] = call_residual(c, m1, tier.p0, p1.plan, static_cast<int>(w), s, calls[k].call);
      } catch (const std::exception&) {
        checks[i] = ResidualCheck{SolveStatus::kError, 0.0};
      }
    });

    WindowReport rep;
    rep.tier = tier.k;
    rep.window = c.windows[w].id;
    rep.seed = seed;
    for (std::size_t k = 0; k < calls.size(); ++k) {
      bool violated = false;
      for (int s = 0; s < ns; ++s) {
        const auto& ch = checks[k * static_cast<std::size_t>(ns) + static_cast<std::size_t>(s)];
        const bool solved = ch.status == SolveStatus::kOptimal || ch.status == SolveStatus::kFeasible ||
                            ch.status == SolveStatus::kInfeasible;
        if (!solved) {
          ++rep.solver_failures;
          continue;
        }
        rep.worst_residual_kw = std::max(rep.worst_residual_kw, ch.residual_kw);
        if (ch.residual_kw > opts.tol_pu * c.network.base_kva) violated = true;
      }
      ++rep.n;
      rep.violations += violated;
      if (calls[k].kind == SampleKind::kScreening) {
        ++rep.screening_n;
        rep.screening_violations += violated;
      } else {
        ++rep.random_n;
        rep.random_violations += violated;
      }
    }
    reports.push_back(rep);
  }
  return reports;
}

std::vector<BlockCheck> resolve_screening_blocks(const Case& c, const Model1Result& m1, const P0Result& p0,
                                                 const P1Result& p1) {
  const auto& grid = c.scenarios.grid;
  const double base = c.network.base_kva;
  std::vector<BlockCheck> out;
  for (std::size_t w = 0; w < c.windows.size(); ++w) {
    const auto& win = c.windows[w];
    const auto service = expand_steps(win.service_steps, grid);
    const auto outside = complement_steps({win.service_steps}, grid);
    for (std::size_t s = 0; s < c.scenarios.scenarios.size(); ++s) {
      for (const auto& pat : gen_stress_patterns(win, grid.dt_h).patterns) {
        MilpModel m("screen");
        m.options = c.solver;
        const auto inv = add_investments(m, c.network);
        fix_investments(m, c.network, inv, p1.plan);
        const auto blk = build_operational_block(m, c.network, grid, c.scenarios.scenarios[s], static_cast<int>(s),
                                                 inv, BlockOptions{"chk", false, c.thermal_sides});
        const auto call = realize(pat, win, grid, p1.windows.at(w).r_down, p1.windows.at(w).r_up);
        apply_service_coupling(m, blk, baseline_pu(m1, static_cast<int>(s), base), to_call_expr(call, base), service);
        apply_caps(m, blk, LinExpr(p0.lambda_d / base), LinExpr(p0.lambda_r / base), outside);
        m.set_objective(ObjSense::kMinimize, LinExpr());
        const Solution sol = solve(m);
        BlockCheck bc;
        bc.window = static_cast<int>(w);
        bc.scenario = static_cast<int>(s);
        bc.pattern = pat.name();
        bc.status = sol.status;
        bc.max_residual_pu = sol.has_values() ? max_violation(m, sol.values) : kInf;
        out.push_back(bc);
      }
    }
  }
  return out;
}

Solution enumerate_binaries(const MilpModel& model, int max_binaries) {
  std::vector<Var> free;
  for (Var v : model.integer_vars()) {
    const auto& col = model.columns()[static_cast<std::size_t>(v.index)];
    if (col.lo < 0.0 || col.hi > 1.0) throw ModelError("enumeration needs binary columns: " + col.name);
    if (col.lo < col.hi) free.push_back(v);
  }
  if (static_cast<int>(free.size()) > max_binaries)
    throw ModelError("enumeration cap exceeded: " + std::to_string(free.size()) + " binaries > " +
                     std::to_string(max_binaries));

  const bool maximize = model.objective_sense() == ObjSense::kMaximize;
  Solution best;
  best.status = SolveStatus::kInfeasible;
  bool found = false;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << free.size()); ++mask) {
    MilpModel lp = lp_relaxation(model);
    for (std::size_t i = 0; i < free.size(); ++i) lp.fix(free[i], (mask >> i) & 1U ? 1.0 : 0.0);
    Solution s = solve(lp);
    if (s.status == SolveStatus::kInfeasible) continue;
    if (s.status != SolveStatus::kOptimal) {
      best.status = s.status == SolveStatus::kUnbounded ? SolveStatus::kUnbounded : SolveStatus::kError;
      best.diagnostic = "assignment " + std::to_string(mask) + ": " + std::string(to_string(s.status));
      best.values.clear();
      return best;
    }
    if (!found || (maximize ? s.objective > best.objective : s.objective < best.objective)) {
      found = true;
      best = std::move(s);
    }
  }
  best.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  best.gap = 0.0;
  return best;
}

Solution enumerate_oracle(const Case& c, OracleModel which, int tier, Variant variant) {
  if (which == OracleModel::kModel1) return enumerate_binaries(build_model1(c, c.scenarios.scenarios).model);
  if (tier < 0 || static_cast<std::size_t>(tier) >= c.budget.tiers.size())
    throw CaseError("tier " + std::to_string(tier) + " is not configured");
  const double dg = c.budget.tiers[static_cast<std::size_t>(tier)];
  const auto m1 = solve_model1(c);
  const auto peaks = expected_peaks(c);
  if (which == OracleModel::kModel2)
    return enumerate_binaries(build_model2(c, m1, peaks, dg, Model2Stage::kPrimary).model);
  const auto p0 = solve_model2(c, m1, peaks, dg);
  if (which == OracleModel::kModel3) return enumerate_binaries(build_model3(c, m1, p0, dg).model);
  const auto p1 = solve_model3(c, m1, p0, dg);
  return enumerate_binaries(build_model4(c, m1, p0, p1, dg, variant).model);
}

}  // namespace nrcc
