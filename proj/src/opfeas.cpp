#include "nrcc/opfeas.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace nrcc {

namespace {

std::string idx(const std::string& tag, const std::string& what, int t, const std::string& elem) {
  return tag + "." + what + "[" + std::to_string(t) + "," + elem + "]";
}

void require_finalized(const NetworkModel& net) {
  if (net.root < 0 || net.line_parent.size() != net.lines.size())
    throw BuildError("network is not finalized");
}

}  // namespace

InvestmentVars add_investments(MilpModel& model, const NetworkModel& net, const std::string& prefix) {
  const double base = net.base_kva;
  InvestmentVars inv;
  for (const auto& c : net.candidates) {
    const Var u = model.add_binary(prefix + "u." + c.id);
    inv.u.push_back(u);
    if (c.kind == CandidateKind::kStorage) {
      const Var v = model.add_var(0.0, c.p_max / base, prefix + "v." + c.id);
      model.add_le(LinExpr(v) - (c.p_max / base) * LinExpr(u), 0.0, prefix + "gate.v." + c.id);
      inv.v.push_back(v);
    } else {
      inv.v.push_back(Var{});
    }
  }
  return inv;
}

LinExpr investment_cost(const NetworkModel& net, const InvestmentVars& inv) {
  LinExpr e;
  for (std::size_t i = 0; i < net.candidates.size(); ++i) {
    e.add(inv.u[i], net.candidates[i].fixed_cost);
    if (inv.v[i].valid()) e.add(inv.v[i], net.candidates[i].variable_cost * net.base_kva);
  }
  return e;
}

double investment_cost(const NetworkModel& net, const InvestmentPlan& plan) {
  double total = 0.0;
  for (std::size_t i = 0; i < net.candidates.size(); ++i)
    total += net.candidates[i].fixed_cost * plan.u[i] + net.candidates[i].variable_cost * plan.v_kw[i];
  return total;
}

InvestmentPlan extract_plan(const NetworkModel& net, const InvestmentVars& inv, const Solution& sol) {
  InvestmentPlan plan;
  for (std::size_t i = 0; i < net.candidates.size(); ++i) {
    plan.u.push_back(sol.value(inv.u[i]) > 0.5 ? 1.0 : 0.0);
    plan.v_kw.push_back(inv.v[i].valid() ? std::max(0.0, sol.value(inv.v[i]) * net.base_kva) + 0.0 : 0.0);
  }
  return plan;
}

void fix_investments(MilpModel& model, const NetworkModel& net, const InvestmentVars& inv, const InvestmentPlan& plan) {
  for (std::size_t i = 0; i < net.candidates.size(); ++i) {
    model.fix(inv.u[i], plan.u[i]);
    if (inv.v[i].valid()) {
      const double hi = model.columns()[static_cast<std::size_t>(inv.v[i].index)].hi;
      model.fix(inv.v[i], std::clamp(plan.v_kw[i] / net.base_kva, 0.0, hi));
    }
  }
}

LinExpr OperationalBlock::shed_energy_kwh() const {
  LinExpr e;
  for (const auto& row : shed)
    for (Var s : row)
      if (s.valid()) e.add(s, dt_h * base_kva);
  return e;
}

OperationalBlock build_operational_block(MilpModel& model, const NetworkModel& net, const TimeGrid& grid,
                                         const Scenario& scenario, int scenario_index, const InvestmentVars& inv,
                                         const BlockOptions& opts) {
  require_finalized(net);
  const auto nb = net.buses.size();
  const auto nl = net.lines.size();
  const auto nc = net.candidates.size();
  const int T = grid.horizon();
  if (static_cast<std::size_t>(scenario.p_kw.rows()) != nb || scenario.p_kw.cols() != T ||
      scenario.q_kvar.rows() != scenario.p_kw.rows() || scenario.q_kvar.cols() != T)
    throw BuildError("scenario '" + scenario.id + "' does not match the network and time grid");
  if (inv.u.size() != nc || inv.v.size() != nc) throw BuildError("investment handles do not match the candidate list");
  if (opts.thermal_sides < 4) throw BuildError("thermal polygon needs at least 4 sides");

  const double base = net.base_kva;
  const std::string& tag = opts.tag;

  std::vector<int> upgrade_of(nl, -1), regulator_of(nl, -1);
  std::vector<std::vector<int>> storage_at(nb);
  for (std::size_t i = 0; i < nc; ++i) {
    const auto& c = net.candidates[i];
    if (c.kind == CandidateKind::kStorage) {
      const int b = net.bus_index(c.target);
      if (b < 0) throw BuildError("candidate '" + c.id + "': unknown bus '" + c.target + "'");
      storage_at[static_cast<std::size_t>(b)].push_back(static_cast<int>(i));
    } else {
      const int l = net.line_index(c.target);
      if (l < 0) throw BuildError("candidate '" + c.id + "': unknown line '" + c.target + "'");
      (c.kind == CandidateKind::kLineUpgrade ? upgrade_of : regulator_of)[static_cast<std::size_t>(l)] =
          static_cast<int>(i);
    }
  }

  OperationalBlock blk;
  blk.tag = tag;
  blk.scenario = scenario_index;
  blk.steps = T;
  blk.dt_h = grid.dt_h;
  blk.base_kva = base;
  blk.v_sq.assign(T, std::vector<Var>(nb));
  blk.p_line.assign(T, std::vector<Var>(nl));
  blk.q_line.assign(T, std::vector<Var>(nl));
  blk.boost.assign(T, std::vector<Var>(nl));
  blk.charge.assign(T, std::vector<Var>(nc));
  blk.discharge.assign(T, std::vector<Var>(nc));
  blk.soc.assign(T, std::vector<Var>(nc));
  blk.shed.assign(T, std::vector<Var>(nb));
  blk.p_sub.resize(T);

  for (int t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& bus = net.buses[b];
      const bool root = static_cast<int>(b) == net.root;
      blk.v_sq[t][b] = root ? model.add_var(net.v_source, net.v_source, idx(tag, "v", t, bus.id))
                            : model.add_var(bus.v_min, bus.v_max, idx(tag, "v", t, bus.id));
      const double load = scenario.p_kw(static_cast<Eigen::Index>(b), t) / base;
      if (opts.allow_shed && load > 0.0) blk.shed[t][b] = model.add_var(0.0, load, idx(tag, "shed", t, bus.id));
    }
    for (std::size_t l = 0; l < nl; ++l) {
      blk.p_line[t][l] = model.add_var(-kInf, kInf, idx(tag, "P", t, net.lines[l].id));
      blk.q_line[t][l] = model.add_var(-kInf, kInf, idx(tag, "Q", t, net.lines[l].id));
      if (const int r = regulator_of[l]; r >= 0) {
        const double bm = net.candidates[static_cast<std::size_t>(r)].boost_max;
        const Var bv = model.add_var(-bm, bm, idx(tag, "boost", t, net.lines[l].id));
        blk.boost[t][l] = bv;
        const Var u = inv.u[static_cast<std::size_t>(r)];
        model.add_le(LinExpr(bv) - bm * LinExpr(u), 0.0, idx(tag, "boost_hi", t, net.lines[l].id));
        model.add_ge(LinExpr(bv) + bm * LinExpr(u), 0.0, idx(tag, "boost_lo", t, net.lines[l].id));
      }
    }
    for (std::size_t i = 0; i < nc; ++i) {
      const auto& c = net.candidates[i];
      if (c.kind != CandidateKind::kStorage) continue;
      const double pm = c.p_max / base;
      const Var v = inv.v[i];
      blk.charge[t][i] = model.add_var(0.0, pm, idx(tag, "ch", t, c.id));
      blk.discharge[t][i] = model.add_var(0.0, pm, idx(tag, "dis", t, c.id));
      blk.soc[t][i] = model.add_var(0.0, pm * c.duration_h, idx(tag, "soc", t, c.id));
      model.add_le(LinExpr(blk.charge[t][i]) - LinExpr(v), 0.0, idx(tag, "ch_cap", t, c.id));
      model.add_le(LinExpr(blk.discharge[t][i]) - LinExpr(v), 0.0, idx(tag, "dis_cap", t, c.id));
      model.add_le(LinExpr(blk.soc[t][i]) - c.duration_h * LinExpr(v), 0.0, idx(tag, "soc_cap", t, c.id));
    }
    blk.p_sub[t] = model.add_var(-kInf, kInf, idx(tag, "psub", t, net.buses[net.root].id));
  }

  const int n_sides = opts.thermal_sides;
  std::vector<std::pair<double, double>> facets;
  for (int k = 0; k < n_sides; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / n_sides;
    double c = std::cos(phi), s = std::sin(phi);
    if (std::abs(c) < 1e-12) c = 0.0;
    if (std::abs(s) < 1e-12) s = 0.0;
    facets.emplace_back(c, s);
  }

  for (int t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& bus = net.buses[b];
      const auto bi = static_cast<Eigen::Index>(b);
      const double p = scenario.p_kw(bi, t) / base;
      const double q = scenario.q_kvar(bi, t) / base;
      const bool root = static_cast<int>(b) == net.root;

      // inflow - outflow - (load - shed + charge - discharge) = 0
      LinExpr pb = root ? LinExpr(blk.p_sub[t]) : LinExpr(blk.p_line[t][static_cast<std::size_t>(net.parent_line[b])]);
      LinExpr qb = root ? LinExpr() : LinExpr(blk.q_line[t][static_cast<std::size_t>(net.parent_line[b])]);
      for (int l : net.child_lines[b]) {
        pb.add(blk.p_line[t][static_cast<std::size_t>(l)], -1.0);
        qb.add(blk.q_line[t][static_cast<std::size_t>(l)], -1.0);
      }
      if (const Var s = blk.shed[t][b]; s.valid()) {
        pb.add(s, 1.0);
        if (q != 0.0) qb.add(s, q / p);
      }
      for (int i : storage_at[b]) {
        pb.add(blk.charge[t][static_cast<std::size_t>(i)], -1.0);
        pb.add(blk.discharge[t][static_cast<std::size_t>(i)], 1.0);
      }
      model.add_eq(pb, p, idx(tag, "bal_p", t, bus.id));
      if (!root) model.add_eq(qb, q, idx(tag, "bal_q", t, bus.id));
    }

    for (std::size_t l = 0; l < nl; ++l) {
      const auto& ln = net.lines[l];
      const auto parent = static_cast<std::size_t>(net.line_parent[l]);
      const auto child = static_cast<std::size_t>(net.line_child[l]);
      LinExpr drop = LinExpr(blk.v_sq[t][child]) - LinExpr(blk.v_sq[t][parent]);
      drop.add(blk.p_line[t][l], 2.0 * ln.r).add(blk.q_line[t][l], 2.0 * ln.x);
      if (blk.boost[t][l].valid()) drop.add(blk.boost[t][l], -1.0);
      model.add_eq(drop, 0.0, idx(tag, "vdrop", t, ln.id));

      const double smax = ln.s_max / base;
      const int up = upgrade_of[l];
      for (std::size_t k = 0; k < facets.size(); ++k) {
        LinExpr e;
        e.add(blk.p_line[t][l], facets[k].first).add(blk.q_line[t][l], facets[k].second);
        if (up >= 0) e.add(inv.u[static_cast<std::size_t>(up)], -net.candidates[static_cast<std::size_t>(up)].ds_max / base);
        model.add_le(e, smax, idx(tag, "therm" + std::to_string(k), t, ln.id));
      }
    }

    for (std::size_t i = 0; i < nc; ++i) {
      const auto& c = net.candidates[i];
      if (c.kind != CandidateKind::kStorage) continue;
      const int day_start = (t / grid.steps_per_day) * grid.steps_per_day;
      const int prev = t == day_start ? day_start + grid.steps_per_day - 1 : t - 1;
      LinExpr e = LinExpr(blk.soc[t][i]) - LinExpr(blk.soc[prev][i]);
      e.add(blk.charge[t][i], -c.eta_charge * grid.dt_h).add(blk.discharge[t][i], grid.dt_h / c.eta_discharge);
      model.add_eq(e, 0.0, idx(tag, "soc_rec", t, c.id));
    }
  }
  return blk;
}

CallExpr to_call_expr(const CallTrajectory& call, double base_kva) {
  CallExpr e;
  e.steps = call.steps;
  for (std::size_t i = 0; i < call.steps.size(); ++i) {
    e.xi_down.emplace_back(i < call.xi_down.size() ? call.xi_down[i] / base_kva : 0.0);
    e.xi_up.emplace_back(i < call.xi_up.size() ? call.xi_up[i] / base_kva : 0.0);
  }
  return e;
}

void apply_service_coupling(MilpModel& model, const OperationalBlock& block, const std::vector<double>& baseline_pu,
                            const CallExpr& call, const std::vector<int>& window_steps) {
  if (baseline_pu.size() != static_cast<std::size_t>(block.steps))
    throw BuildError(block.tag + ": baseline does not cover the horizon");
  if (call.xi_down.size() != call.steps.size() || call.xi_up.size() != call.steps.size())
    throw BuildError(block.tag + ": call trajectory length mismatch");
  const std::set<int> window(window_steps.begin(), window_steps.end());
  for (int t : call.steps)
    if (!window.contains(t)) throw BuildError(block.tag + ": call step " + std::to_string(t) + " outside the window");
  for (std::size_t i = 0; i < call.steps.size(); ++i) {
    const int t = call.steps[i];
    const LinExpr e = LinExpr(block.p_sub[static_cast<std::size_t>(t)]) + call.xi_down[i] - call.xi_up[i];
    model.add_eq(e, baseline_pu[static_cast<std::size_t>(t)], block.tag + ".couple[" + std::to_string(t) + "]");
  }
}

void apply_caps(MilpModel& model, const OperationalBlock& block, const LinExpr& lambda_d, const LinExpr& lambda_r,
                const std::vector<int>& steps) {
  for (int t : steps) {
    const Var p = block.p_sub[static_cast<std::size_t>(t)];
    model.add_le(LinExpr(p) - lambda_d, 0.0, block.tag + ".capd[" + std::to_string(t) + "]");
    model.add_ge(LinExpr(p) + lambda_r, 0.0, block.tag + ".capr[" + std::to_string(t) + "]");
  }
}

void apply_deviation_bound(MilpModel& model, const OperationalBlock& block, const std::vector<double>& baseline_pu,
                           Var eta, const std::vector<int>& steps) {
  for (int t : steps) {
    const Var p = block.p_sub[static_cast<std::size_t>(t)];
    const double b = baseline_pu[static_cast<std::size_t>(t)];
    model.add_le(LinExpr(p) - LinExpr(eta), b, block.tag + ".devhi[" + std::to_string(t) + "]");
    model.add_ge(LinExpr(p) + LinExpr(eta), b, block.tag + ".devlo[" + std::to_string(t) + "]");
  }
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kA: return "a";
    case Variant::kB: return "b";
    case Variant::kC: return "c";
  }
  return "a";
}

Variant variant_from_string(std::string_view s) {
  if (s == "a") return Variant::kA;
  if (s == "b") return Variant::kB;
  if (s == "c") return Variant::kC;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

std::vector<int> complement_steps(const std::vector<std::vector<int>>& excluded, const TimeGrid& grid) {
  std::set<int> ex;
  for (const auto& set : excluded) ex.insert(set.begin(), set.end());
  std::vector<int> day;
  for (int k = 0; k < grid.steps_per_day; ++k)
    if (!ex.contains(k)) day.push_back(k);
  return expand_steps(day, grid);
}

void apply_governance(MilpModel& model, const OperationalBlock& block, Variant variant,
                      const std::vector<double>& baseline_pu, const LinExpr& lambda_d, const LinExpr& lambda_r, Var eta,
                      const ServiceWindowSpec& window, const TimeGrid& grid) {
  if (baseline_pu.size() != static_cast<std::size_t>(block.steps))
    throw BuildError(block.tag + ": baseline does not cover the horizon");
  switch (variant) {
    case Variant::kA:
      apply_deviation_bound(model, block, baseline_pu, eta, expand_steps(window.protected_steps, grid));
      apply_caps(model, block, lambda_d, lambda_r,
                 complement_steps({window.service_steps, window.protected_steps}, grid));
      break;
    case Variant::kB: {
      apply_deviation_bound(model, block, baseline_pu, eta, expand_steps(window.rebound_steps, grid));
      for (int t : complement_steps({window.service_steps, window.rebound_steps}, grid))
        model.add_eq(LinExpr(block.p_sub[static_cast<std::size_t>(t)]), baseline_pu[static_cast<std::size_t>(t)],
                     block.tag + ".pin[" + std::to_string(t) + "]");
      break;
    }
    case Variant::kC:
      apply_deviation_bound(model, block, baseline_pu, eta, complement_steps({window.service_steps}, grid));
      break;
  }
}

}  // namespace nrcc
