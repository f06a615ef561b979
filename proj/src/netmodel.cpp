#include "nrcc/netmodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace nrcc {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw CaseError(p.string() + ": cannot open file");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

[[noreturn]] void fail(const std::string& origin, const std::string& where, const std::string& what) {
  throw CaseError(origin + ": " + where + ": " + what);
}

json parse_json(std::string_view text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw CaseError(origin + ": invalid JSON: " + e.what());
  }
}

template <typename T>
T get_field(const json& obj, const char* key, const std::string& origin, const std::string& where) {
  if (!obj.contains(key)) fail(origin, where, std::string("missing field '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(origin, where, std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& origin, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return get_field<T>(obj, key, origin, where);
}

std::string fmt_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double parse_double(std::string_view s, const std::string& origin, const std::string& where) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    fail(origin, where, "bad number '" + std::string(s) + "'");
  return v;
}

int parse_int(std::string_view s, const std::string& origin, const std::string& where) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) fail(origin, where, "bad integer '" + std::string(s) + "'");
  return v;
}

CandidateKind kind_from_string(const std::string& s, const std::string& origin, const std::string& where) {
  if (s == "line_upgrade") return CandidateKind::kLineUpgrade;
  if (s == "storage") return CandidateKind::kStorage;
  if (s == "voltage_regulator") return CandidateKind::kVoltageRegulator;
  fail(origin, where, "unknown candidate kind '" + s + "'");
}

}  // namespace

std::string_view to_string(CandidateKind k) {
  switch (k) {
    case CandidateKind::kLineUpgrade: return "line_upgrade";
    case CandidateKind::kStorage: return "storage";
    case CandidateKind::kVoltageRegulator: return "voltage_regulator";
  }
  return "storage";
}

int NetworkModel::bus_index(std::string_view id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return static_cast<int>(i);
  return -1;
}

int NetworkModel::line_index(std::string_view id) const {
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (lines[i].id == id) return static_cast<int>(i);
  return -1;
}

void NetworkModel::finalize(const std::string& origin) {
  if (!(base_kva > 0.0)) fail(origin, "base_kva", "must be positive");
  if (!(v_source > 0.0)) fail(origin, "v_source", "must be positive");
  if (buses.empty()) fail(origin, "buses", "no buses");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const auto& b = buses[i];
    const auto where = "buses[" + std::to_string(i) + "] ('" + b.id + "')";
    if (b.id.empty()) fail(origin, where, "empty id");
    if (!ids.insert(b.id).second) fail(origin, where, "duplicate bus id");
    if (!(b.v_min > 0.0) || !(b.v_min < b.v_max)) fail(origin, where, "require 0 < v_min < v_max");
  }

  if (substations.empty()) fail(origin, "substations", "substation set is empty");
  if (substations.size() > 1) fail(origin, "substations", "multi-substation feeders are not supported");
  for (auto& b : buses) b.is_substation = false;
  for (const auto& s : substations) {
    const int i = bus_index(s);
    if (i < 0) fail(origin, "substations", "unknown bus '" + s + "'");
    buses[static_cast<std::size_t>(i)].is_substation = true;
  }
  root = bus_index(substations.front());
  if (v_source < buses[root].v_min || v_source > buses[root].v_max)
    fail(origin, "v_source", "outside the substation bus voltage limits");

  std::set<std::string> line_ids;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const auto& ln = lines[l];
    const auto where = "lines[" + std::to_string(l) + "] ('" + ln.id + "')";
    if (ln.id.empty()) fail(origin, where, "empty id");
    if (!line_ids.insert(ln.id).second) fail(origin, where, "duplicate line id");
    if (bus_index(ln.from_bus) < 0) fail(origin, where, "unknown from_bus '" + ln.from_bus + "'");
    if (bus_index(ln.to_bus) < 0) fail(origin, where, "unknown to_bus '" + ln.to_bus + "'");
    if (ln.from_bus == ln.to_bus) fail(origin, where, "self-loop");
    if (!(ln.r >= 0.0) || !(ln.x >= 0.0)) fail(origin, where, "r and x must be nonnegative");
    if (!(ln.s_max > 0.0)) fail(origin, where, "s_max must be positive");
  }
  if (lines.size() + 1 != buses.size())
    fail(origin, "lines", "non-radial: " + std::to_string(lines.size()) + " lines for " +
                              std::to_string(buses.size()) + " buses (need |buses| - 1)");

  // Orient the tree by breadth-first search from the substation.
  const auto nb = buses.size();
  std::vector<std::vector<int>> incident(nb);
  for (std::size_t l = 0; l < lines.size(); ++l) {
    incident[static_cast<std::size_t>(bus_index(lines[l].from_bus))].push_back(static_cast<int>(l));
    incident[static_cast<std::size_t>(bus_index(lines[l].to_bus))].push_back(static_cast<int>(l));
  }
  line_parent.assign(lines.size(), -1);
  line_child.assign(lines.size(), -1);
  parent_line.assign(nb, -1);
  child_lines.assign(nb, {});
  std::vector<bool> seen(nb, false);
  std::queue<int> q;
  q.push(root);
  seen[static_cast<std::size_t>(root)] = true;
  while (!q.empty()) {
    const int b = q.front();
    q.pop();
    for (int l : incident[static_cast<std::size_t>(b)]) {
      if (line_parent[static_cast<std::size_t>(l)] >= 0) continue;
      const int from = bus_index(lines[static_cast<std::size_t>(l)].from_bus);
      const int other = from == b ? bus_index(lines[static_cast<std::size_t>(l)].to_bus) : from;
      if (seen[static_cast<std::size_t>(other)]) fail(origin, "lines", "non-radial: cycle through line '" + lines[l].id + "'");
      seen[static_cast<std::size_t>(other)] = true;
      line_parent[static_cast<std::size_t>(l)] = b;
      line_child[static_cast<std::size_t>(l)] = other;
      parent_line[static_cast<std::size_t>(other)] = l;
      child_lines[static_cast<std::size_t>(b)].push_back(l);
      q.push(other);
    }
  }
  for (std::size_t b = 0; b < nb; ++b)
    if (!seen[b]) fail(origin, "buses[" + std::to_string(b) + "] ('" + buses[b].id + "')", "non-radial: not connected to the substation");

  std::set<std::string> cand_ids;
  std::set<std::pair<int, std::string>> kind_target;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    const auto where = "candidates[" + std::to_string(i) + "] ('" + c.id + "')";
    if (c.id.empty()) fail(origin, where, "empty id");
    if (!cand_ids.insert(c.id).second) fail(origin, where, "duplicate candidate id");
    if (!(c.fixed_cost >= 0.0) || !(c.variable_cost >= 0.0)) fail(origin, where, "costs must be nonnegative");
    if (!kind_target.emplace(static_cast<int>(c.kind), c.target).second)
      fail(origin, where, "more than one " + std::string(to_string(c.kind)) + " candidate on '" + c.target + "'");
    switch (c.kind) {
      case CandidateKind::kLineUpgrade:
        if (line_index(c.target) < 0) fail(origin, where, "unknown target line '" + c.target + "'");
        if (!(c.ds_max > 0.0)) fail(origin, where, "ds_max must be positive");
        break;
      case CandidateKind::kStorage:
        if (bus_index(c.target) < 0) fail(origin, where, "unknown target bus '" + c.target + "'");
        if (!(c.p_max > 0.0)) fail(origin, where, "p_max must be positive");
        if (!(c.duration_h > 0.0)) fail(origin, where, "duration_h must be positive");
        if (!(c.eta_charge > 0.0 && c.eta_charge <= 1.0) || !(c.eta_discharge > 0.0 && c.eta_discharge <= 1.0))
          fail(origin, where, "efficiencies must lie in (0, 1]");
        break;
      case CandidateKind::kVoltageRegulator:
        if (line_index(c.target) < 0) fail(origin, where, "unknown target line '" + c.target + "'");
        if (!(c.boost_max > 0.0)) fail(origin, where, "boost_max must be positive");
        break;
    }
  }
}

NetworkModel parse_network(std::string_view text, const std::string& origin) {
  const json j = parse_json(text, origin);
  if (!j.is_object()) fail(origin, "top level", "expected an object");
  NetworkModel net;
  net.name = get_or<std::string>(j, "name", "feeder", origin, "top level");
  net.base_kva = get_field<double>(j, "base_kva", origin, "top level");
  net.v_source = get_or<double>(j, "v_source", 1.0, origin, "top level");
  for (const char* key : {"buses", "lines", "candidates", "substations"})
    if (!j.contains(key) || !j.at(key).is_array()) fail(origin, key, "missing or not an array");

  for (std::size_t i = 0; i < j["buses"].size(); ++i) {
    const auto& b = j["buses"][i];
    const auto where = "buses[" + std::to_string(i) + "]";
    Bus bus;
    bus.id = get_field<std::string>(b, "id", origin, where);
    bus.v_min = get_or<double>(b, "v_min", bus.v_min, origin, where);
    bus.v_max = get_or<double>(b, "v_max", bus.v_max, origin, where);
    bus.load_p = get_or<double>(b, "load_p_kw", 0.0, origin, where);
    bus.load_q = get_or<double>(b, "load_q_kvar", 0.0, origin, where);
    net.buses.push_back(std::move(bus));
  }
  for (std::size_t i = 0; i < j["lines"].size(); ++i) {
    const auto& l = j["lines"][i];
    const auto where = "lines[" + std::to_string(i) + "]";
    Line line;
    line.id = get_field<std::string>(l, "id", origin, where);
    line.from_bus = get_field<std::string>(l, "from_bus", origin, where);
    line.to_bus = get_field<std::string>(l, "to_bus", origin, where);
    line.r = get_field<double>(l, "r", origin, where);
    line.x = get_field<double>(l, "x", origin, where);
    line.s_max = get_field<double>(l, "s_max_kva", origin, where);
    net.lines.push_back(std::move(line));
  }
  for (std::size_t i = 0; i < j["candidates"].size(); ++i) {
    const auto& c = j["candidates"][i];
    const auto where = "candidates[" + std::to_string(i) + "]";
    CandidateInvestment cand;
    cand.id = get_field<std::string>(c, "id", origin, where);
    cand.kind = kind_from_string(get_field<std::string>(c, "kind", origin, where), origin, where);
    cand.target = get_field<std::string>(c, "target", origin, where);
    cand.fixed_cost = get_or<double>(c, "fixed_cost", 0.0, origin, where);
    cand.variable_cost = get_or<double>(c, "variable_cost", 0.0, origin, where);
    cand.ds_max = get_or<double>(c, "ds_max_kva", 0.0, origin, where);
    cand.p_max = get_or<double>(c, "p_max_kw", 0.0, origin, where);
    cand.duration_h = get_or<double>(c, "duration_h", 0.0, origin, where);
    cand.boost_max = get_or<double>(c, "boost_max", 0.0, origin, where);
    cand.eta_charge = get_or<double>(c, "eta_charge", 1.0, origin, where);
    cand.eta_discharge = get_or<double>(c, "eta_discharge", 1.0, origin, where);
    net.candidates.push_back(std::move(cand));
  }
  for (std::size_t i = 0; i < j["substations"].size(); ++i) {
    if (!j["substations"][i].is_string()) fail(origin, "substations[" + std::to_string(i) + "]", "expected a bus id");
    net.substations.push_back(j["substations"][i].get<std::string>());
  }
  net.finalize(origin);
  return net;
}

ScenarioSet parse_scenarios(std::string_view text, const NetworkModel& net, const std::string& origin) {
  struct Entry {
    int day, step, bus;
    double p, q;
  };
  struct Raw {
    double weight;
    std::vector<Entry> entries;
  };
  std::map<std::string, Raw> raw;
  std::vector<std::string> order;
  int max_day = -1, max_step = -1;

  std::istringstream in{std::string(text)};
  std::string ln;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, ln)) {
    ++lineno;
    if (!ln.empty() && ln.back() == '\r') ln.pop_back();
    if (ln.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(ln);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    const auto where = "line " + std::to_string(lineno);
    if (!header) {
      const std::vector<std::string> expect = {"scenario", "weight", "day", "step", "bus", "p_kw", "q_kvar"};
      if (f != expect) fail(origin, where, "expected header scenario,weight,day,step,bus,p_kw,q_kvar");
      header = true;
      continue;
    }
    if (f.size() != 7) fail(origin, where, "expected 7 columns, got " + std::to_string(f.size()));
    const double w = parse_double(f[1], origin, where);
    const int day = parse_int(f[2], origin, where);
    const int step = parse_int(f[3], origin, where);
    const int bus = net.bus_index(f[4]);
    if (bus < 0) fail(origin, where, "unknown bus '" + f[4] + "'");
    if (day < 0 || step < 0) fail(origin, where, "negative day or step");
    auto it = raw.find(f[0]);
    if (it == raw.end()) {
      it = raw.emplace(f[0], Raw{w, {}}).first;
      order.push_back(f[0]);
    } else if (it->second.weight != w) {
      fail(origin, where, "inconsistent weight for scenario '" + f[0] + "'");
    }
    it->second.entries.push_back({day, step, bus, parse_double(f[5], origin, where), parse_double(f[6], origin, where)});
    max_day = std::max(max_day, day);
    max_step = std::max(max_step, step);
  }
  if (!header) fail(origin, "line 1", "missing header");
  if (raw.empty()) fail(origin, "scenarios", "no scenario rows");

  ScenarioSet set;
  set.grid.days = max_day + 1;
  set.grid.steps_per_day = max_step + 1;
  set.grid.dt_h = 24.0 / set.grid.steps_per_day;
  const int horizon = set.grid.horizon();
  const auto nb = static_cast<Eigen::Index>(net.buses.size());

  double wsum = 0.0;
  for (const auto& id : order) {
    const auto& r = raw.at(id);
    if (!(r.weight > 0.0)) fail(origin, "scenario '" + id + "'", "weight must be positive");
    wsum += r.weight;
    Scenario s;
    s.id = id;
    s.weight = r.weight;
    s.p_kw = Eigen::MatrixXd::Zero(nb, horizon);
    s.q_kvar = Eigen::MatrixXd::Zero(nb, horizon);
    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> count = Eigen::MatrixXi::Zero(nb, horizon);
    for (const auto& e : r.entries) {
      const int t = e.day * set.grid.steps_per_day + e.step;
      if (count(e.bus, t)++ > 0)
        fail(origin, "scenario '" + id + "'", "duplicate row for bus '" + net.buses[e.bus].id + "' day " +
                                                  std::to_string(e.day) + " step " + std::to_string(e.step));
      s.p_kw(e.bus, t) = e.p;
      s.q_kvar(e.bus, t) = e.q;
    }
    for (Eigen::Index b = 0; b < nb; ++b) {
      const int n = count.row(b).sum();
      if (n == 0) {
        s.p_kw.row(b).setConstant(net.buses[b].load_p);
        s.q_kvar.row(b).setConstant(net.buses[b].load_q);
      } else if (n != horizon) {
        fail(origin, "scenario '" + id + "'", "horizon length mismatch for bus '" + net.buses[b].id + "': " +
                                                  std::to_string(n) + " of " + std::to_string(horizon) + " steps");
      }
    }
    set.scenarios.push_back(std::move(s));
  }
  if (std::abs(wsum - 1.0) > 1e-9) fail(origin, "weights", "weights sum != 1 (sum = " + fmt_double(wsum) + ")");
  return set;
}

void parse_config(std::string_view text, const TimeGrid& grid, Case& out, const std::string& origin) {
  const json j = parse_json(text, origin);
  if (!j.is_object()) fail(origin, "top level", "expected an object");
  out.name = get_or<std::string>(j, "case", out.name, origin, "top level");

  out.windows.clear();
  if (j.contains("windows")) {
    if (!j["windows"].is_array()) fail(origin, "windows", "expected an array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < j["windows"].size(); ++i) {
      const auto& w = j["windows"][i];
      const auto where = "windows[" + std::to_string(i) + "]";
      ServiceWindowSpec s;
      s.id = get_field<std::string>(w, "id", origin, where);
      s.service_steps = get_field<std::vector<int>>(w, "service_steps", origin, where);
      s.protected_steps = get_or<std::vector<int>>(w, "protected_steps", {}, origin, where);
      s.rebound_steps = get_or<std::vector<int>>(w, "rebound_steps", {}, origin, where);
      s.theta_down = get_or<double>(w, "theta_down", 0.0, origin, where);
      s.theta_up = get_or<double>(w, "theta_up", 0.0, origin, where);
      s.rho = get_or<double>(w, "rho", 1.0, origin, where);
      s.beta_down = get_or<double>(w, "beta_down", 1.0, origin, where);
      s.beta_up = get_or<double>(w, "beta_up", 0.0, origin, where);
      s.r_cap = get_field<double>(w, "r_cap_kw", origin, where);
      const auto wh = where + " ('" + s.id + "')";
      if (!ids.insert(s.id).second) fail(origin, wh, "duplicate window id");
      if (s.service_steps.empty()) fail(origin, wh, "service_steps is empty");
      std::set<int> all;
      for (const auto* set : {&s.service_steps, &s.protected_steps, &s.rebound_steps}) {
        for (int t : *set) {
          if (t < 0 || t >= grid.steps_per_day)
            fail(origin, wh, "step " + std::to_string(t) + " outside the representative day [0, " +
                                 std::to_string(grid.steps_per_day) + ")");
          if (!all.insert(t).second) fail(origin, wh, "overlapping window sets at step " + std::to_string(t));
        }
      }
      if (!(s.theta_down >= 0.0) || !(s.theta_up >= 0.0)) fail(origin, wh, "theta must be nonnegative");
      if (!(s.rho >= 0.0) || !(s.beta_down >= 0.0) || !(s.beta_up >= 0.0)) fail(origin, wh, "rho and beta must be nonnegative");
      if (!(s.r_cap > 0.0)) fail(origin, wh, "r_cap_kw must be positive");
      std::sort(s.service_steps.begin(), s.service_steps.end());
      std::sort(s.protected_steps.begin(), s.protected_steps.end());
      std::sort(s.rebound_steps.begin(), s.rebound_steps.end());
      out.windows.push_back(std::move(s));
    }
  }

  const json tiers = j.value("tiers", json::object());
  out.budget.tiers = get_field<std::vector<double>>(tiers, "delta_gamma", origin, "tiers");
  for (std::size_t k = 0; k < out.budget.tiers.size(); ++k) {
    const double v = out.budget.tiers[k];
    if (!(v >= 0.0) || !std::isfinite(v)) fail(origin, "tiers.delta_gamma[" + std::to_string(k) + "]", "must be >= 0");
    if (k > 0 && !(v > out.budget.tiers[k - 1]))
      fail(origin, "tiers.delta_gamma[" + std::to_string(k) + "]", "tiers must be strictly increasing");
  }

  const json obj = j.value("objective", json::object());
  out.budget.W = get_or<double>(obj, "W", 1.0, origin, "objective");
  out.budget.voll = get_or<double>(obj, "voll", 0.0, origin, "objective");
  out.budget.shed_annualization = get_or<double>(obj, "shed_annualization", 1.0, origin, "objective");
  out.thermal_sides = get_or<int>(obj, "thermal_sides", 16, origin, "objective");
  if (!(out.budget.W >= 0.0 && out.budget.W <= 1.0)) fail(origin, "objective.W", "must lie in [0, 1]");
  if (!(out.budget.voll >= 0.0)) fail(origin, "objective.voll", "must be nonnegative");
  if (!(out.budget.shed_annualization > 0.0)) fail(origin, "objective.shed_annualization", "must be positive");
  if (out.thermal_sides < 8 || out.thermal_sides % 4 != 0)
    fail(origin, "objective.thermal_sides", "must be a multiple of 4, at least 8");

  const json sol = j.value("solver", json::object());
  out.solver.backend = get_or<std::string>(sol, "backend", "auto", origin, "solver");
  out.solver.time_limit_s = get_or<double>(sol, "time_limit_s", 600.0, origin, "solver");
  out.solver.mip_gap = get_or<double>(sol, "mip_gap", 1e-6, origin, "solver");
  out.solver.threads = get_or<int>(sol, "threads", 1, origin, "solver");
  out.solver.solver_binary = get_or<std::string>(sol, "binary", "", origin, "solver");
  if (!(out.solver.time_limit_s > 0.0)) fail(origin, "solver.time_limit_s", "must be positive");
  if (!(out.solver.mip_gap >= 0.0)) fail(origin, "solver.mip_gap", "must be nonnegative");
}

Case load_case(const std::filesystem::path& network_path, const std::filesystem::path& scenario_path,
               const std::filesystem::path& config_path) {
  Case c;
  c.network = parse_network(read_text(network_path), network_path.string());
  c.scenarios = parse_scenarios(read_text(scenario_path), c.network, scenario_path.string());
  parse_config(read_text(config_path), c.scenarios.grid, c, config_path.string());
  return c;
}

Case load_case_dir(const std::filesystem::path& dir) {
  return load_case(dir / "network.json", dir / "scenarios.csv", dir / "config.json");
}

std::string network_to_json(const NetworkModel& net) {
  ojson j;
  j["name"] = net.name;
  j["base_kva"] = net.base_kva;
  j["v_source"] = net.v_source;
  j["buses"] = ojson::array();
  for (const auto& b : net.buses)
    j["buses"].push_back({{"id", b.id}, {"v_min", b.v_min}, {"v_max", b.v_max}, {"load_p_kw", b.load_p}, {"load_q_kvar", b.load_q}});
  j["lines"] = ojson::array();
  for (const auto& l : net.lines)
    j["lines"].push_back({{"id", l.id}, {"from_bus", l.from_bus}, {"to_bus", l.to_bus}, {"r", l.r}, {"x", l.x}, {"s_max_kva", l.s_max}});
  j["candidates"] = ojson::array();
  for (const auto& c : net.candidates) {
    ojson e = {{"id", c.id}, {"kind", std::string(to_string(c.kind))}, {"target", c.target},
               {"fixed_cost", c.fixed_cost}, {"variable_cost", c.variable_cost}};
    switch (c.kind) {
      case CandidateKind::kLineUpgrade: e["ds_max_kva"] = c.ds_max; break;
      case CandidateKind::kStorage:
        e["p_max_kw"] = c.p_max;
        e["duration_h"] = c.duration_h;
        e["eta_charge"] = c.eta_charge;
        e["eta_discharge"] = c.eta_discharge;
        break;
      case CandidateKind::kVoltageRegulator: e["boost_max"] = c.boost_max; break;
    }
    j["candidates"].push_back(std::move(e));
  }
  j["substations"] = net.substations;
  return j.dump(2) + "\n";
}

std::string scenarios_to_csv(const ScenarioSet& set, const NetworkModel& net) {
  std::string out = "scenario,weight,day,step,bus,p_kw,q_kvar\n";
  for (const auto& s : set.scenarios)
    for (int d = 0; d < set.grid.days; ++d)
      for (int k = 0; k < set.grid.steps_per_day; ++k)
        for (std::size_t b = 0; b < net.buses.size(); ++b) {
          const int t = d * set.grid.steps_per_day + k;
          out += s.id + "," + fmt_double(s.weight) + "," + std::to_string(d) + "," + std::to_string(k) + "," +
                 net.buses[b].id + "," + fmt_double(s.p_kw(static_cast<Eigen::Index>(b), t)) + "," +
                 fmt_double(s.q_kvar(static_cast<Eigen::Index>(b), t)) + "\n";
        }
  return out;
}

std::string config_to_json(const Case& c) {
  ojson j;
  j["case"] = c.name;
  j["windows"] = ojson::array();
  for (const auto& w : c.windows)
    j["windows"].push_back({{"id", w.id},
                            {"service_steps", w.service_steps},
                            {"protected_steps", w.protected_steps},
                            {"rebound_steps", w.rebound_steps},
                            {"theta_down", w.theta_down},
                            {"theta_up", w.theta_up},
                            {"rho", w.rho},
                            {"beta_down", w.beta_down},
                            {"beta_up", w.beta_up},
                            {"r_cap_kw", w.r_cap}});
  j["tiers"] = {{"delta_gamma", c.budget.tiers}};
  j["objective"] = {{"W", c.budget.W},
                    {"voll", c.budget.voll},
                    {"shed_annualization", c.budget.shed_annualization},
                    {"thermal_sides", c.thermal_sides}};
  j["solver"] = {{"backend", c.solver.backend},
                 {"time_limit_s", c.solver.time_limit_s},
                 {"mip_gap", c.solver.mip_gap},
                 {"threads", c.solver.threads},
                 {"binary", c.solver.solver_binary}};
  return j.dump(2) + "\n";
}

void save_case_dir(const Case& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw CaseError((dir / name).string() + ": cannot write");
    f << text;
  };
  write("network.json", network_to_json(c.network));
  write("scenarios.csv", scenarios_to_csv(c.scenarios, c.network));
  write("config.json", config_to_json(c));
}

Scenario expected_scenario(const ScenarioSet& set) {
  if (set.scenarios.empty()) throw CaseError("expected_scenario: empty scenario set");
  Scenario e;
  e.id = "expected";
  e.weight = 1.0;
  e.p_kw = Eigen::MatrixXd::Zero(set.scenarios.front().p_kw.rows(), set.scenarios.front().p_kw.cols());
  e.q_kvar = e.p_kw;
  for (const auto& s : set.scenarios) {
    e.p_kw += s.weight * s.p_kw;
    e.q_kvar += s.weight * s.q_kvar;
  }
  return e;
}

std::vector<int> expand_steps(const std::vector<int>& day_steps, const TimeGrid& grid) {
  std::vector<int> out;
  out.reserve(day_steps.size() * static_cast<std::size_t>(grid.days));
  for (int d = 0; d < grid.days; ++d)
    for (int k : day_steps) out.push_back(d * grid.steps_per_day + k);
  return out;
}

}  // namespace nrcc
