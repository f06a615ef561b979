#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nrcc/milp.hpp"

namespace nrcc {

/// Raised for any invalid case input; the message names the file and the
/// offending element.
class CaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Bus {
  std::string id;
  bool is_substation = false;
  double v_min = 0.9025;  // squared voltage, pu^2
  double v_max = 1.1025;
  double load_p = 0.0;  // kW, used when a scenario omits the bus
  double load_q = 0.0;  // kvar
  friend bool operator==(const Bus&, const Bus&) = default;
};

struct Line {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  double r = 0.0;  // pu
  double x = 0.0;  // pu
  double s_max = 0.0;  // kVA
  friend bool operator==(const Line&, const Line&) = default;
};

enum class CandidateKind { kLineUpgrade, kStorage, kVoltageRegulator };

std::string_view to_string(CandidateKind k);

struct CandidateInvestment {
  std::string id;
  CandidateKind kind = CandidateKind::kStorage;
  std::string target;  // line id for upgrades/regulators, bus id for storage
  double fixed_cost = 0.0;  // $/yr, paid when the binary is on
  double variable_cost = 0.0;  // $/yr per kW of storage power
  double ds_max = 0.0;  // kVA added by a line upgrade
  double p_max = 0.0;  // kW, storage power limit
  double duration_h = 0.0;  // storage energy = duration_h * power
  double boost_max = 0.0;  // pu^2, regulator squared-voltage boost
  double eta_charge = 1.0;
  double eta_discharge = 1.0;
  friend bool operator==(const CandidateInvestment&, const CandidateInvestment&) = default;
};

/// Radial feeder. Topology fields are derived by `finalize()`.
struct NetworkModel {
  std::string name = "feeder";
  double base_kva = 1000.0;
  double v_source = 1.0;  // squared voltage held at the substation
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<CandidateInvestment> candidates;
  std::vector<std::string> substations;

  // Derived: lines oriented away from the substation.
  int root = -1;
  std::vector<int> line_parent;  // upstream bus of each line
  std::vector<int> line_child;  // downstream bus of each line
  std::vector<int> parent_line;  // line feeding each bus, -1 for the root
  std::vector<std::vector<int>> child_lines;  // lines leaving each bus

  int bus_index(std::string_view id) const;
  int line_index(std::string_view id) const;
  /// Validates invariants and computes the oriented tree. Throws CaseError.
  void finalize(const std::string& origin = "network");

  bool same_data(const NetworkModel& o) const {
    return name == o.name && base_kva == o.base_kva && v_source == o.v_source && buses == o.buses &&
           lines == o.lines && candidates == o.candidates && substations == o.substations;
  }
};

struct TimeGrid {
  double dt_h = 1.0;
  int steps_per_day = 24;
  int days = 1;
  int horizon() const { return steps_per_day * days; }
  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Per-bus netload over the full horizon; rows are buses, columns steps.
struct Scenario {
  std::string id;
  double weight = 1.0;
  Eigen::MatrixXd p_kw;
  Eigen::MatrixXd q_kvar;
};

struct ScenarioSet {
  TimeGrid grid;
  std::vector<Scenario> scenarios;
};

/// Service window defined on the steps of one representative day; it recurs
/// on every day of the horizon.
struct ServiceWindowSpec {
  std::string id;
  std::vector<int> service_steps;
  std::vector<int> protected_steps;
  std::vector<int> rebound_steps;
  double theta_down = 0.0;  // h
  double theta_up = 0.0;
  double rho = 1.0;
  double beta_down = 1.0;
  double beta_up = 0.0;
  double r_cap = 0.0;  // kW
  friend bool operator==(const ServiceWindowSpec&, const ServiceWindowSpec&) = default;

  bool down_enabled() const { return beta_down > 0.0; }
  bool up_enabled() const { return beta_up > 0.0; }
};

struct BudgetSchedule {
  std::vector<double> tiers;  // incremental budgets, $/yr
  double W = 1.0;
  double voll = 0.0;  // $/kWh
  /// Multiplies the per-horizon shed energy cost (e.g. 365 for one
  /// representative day standing for a year).
  double shed_annualization = 1.0;
  friend bool operator==(const BudgetSchedule&, const BudgetSchedule&) = default;
};

struct Case {
  std::string name = "case";
  NetworkModel network;
  ScenarioSet scenarios;
  std::vector<ServiceWindowSpec> windows;
  BudgetSchedule budget;
  SolverOptions solver;
  int thermal_sides = 16;
};

Case load_case(const std::filesystem::path& network_path, const std::filesystem::path& scenario_path,
               const std::filesystem::path& config_path);
/// Loads network.json, scenarios.csv and config.json from a case directory.
Case load_case_dir(const std::filesystem::path& dir);

NetworkModel parse_network(std::string_view json_text, const std::string& origin = "network");
ScenarioSet parse_scenarios(std::string_view csv_text, const NetworkModel& net,
                            const std::string& origin = "scenarios");
void parse_config(std::string_view json_text, const TimeGrid& grid, Case& out,
                  const std::string& origin = "config");

std::string network_to_json(const NetworkModel& net);
std::string scenarios_to_csv(const ScenarioSet& set, const NetworkModel& net);
std::string config_to_json(const Case& c);
void save_case_dir(const Case& c, const std::filesystem::path& dir);

/// Weight-averaged scenario with weight 1.
Scenario expected_scenario(const ScenarioSet& set);

/// Maps day-local step indices to horizon indices for every day.
std::vector<int> expand_steps(const std::vector<int>& day_steps, const TimeGrid& grid);

}  // namespace nrcc
