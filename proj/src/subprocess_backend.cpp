#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "nrcc/milp.hpp"

#ifndef NRCC_DEFAULT_SOLVER_BINARY
#define NRCC_DEFAULT_SOLVER_BINARY "highs"
#endif

namespace nrcc::detail {

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

SolveStatus map_highs_status(const std::string& s) {
  if (s == "Optimal") return SolveStatus::kOptimal;
  if (s == "Infeasible") return SolveStatus::kInfeasible;
  if (s == "Unbounded" || s == "Primal infeasible or unbounded") return SolveStatus::kUnbounded;
  if (s == "Time limit reached") return SolveStatus::kTimeLimit;
  if (s == "Solution limit reached" || s == "Iteration limit reached" || s == "Interrupted by user")
    return SolveStatus::kFeasible;
  return SolveStatus::kError;
}

}  // namespace

Solution parse_solution_file(const MilpModel& model, std::string_view text) {
  Solution sol;
  std::istringstream in{std::string(text)};
  std::string ln;
  std::string status;
  while (std::getline(in, ln)) {
    if (ln == "Model status") {
      std::getline(in, status);
      break;
    }
  }
  if (status.empty()) {
    sol.status = SolveStatus::kError;
    sol.diagnostic = "malformed solution file: no model status";
    return sol;
  }
  sol.status = map_highs_status(status);
  sol.diagnostic = status;

  bool primal_feasible = false;
  while (std::getline(in, ln)) {
    if (ln == "# Primal solution values") {
      std::getline(in, ln);
      primal_feasible = ln == "Feasible";
      break;
    }
  }
  if (!primal_feasible) {
    if (sol.status == SolveStatus::kOptimal || sol.status == SolveStatus::kFeasible)
      sol.status = SolveStatus::kError;
    return sol;
  }
  std::vector<double> values;
  while (std::getline(in, ln)) {
    if (ln.rfind("Objective ", 0) == 0) {
      sol.objective = std::strtod(ln.c_str() + 10, nullptr);
    } else if (ln.rfind("# Columns ", 0) == 0) {
      const auto n = std::strtoull(ln.c_str() + 10, nullptr, 10);
      if (n != model.num_vars()) {
        sol.status = SolveStatus::kError;
        sol.diagnostic = "solution file column count mismatch";
        return sol;
      }
      // Rows are "name value"; the column order matches the MPS export.
      for (std::size_t j = 0; j < n && std::getline(in, ln); ++j) {
        const auto sp = ln.find_last_of(' ');
        values.push_back(std::strtod(ln.c_str() + sp + 1, nullptr));
      }
      break;
    }
  }
  if (values.size() != model.num_vars()) {
    sol.status = SolveStatus::kError;
    sol.diagnostic = "solution file truncated";
    return sol;
  }
  for (std::size_t j = 0; j < values.size(); ++j)
    if (model.columns()[j].integer) values[j] = std::round(values[j]);
  if (sol.ok() || sol.status == SolveStatus::kTimeLimit) sol.values = std::move(values);
  return sol;
}

Solution solve_subprocess(const MilpModel& model) {
  static std::atomic<unsigned> counter{0};
  const auto opts = with_env_override(model.options);
  Solution sol;

  std::string binary = opts.solver_binary;
  if (binary.empty()) {
    if (const char* env = std::getenv("NRCC_HIGHS_BIN"); env && *env) binary = env;
    else binary = NRCC_DEFAULT_SOLVER_BINARY;
  }

  std::error_code ec;
  auto dir = opts.scratch_dir.empty() ? std::filesystem::temp_directory_path(ec) : opts.scratch_dir;
  const auto stem = "nrcc_" + std::to_string(::getpid()) + "_" + std::to_string(counter++);
  const auto mps = dir / (stem + ".mps");
  const auto sol_path = dir / (stem + ".sol");
  const auto opt_path = dir / (stem + ".opt");
  const auto log_path = dir / (stem + ".log");
  try {
    export_mps(model, mps);
    std::ofstream o(opt_path);
    o << "time_limit = " << opts.time_limit_s << "\n"
      << "mip_rel_gap = " << opts.mip_gap << "\n"
      << "threads = " << std::max(1, opts.threads) << "\n"
      << "random_seed = 0\n"
      << "primal_feasibility_tolerance = 1e-9\n"
      << "dual_feasibility_tolerance = 1e-9\n"
      << "mip_feasibility_tolerance = 1e-9\n"
      << "write_solution_style = 0\n";
  } catch (const std::exception& e) {
    sol.status = SolveStatus::kError;
    sol.diagnostic = e.what();
    return sol;
  }

  const std::string cmd = shell_quote(binary) + " --model_file " + shell_quote(mps.string()) +
                          " --solution_file " + shell_quote(sol_path.string()) +
                          " --options_file " + shell_quote(opt_path.string()) + " > " +
                          shell_quote(log_path.string()) + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (!std::filesystem::exists(sol_path)) {
    sol.status = SolveStatus::kError;
    sol.diagnostic = "solver unavailable or failed (exit " + std::to_string(rc) + "): " + binary;
  } else {
    sol = parse_solution_file(model, read_file(sol_path));
  }
  for (const auto& p : {mps, sol_path, opt_path, log_path}) std::filesystem::remove(p, ec);
  return sol;
}

}  // namespace nrcc::detail
