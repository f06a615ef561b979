#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "nrcc/milp.hpp"
#include "support.hpp"

using namespace nrcc;

namespace {

MilpModel max_x() {
  MilpModel m("maxx");
  auto x = m.add_var(0.0, 5.0, "x");
  m.set_objective(ObjSense::kMaximize, x);
  return m;
}

MilpModel infeasible() {
  MilpModel m("infeas");
  auto x = m.add_var(-kInf, kInf, "x");
  m.add_ge(x, 1.0, "lo");
  m.add_le(x, 0.0, "hi");
  m.set_objective(ObjSense::kMinimize, LinExpr(0.0));
  return m;
}

MilpModel knapsack() {
  MilpModel m("knap");
  auto a = m.add_binary("a");
  auto b = m.add_binary("b");
  auto c = m.add_binary("c");
  m.add_le(2.0 * LinExpr(a) + b + c, 2.0, "cap");
  m.set_objective(ObjSense::kMaximize, 3.0 * LinExpr(a) + 2.0 * LinExpr(b) + 2.0 * LinExpr(c));
  return m;
}

MilpModel with_backend(MilpModel m, const std::string& backend) {
  m.options.backend = backend;
  return m;
}

/// Random bounded model with mixed integrality and all three row senses.
MilpModel random_model(std::mt19937_64& rng, bool bounded) {
  std::uniform_int_distribution<int> nv(1, 8), nr(0, 6), pick(0, 9);
  std::uniform_real_distribution<double> coef(-10.0, 10.0), bnd(0.0, 20.0);
  MilpModel m("rand");
  const int n = nv(rng);
  std::vector<Var> vars;
  for (int i = 0; i < n; ++i) {
    double lo = -bnd(rng), hi = bnd(rng);
    if (!bounded && pick(rng) == 0) lo = -kInf;
    if (!bounded && pick(rng) == 0) hi = kInf;
    const bool integer = pick(rng) < 3;
    if (integer && pick(rng) < 5) lo = 0.0, hi = 1.0;
    vars.push_back(m.add_var(lo, hi, "x" + std::to_string(i), integer));
  }
  const int rows = nr(rng);
  for (int r = 0; r < rows; ++r) {
    LinExpr e;
    for (auto v : vars)
      if (pick(rng) < 6) e.add(v, coef(rng));
    const int s = pick(rng) % 3;
    // Rows through the origin-ish keep most instances feasible.
    const double rhs = s == 2 ? 0.0 : bnd(rng) * (s == 0 ? 1.0 : -1.0);
    m.add_constraint(e, static_cast<Sense>(s), rhs, "r" + std::to_string(r));
  }
  LinExpr obj;
  for (auto v : vars) obj.add(v, coef(rng));
  m.set_objective(pick(rng) < 5 ? ObjSense::kMinimize : ObjSense::kMaximize, obj);
  return m;
}

}  // namespace

TEST_CASE("solve: bounded maximization") {
  auto s = solve(max_x());
  REQUIRE(s.status == SolveStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(5.0));
  CHECK(s.values.at(0) == doctest::Approx(5.0));
}

TEST_CASE("solve: contradictory bounds are infeasible") {
  auto s = solve(infeasible());
  CHECK(s.status == SolveStatus::kInfeasible);
  CHECK_FALSE(s.has_values());
}

TEST_CASE("solve: three-item knapsack") {
  auto s = solve(knapsack());
  REQUIRE(s.status == SolveStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(4.0));
  for (double v : s.values) CHECK(std::min(std::abs(v), std::abs(v - 1.0)) <= 1e-6);
  CHECK(max_violation(knapsack(), s.values) <= 1e-9);
}

TEST_CASE("solve: subprocess backend matches in-process") {
  for (auto make : {max_x, infeasible, knapsack}) {
    auto a = solve(with_backend(make(), "highs"));
    auto b = solve(with_backend(make(), "mps"));
    INFO(b.diagnostic);
    CHECK(a.status == b.status);
    if (a.ok()) CHECK(a.objective == doctest::Approx(b.objective));
  }
  CHECK(solve(with_backend(knapsack(), "mps")).objective == doctest::Approx(4.0));
}

TEST_CASE("solve: unknown backend reports solver unavailable") {
  auto s = solve(with_backend(max_x(), "cplex"));
  CHECK(s.status == SolveStatus::kError);
  CHECK(s.diagnostic.find("solver unavailable") != std::string::npos);
}

TEST_CASE("solve: missing solver binary is an error status") {
  auto m = with_backend(knapsack(), "mps");
  m.options.solver_binary = "/nonexistent/solver";
  auto s = solve(m);
  CHECK(s.status == SolveStatus::kError);
  CHECK_FALSE(s.diagnostic.empty());
}

TEST_CASE("solve: malformed model yields error status") {
  MilpModel m("noobj");
  m.add_var(0, 1, "x");
  auto s = solve(m);
  CHECK(s.status == SolveStatus::kError);
  CHECK(s.diagnostic.find("objective") != std::string::npos);
}

TEST_CASE("env override selects the backend") {
  ::setenv("NRCC_SOLVER", "mps", 1);
  CHECK(with_env_override(SolverOptions{}).backend == "mps");
  ::unsetenv("NRCC_SOLVER");
  CHECK(with_env_override(SolverOptions{}).backend == "auto");
}

TEST_CASE("model invariants") {
  MilpModel m;
  auto x = m.add_var(0, 1, "x");
  CHECK_THROWS_AS(m.add_var(0, 1, "x"), ModelError);
  CHECK_THROWS_AS(m.add_var(2, 1, "y"), ModelError);
  CHECK_THROWS_AS(m.add_le(LinExpr(Var{7}), 1.0, "bad"), ModelError);
  m.add_le(x, 1.0, "r");
  CHECK_THROWS_AS(m.add_le(x, 1.0, "r"), ModelError);
  CHECK_THROWS_AS(m.set_bounds(x, 1.0, 0.0), ModelError);
}

TEST_CASE("linear expressions merge duplicate terms and fold constants") {
  MilpModel m;
  auto x = m.add_var(0, 10, "x");
  auto y = m.add_var(0, 10, "y");
  LinExpr e = 2.0 * LinExpr(x) + y - LinExpr(x) + 3.0 - LinExpr(y);
  auto merged = e.merged();
  REQUIRE(merged.size() == 1);
  CHECK(merged[0] == std::pair<int, double>{x.index, 1.0});
  CHECK(e.constant() == 3.0);
  m.add_le(e, 5.0, "r");
  CHECK(m.rows()[0].rhs == 2.0);
  auto a = m.constraint_matrix();
  CHECK(a.rows() == 1);
  CHECK(a.cols() == 2);
  CHECK(a.coeff(0, x.index) == 1.0);
  CHECK(a.coeff(0, y.index) == 0.0);
}

TEST_CASE("export: empty model is an error") {
  MilpModel m("empty");
  CHECK_THROWS_AS(to_mps(m), ModelError);
  CHECK_THROWS_AS(export_mps(m, std::filesystem::temp_directory_path() / "nrcc_empty.mps"), ModelError);
}

TEST_CASE("export: fixed examples round-trip to equal optima") {
  const auto dir = test::scratch_dir("mps");
  for (auto make : {max_x, infeasible, knapsack}) {
    const auto m = make();
    export_mps(m, dir / "m.mps");
    const auto back = import_mps(dir / "m.mps");
    const auto a = solve(m), b = solve(back);
    CHECK(a.status == b.status);
    if (a.ok()) CHECK(a.objective == doctest::Approx(b.objective));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("property: MPS round-trip preserves every number and flag") {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = random_model(rng, trial % 2 == 0);
    const auto back = parse_mps(to_mps(m));
    REQUIRE(back.num_vars() == m.num_vars());
    REQUIRE(back.num_rows() == m.num_rows());
    CHECK(back.objective_sense() == m.objective_sense());
    for (std::size_t j = 0; j < m.num_vars(); ++j) {
      CHECK(back.columns()[j].lo == m.columns()[j].lo);
      CHECK(back.columns()[j].hi == m.columns()[j].hi);
      CHECK(back.columns()[j].integer == m.columns()[j].integer);
      CHECK(back.objective()[j] == m.objective()[j]);
    }
    for (std::size_t i = 0; i < m.num_rows(); ++i) {
      CHECK(back.rows()[i].sense == m.rows()[i].sense);
      CHECK(back.rows()[i].rhs == m.rows()[i].rhs);
      CHECK(back.rows()[i].coefs == m.rows()[i].coefs);
    }
  }
}

TEST_CASE("property: round-tripped bounded models solve to the same optimum") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const auto m = random_model(rng, true);
    const auto a = solve(m), b = solve(parse_mps(to_mps(m)));
    CHECK(a.status == b.status);
    if (a.ok() && b.ok()) CHECK(test::close(a.objective, b.objective));
  }
}

TEST_CASE("property: LP relaxation bounds the MILP optimum") {
  std::mt19937_64 rng(99);
  int compared = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto m = random_model(rng, true);
    const auto mip = solve(m);
    const auto lp = solve(lp_relaxation(m));
    if (!mip.ok()) continue;
    REQUIRE(lp.ok());
    ++compared;
    if (m.objective_sense() == ObjSense::kMaximize) CHECK(lp.objective >= mip.objective - 1e-6 * std::max(1.0, std::abs(mip.objective)));
    else CHECK(lp.objective <= mip.objective + 1e-6 * std::max(1.0, std::abs(mip.objective)));
  }
  CHECK(compared > 10);
  const auto k = solve(lp_relaxation(knapsack()));
  CHECK(k.objective >= 4.0);
}

TEST_CASE("determinism: identical model gives identical result") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = random_model(rng, true);
    const auto a = solve(m), b = solve(m);
    CHECK(a.status == b.status);
    if (a.ok()) CHECK(a.objective == b.objective);
  }
}

TEST_CASE("solution file parsing") {
  const auto m = knapsack();
  const auto ok = detail::parse_solution_file(m, "Model status\nOptimal\n\n# Primal solution values\nFeasible\nObjective 4\n# Columns 3\nC0000000 0\nC0000001 1\nC0000002 1\n");
  CHECK(ok.status == SolveStatus::kOptimal);
  CHECK(ok.objective == doctest::Approx(4.0));
  CHECK(ok.values == std::vector<double>{0, 1, 1});
  CHECK(detail::parse_solution_file(m, "garbage").status == SolveStatus::kError);
}
