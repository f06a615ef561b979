#include "nrcc/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>

namespace nrcc {

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  constant_ += o.constant_;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  terms_.reserve(terms_.size() + o.terms_.size());
  for (auto [c, a] : o.terms_) terms_.emplace_back(c, -a);
  constant_ -= o.constant_;
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  for (auto& t : terms_) t.second *= s;
  constant_ *= s;
  return *this;
}

std::vector<std::pair<int, double>> LinExpr::merged() const {
  auto t = terms_;
  std::sort(t.begin(), t.end(), [](auto& a, auto& b) { return a.first < b.first; });
  std::vector<std::pair<int, double>> out;
  for (auto [c, a] : t) {
    if (!out.empty() && out.back().first == c)
      out.back().second += a;
    else
      out.emplace_back(c, a);
  }
  std::erase_if(out, [](auto& p) { return p.second == 0.0; });
  return out;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator-(LinExpr a) { return a *= -1.0; }
LinExpr operator*(double s, LinExpr a) { return a *= s; }
LinExpr operator*(LinExpr a, double s) { return a *= s; }

SolverOptions with_env_override(SolverOptions opts) {
  if (const char* env = std::getenv("NRCC_SOLVER"); env && *env) opts.backend = env;
  return opts;
}

void MilpModel::claim_name(const std::string& name, bool column) {
  auto& names = column ? col_names_ : row_names_;
  const int idx = static_cast<int>(column ? columns_.size() : rows_.size());
  if (name.empty()) throw ModelError("empty name");
  if (!names.emplace(name, idx).second)
    throw ModelError("duplicate " + std::string(column ? "variable" : "constraint") + " name '" + name + "'");
}

Var MilpModel::add_var(double lo, double hi, std::string name, bool integer) {
  if (std::isnan(lo) || std::isnan(hi) || lo > hi)
    throw ModelError("invalid bounds for variable '" + name + "'");
  claim_name(name, true);
  columns_.push_back(Column{lo, hi, integer, std::move(name)});
  obj_.push_back(0.0);
  return Var{static_cast<int>(columns_.size()) - 1};
}

int MilpModel::add_constraint(const LinExpr& expr, Sense sense, double rhs, std::string name) {
  auto coefs = expr.merged();
  for (auto [c, a] : coefs) {
    if (c < 0 || c >= static_cast<int>(columns_.size()))
      throw ModelError("constraint '" + name + "' references an unregistered variable");
    if (!std::isfinite(a)) throw ModelError("non-finite coefficient in constraint '" + name + "'");
  }
  const double r = rhs - expr.constant();
  if (!std::isfinite(r)) throw ModelError("non-finite rhs in constraint '" + name + "'");
  claim_name(name, false);
  rows_.push_back(Row{std::move(coefs), sense, r, std::move(name)});
  return static_cast<int>(rows_.size()) - 1;
}

void MilpModel::set_objective(ObjSense sense, const LinExpr& expr) {
  std::fill(obj_.begin(), obj_.end(), 0.0);
  for (auto [c, a] : expr.merged()) {
    if (c < 0 || c >= static_cast<int>(columns_.size()))
      throw ModelError("objective references an unregistered variable");
    obj_[static_cast<std::size_t>(c)] = a;
  }
  obj_offset_ = expr.constant();
  obj_sense_ = sense;
  has_objective_ = true;
}

void MilpModel::set_bounds(Var v, double lo, double hi) {
  if (!v.valid() || v.index >= static_cast<int>(columns_.size())) throw ModelError("unknown variable");
  if (lo > hi) throw ModelError("invalid bounds for variable '" + columns_[v.index].name + "'");
  columns_[v.index].lo = lo;
  columns_[v.index].hi = hi;
}

void MilpModel::set_integer(Var v, bool integer) {
  if (!v.valid() || v.index >= static_cast<int>(columns_.size())) throw ModelError("unknown variable");
  columns_[v.index].integer = integer;
}

std::vector<Var> MilpModel::integer_vars() const {
  std::vector<Var> out;
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j].integer) out.push_back(Var{static_cast<int>(j)});
  return out;
}

Var MilpModel::find_var(std::string_view name) const {
  auto it = col_names_.find(std::string(name));
  return it == col_names_.end() ? Var{} : Var{it->second};
}

Eigen::SparseMatrix<double> MilpModel::constraint_matrix() const {
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < rows_.size(); ++i)
    for (auto [c, a] : rows_[i].coefs) trip.emplace_back(static_cast<int>(i), c, a);
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(rows_.size()),
                                static_cast<Eigen::Index>(columns_.size()));
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

void MilpModel::validate() const {
  if (columns_.empty()) throw ModelError("model '" + name_ + "' has no variables");
  if (!has_objective_) throw ModelError("model '" + name_ + "' has no objective");
  for (const auto& c : columns_)
    if (c.lo > c.hi) throw ModelError("variable '" + c.name + "' has lo > hi");
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kFeasible: return "feasible";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kTimeLimit: return "time_limit";
    case SolveStatus::kError: return "error";
  }
  return "error";
}

SolveStatus status_from_string(std::string_view s) {
  for (auto st : {SolveStatus::kOptimal, SolveStatus::kFeasible, SolveStatus::kInfeasible,
                  SolveStatus::kUnbounded, SolveStatus::kTimeLimit, SolveStatus::kError})
    if (to_string(st) == s) return st;
  return SolveStatus::kError;
}

double Solution::value(const LinExpr& e) const {
  double acc = e.constant();
  for (auto [c, a] : e.terms()) acc += a * values.at(static_cast<std::size_t>(c));
  return acc;
}

double max_violation(const MilpModel& model, const std::vector<double>& values) {
  if (values.size() != model.num_vars()) return kInf;
  double worst = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    const auto& c = model.columns()[j];
    const double x = values[j];
    worst = std::max({worst, c.lo - x, x - c.hi});
    if (c.integer) worst = std::max(worst, std::abs(x - std::round(x)));
  }
  for (const auto& r : model.rows()) {
    double lhs = 0.0;
    for (const auto& [j, a] : r.coefs) lhs += a * values[static_cast<std::size_t>(j)];
    const double d = lhs - r.rhs;
    switch (r.sense) {
      case Sense::kLe: worst = std::max(worst, d); break;
      case Sense::kGe: worst = std::max(worst, -d); break;
      case Sense::kEq: worst = std::max(worst, std::abs(d)); break;
    }
  }
  return worst;
}

MilpModel lp_relaxation(const MilpModel& model) {
  MilpModel lp = model;
  for (Var v : model.integer_vars()) lp.set_integer(v, false);
  return lp;
}

Solution solve(const MilpModel& model) {
  try {
    model.validate();
  } catch (const ModelError& e) {
    Solution s;
    s.status = SolveStatus::kError;
    s.diagnostic = e.what();
    return s;
  }
  const auto opts = with_env_override(model.options);
  const auto start = std::chrono::steady_clock::now();
  Solution sol;
  if (opts.backend == "mps" || (opts.backend == "auto" && !has_inprocess_backend())) {
    sol = detail::solve_subprocess(model);
  } else if (opts.backend == "highs" || opts.backend == "auto") {
    if (!has_inprocess_backend()) {
      sol.status = SolveStatus::kError;
      sol.diagnostic = "solver unavailable: in-process HiGHS backend not linked";
    } else {
      sol = detail::solve_inprocess(model);
    }
  } else {
    sol.status = SolveStatus::kError;
    sol.diagnostic = "solver unavailable: unknown backend '" + opts.backend + "'";
  }
  sol.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

}  // namespace nrcc
