#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

namespace nrcc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Handle to a column of a MilpModel.
struct Var {
  int index = -1;
  bool valid() const { return index >= 0; }
  friend bool operator==(Var, Var) = default;
};

/// Affine expression sum(coef * var) + constant. Terms are not merged until
/// the expression is added to a model.
class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double constant) : constant_(constant) {}  // NOLINT
  LinExpr(Var v, double coef = 1.0) { add(v, coef); }  // NOLINT

  LinExpr& add(Var v, double coef) {
    if (coef != 0.0) terms_.emplace_back(v.index, coef);
    return *this;
  }
  LinExpr& add_constant(double c) {
    constant_ += c;
    return *this;
  }

  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double s);

  const std::vector<std::pair<int, double>>& terms() const { return terms_; }
  double constant() const { return constant_; }

  /// Terms with duplicate columns summed and zeros dropped, sorted by column.
  std::vector<std::pair<int, double>> merged() const;

 private:
  std::vector<std::pair<int, double>> terms_;
  double constant_ = 0.0;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a);
LinExpr operator*(double s, LinExpr a);
LinExpr operator*(LinExpr a, double s);

enum class Sense { kLe, kGe, kEq };
enum class ObjSense { kMinimize, kMaximize };

struct Column {
  double lo = 0.0;
  double hi = kInf;
  bool integer = false;
  std::string name;
};

struct Row {
  std::vector<std::pair<int, double>> coefs;  // merged, sorted by column
  Sense sense = Sense::kLe;
  double rhs = 0.0;
  std::string name;
};

struct SolverOptions {
  double time_limit_s = 600.0;
  double mip_gap = 1e-6;
  int threads = 1;
  /// "auto" (in-process when linked, else subprocess), "highs" or "mps".
  std::string backend = "auto";
  /// Executable used by the subprocess backend; empty picks the default.
  std::string solver_binary;
  /// Scratch directory for the subprocess backend; empty uses a temp dir.
  std::filesystem::path scratch_dir;
};

/// Applies the NRCC_SOLVER environment override, if set.
SolverOptions with_env_override(SolverOptions opts);

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solver-agnostic MILP container.
class MilpModel {
 public:
  explicit MilpModel(std::string name = "nrcc") : name_(std::move(name)) {}

  Var add_var(double lo, double hi, std::string name, bool integer = false);
  Var add_binary(std::string name) { return add_var(0.0, 1.0, std::move(name), true); }

  /// Adds `expr sense rhs`; the expression constant is moved to the rhs.
  int add_constraint(const LinExpr& expr, Sense sense, double rhs, std::string name);
  int add_le(const LinExpr& e, double rhs, std::string name) { return add_constraint(e, Sense::kLe, rhs, std::move(name)); }
  int add_ge(const LinExpr& e, double rhs, std::string name) { return add_constraint(e, Sense::kGe, rhs, std::move(name)); }
  int add_eq(const LinExpr& e, double rhs, std::string name) { return add_constraint(e, Sense::kEq, rhs, std::move(name)); }

  void set_objective(ObjSense sense, const LinExpr& expr);

  void set_bounds(Var v, double lo, double hi);
  void fix(Var v, double value) { set_bounds(v, value, value); }
  void set_integer(Var v, bool integer);

  const std::string& name() const { return name_; }
  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<Row>& rows() const { return rows_; }
  ObjSense objective_sense() const { return obj_sense_; }
  /// Dense objective coefficients, one per column.
  const std::vector<double>& objective() const { return obj_; }
  double objective_offset() const { return obj_offset_; }
  bool has_objective() const { return has_objective_; }

  std::size_t num_vars() const { return columns_.size(); }
  std::size_t num_rows() const { return rows_.size(); }
  std::vector<Var> integer_vars() const;
  Var find_var(std::string_view name) const;

  /// Column-major constraint matrix (rows x columns).
  Eigen::SparseMatrix<double> constraint_matrix() const;

  /// Throws ModelError if the model violates its structural invariants.
  void validate() const;

  SolverOptions options;

 private:
  void claim_name(const std::string& name, bool column);

  std::string name_;
  std::vector<Column> columns_;
  std::vector<Row> rows_;
  std::vector<double> obj_;
  double obj_offset_ = 0.0;
  ObjSense obj_sense_ = ObjSense::kMinimize;
  bool has_objective_ = false;
  std::unordered_map<std::string, int> col_names_;
  std::unordered_map<std::string, int> row_names_;
};

enum class SolveStatus { kOptimal, kFeasible, kInfeasible, kUnbounded, kTimeLimit, kError };

std::string_view to_string(SolveStatus s);
SolveStatus status_from_string(std::string_view s);

struct Solution {
  SolveStatus status = SolveStatus::kError;
  double objective = 0.0;
  std::vector<double> values;  // present iff has_values()
  double gap = 0.0;
  double wall_time_s = 0.0;
  std::string diagnostic;

  bool has_values() const { return !values.empty(); }
  bool ok() const { return status == SolveStatus::kOptimal || status == SolveStatus::kFeasible; }
  double value(Var v) const { return values.at(static_cast<std::size_t>(v.index)); }
  double value(const LinExpr& e) const;
};

/// True when an in-process backend was compiled in.
bool has_inprocess_backend();

Solution solve(const MilpModel& model);

/// Largest bound, row or integrality violation of `values` in `model`.
double max_violation(const MilpModel& model, const std::vector<double>& values);

/// Same model with every integrality flag dropped.
MilpModel lp_relaxation(const MilpModel& model);

void export_mps(const MilpModel& model, const std::filesystem::path& path);
std::string to_mps(const MilpModel& model);
/// Parses MPS text produced by to_mps (or any fixed/free MPS using the same
/// section subset: NAME, OBJSENSE, ROWS, COLUMNS, RHS, RANGES-free, BOUNDS).
MilpModel parse_mps(std::string_view text);
MilpModel import_mps(const std::filesystem::path& path);

namespace detail {
Solution solve_inprocess(const MilpModel& model);
Solution solve_subprocess(const MilpModel& model);
/// Reads a HiGHS-style raw solution file into values for `model`.
Solution parse_solution_file(const MilpModel& model, std::string_view text);
}  // namespace detail

}  // namespace nrcc
