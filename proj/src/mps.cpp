// Fixed-form MPS writer and a whitespace-tokenizing reader for the same
// section subset.

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "nrcc/milp.hpp"

namespace nrcc {

namespace {

constexpr std::size_t kNameWidth = 8;

std::string num(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

// Field starts (0-based): 1, 4, 14, 24, 39, 49. Numeric fields longer than
// twelve characters push later fields right instead of losing digits.
std::string line(std::string_view f1, std::string_view f2, std::string_view f3 = {},
                 std::string_view f4 = {}, std::string_view f5 = {}, std::string_view f6 = {}) {
  static constexpr std::size_t kStart[] = {1, 4, 14, 24, 39, 49};
  const std::string_view fields[] = {f1, f2, f3, f4, f5, f6};
  std::string out;
  for (std::size_t k = 0; k < 6; ++k) {
    if (fields[k].empty()) continue;
    if (out.size() < kStart[k]) out.append(kStart[k] - out.size(), ' ');
    else out += ' ';
    out += fields[k];
  }
  return out + "\n";
}

bool fits_fixed(const std::string& n) {
  return !n.empty() && n.size() <= kNameWidth && n.find_first_of(" \t$*") == std::string::npos;
}

}  // namespace

std::string to_mps(const MilpModel& model) {
  if (model.num_vars() == 0) throw ModelError("cannot export an empty model");
  if (!model.has_objective()) throw ModelError("cannot export a model without objective");

  // Names longer than the fixed-form field are replaced wholesale by indexed
  // names so that no two entities collide after truncation.
  bool keep = true;
  for (const auto& c : model.columns()) keep = keep && fits_fixed(c.name);
  for (const auto& r : model.rows()) keep = keep && fits_fixed(r.name) && r.name != "OBJ";
  auto col_name = [&](std::size_t j) {
    if (keep) return model.columns()[j].name;
    char buf[24];
    std::snprintf(buf, sizeof buf, "C%07zu", j);
    return std::string(buf);
  };
  auto row_name = [&](std::size_t i) {
    if (keep) return model.rows()[i].name;
    char buf[24];
    std::snprintf(buf, sizeof buf, "R%07zu", i);
    return std::string(buf);
  };
  if (!keep && (model.num_vars() > 9'999'999 || model.num_rows() > 9'999'999))
    throw ModelError("model too large for fixed-form MPS names");

  std::ostringstream os;
  os << "* nrcc fixed-form MPS export\n";
  os << "NAME          " << (fits_fixed(model.name()) ? model.name() : "NRCC") << "\n";
  os << "OBJSENSE\n    " << (model.objective_sense() == ObjSense::kMaximize ? "MAX" : "MIN") << "\n";
  os << "ROWS\n";
  os << line("N", "OBJ");
  for (std::size_t i = 0; i < model.num_rows(); ++i) {
    const auto s = model.rows()[i].sense;
    os << line(s == Sense::kLe ? "L" : s == Sense::kGe ? "G" : "E", row_name(i));
  }

  // Column-major pass over the rows.
  std::vector<std::vector<std::pair<std::size_t, double>>> by_col(model.num_vars());
  for (std::size_t i = 0; i < model.num_rows(); ++i)
    for (auto [c, a] : model.rows()[i].coefs) by_col[static_cast<std::size_t>(c)].emplace_back(i, a);

  os << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (std::size_t j = 0; j < model.num_vars(); ++j) {
    const bool is_int = model.columns()[j].integer;
    if (is_int != in_int) {
      char buf[24];
      std::snprintf(buf, sizeof buf, "M%07d", marker++);
      os << line("", buf, "'MARKER'", "", is_int ? "'INTORG'" : "'INTEND'");
      in_int = is_int;
    }
    const auto name = col_name(j);
    const double c = model.objective()[j];
    // Every column gets at least one entry so it survives re-import.
    if (c != 0.0 || by_col[j].empty()) os << line("", name, "OBJ", num(c));
    for (auto [i, a] : by_col[j]) os << line("", name, row_name(i), num(a));
  }
  if (in_int) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "M%07d", marker++);
    os << line("", buf, "'MARKER'", "", "'INTEND'");
  }

  os << "RHS\n";
  if (model.objective_offset() != 0.0) os << line("", "RHS", "OBJ", num(-model.objective_offset()));
  for (std::size_t i = 0; i < model.num_rows(); ++i)
    if (model.rows()[i].rhs != 0.0) os << line("", "RHS", row_name(i), num(model.rows()[i].rhs));

  os << "BOUNDS\n";
  for (std::size_t j = 0; j < model.num_vars(); ++j) {
    const auto& c = model.columns()[j];
    const auto name = col_name(j);
    if (c.integer && c.lo == 0.0 && c.hi == 1.0) {
      os << line("BV", "BND", name);
    } else if (c.lo == c.hi) {
      os << line("FX", "BND", name, num(c.lo));
    } else if (c.lo == -kInf && c.hi == kInf) {
      os << line("FR", "BND", name);
    } else {
      if (c.lo == -kInf)
        os << line("MI", "BND", name);
      else
        os << line("LO", "BND", name, num(c.lo));
      if (c.hi != kInf)
        os << line("UP", "BND", name, num(c.hi));
      else
        os << line("PL", "BND", name);
    }
  }
  os << "ENDATA\n";
  return os.str();
}

void export_mps(const MilpModel& model, const std::filesystem::path& path) {
  const auto text = to_mps(model);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

MilpModel parse_mps(std::string_view text) {
  enum class Section { kNone, kObjSense, kRows, kColumns, kRhs, kBounds, kDone };
  Section sec = Section::kNone;
  std::string name = "NRCC";
  std::string obj_row;
  ObjSense sense = ObjSense::kMinimize;

  struct PendingRow {
    Sense sense;
    double rhs = 0.0;
    LinExpr expr;
  };
  std::vector<std::string> row_order;
  std::unordered_map<std::string, PendingRow> rows;
  std::vector<std::string> col_order;
  std::unordered_map<std::string, std::size_t> col_index;
  struct PendingCol {
    double lo = 0.0, hi = kInf, obj = 0.0;
    bool integer = false, hi_set = false;
  };
  std::vector<PendingCol> cols;
  double obj_offset = 0.0;
  bool in_int = false;

  auto to_double = [](const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      if (s == "Inf" || s == "inf" || s == "1e+30" || s == "Infinity") return kInf;
      if (s == "-Inf" || s == "-inf" || s == "-Infinity") return -kInf;
      throw ModelError("bad MPS number '" + s + "'");
    }
    if (v >= 1e30) return kInf;
    if (v <= -1e30) return -kInf;
    return v;
  };
  auto col_of = [&](const std::string& n) -> std::size_t {
    auto it = col_index.find(n);
    if (it != col_index.end()) return it->second;
    col_index.emplace(n, cols.size());
    col_order.push_back(n);
    cols.push_back(PendingCol{});
    cols.back().integer = in_int;
    if (in_int) cols.back().hi = kInf;
    return cols.size() - 1;
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw[0] == '*') continue;
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (raw[0] != ' ' && raw[0] != '\t') {
      const auto& h = tok[0];
      if (h == "NAME") {
        if (tok.size() > 1) name = tok[1];
      } else if (h == "OBJSENSE") {
        sec = Section::kObjSense;
        if (tok.size() > 1) sense = tok[1] == "MAX" || tok[1] == "MAXIMIZE" ? ObjSense::kMaximize : ObjSense::kMinimize;
      } else if (h == "ROWS") {
        sec = Section::kRows;
      } else if (h == "COLUMNS") {
        sec = Section::kColumns;
      } else if (h == "RHS") {
        sec = Section::kRhs;
      } else if (h == "BOUNDS") {
        sec = Section::kBounds;
      } else if (h == "ENDATA") {
        sec = Section::kDone;
        break;
      } else {
        throw ModelError("unsupported MPS section '" + h + "'");
      }
      continue;
    }
    switch (sec) {
      case Section::kObjSense:
        sense = tok[0] == "MAX" || tok[0] == "MAXIMIZE" ? ObjSense::kMaximize : ObjSense::kMinimize;
        break;
      case Section::kRows: {
        if (tok.size() < 2) throw ModelError("bad ROWS line: " + raw);
        if (tok[0] == "N") {
          if (obj_row.empty()) obj_row = tok[1];
          break;
        }
        Sense s = tok[0] == "L" ? Sense::kLe : tok[0] == "G" ? Sense::kGe : Sense::kEq;
        if (tok[0] != "L" && tok[0] != "G" && tok[0] != "E") throw ModelError("bad row type: " + raw);
        row_order.push_back(tok[1]);
        rows.emplace(tok[1], PendingRow{s, 0.0, {}});
        break;
      }
      case Section::kColumns: {
        if (tok.size() >= 3 && tok[1] == "'MARKER'") {
          in_int = tok.back() == "'INTORG'";
          break;
        }
        if (tok.size() != 3 && tok.size() != 5) throw ModelError("bad COLUMNS line: " + raw);
        const auto j = col_of(tok[0]);
        for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
          const double a = to_double(tok[k + 1]);
          if (tok[k] == obj_row) {
            cols[j].obj = a;
          } else {
            auto it = rows.find(tok[k]);
            if (it == rows.end()) throw ModelError("unknown row '" + tok[k] + "'");
            it->second.expr.add(Var{static_cast<int>(j)}, a);
          }
        }
        break;
      }
      case Section::kRhs: {
        if (tok.size() != 3 && tok.size() != 5) throw ModelError("bad RHS line: " + raw);
        for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
          const double v = to_double(tok[k + 1]);
          if (tok[k] == obj_row) {
            obj_offset = -v;
          } else {
            auto it = rows.find(tok[k]);
            if (it == rows.end()) throw ModelError("unknown row '" + tok[k] + "'");
            it->second.rhs = v;
          }
        }
        break;
      }
      case Section::kBounds: {
        if (tok.size() < 3) throw ModelError("bad BOUNDS line: " + raw);
        const auto& type = tok[0];
        auto it = col_index.find(tok[2]);
        if (it == col_index.end()) throw ModelError("unknown column '" + tok[2] + "'");
        auto& c = cols[it->second];
        const double v = tok.size() > 3 ? to_double(tok[3]) : 0.0;
        if (type == "LO") c.lo = v;
        else if (type == "UP") { c.hi = v; c.hi_set = true; }
        else if (type == "FX") { c.lo = v; c.hi = v; c.hi_set = true; }
        else if (type == "FR") { c.lo = -kInf; c.hi = kInf; c.hi_set = true; }
        else if (type == "MI") c.lo = -kInf;
        else if (type == "PL") { c.hi = kInf; c.hi_set = true; }
        else if (type == "BV") { c.lo = 0.0; c.hi = 1.0; c.integer = true; c.hi_set = true; }
        else throw ModelError("unsupported bound type '" + type + "'");
        break;
      }
      default:
        throw ModelError("data outside a section: " + raw);
    }
  }
  if (sec != Section::kDone) throw ModelError("MPS text missing ENDATA");

  MilpModel m(name);
  LinExpr obj(obj_offset);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    auto& c = cols[j];
    // Integer columns with no explicit upper bound default to binary.
    if (c.integer && !c.hi_set) c.hi = 1.0;
    const Var v = m.add_var(c.lo, c.hi, col_order[j], c.integer);
    obj.add(v, c.obj);
  }
  for (const auto& rn : row_order) {
    const auto& r = rows.at(rn);
    m.add_constraint(r.expr, r.sense, r.rhs, rn);
  }
  m.set_objective(sense, obj);
  return m;
}

MilpModel import_mps(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_mps(ss.str());
}

}  // namespace nrcc
