// nrcc: budget-sweep planning front end.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 solver error, 4 infeasible
// stage.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nrcc/plot.hpp"
#include "nrcc/sweep.hpp"
#include "nrcc/verifier.hpp"

namespace fs = std::filesystem;
using namespace nrcc;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kSolver = 3, kInfeasible = 4 };

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Args {
  std::string case_dir;
  std::string out = "out";
  int tier = -1;
  std::string variant;
  int samples = 100;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string solver;
  std::optional<double> time_limit;
  std::optional<double> gap;
};

bool solved(SolveStatus s) { return s == SolveStatus::kOptimal || s == SolveStatus::kFeasible; }

int exit_for(SolveStatus s) {
  if (solved(s)) return kOk;
  if (s == SolveStatus::kInfeasible || s == SolveStatus::kUnbounded) return kInfeasible;
  return kSolver;
}

Case load(const Args& a) {
  if (a.case_dir.empty()) throw UsageError("--case is required");
  Case c = load_case_dir(a.case_dir);
  if (!a.solver.empty()) c.solver.backend = a.solver;
  if (a.time_limit) c.solver.time_limit_s = *a.time_limit;
  if (a.gap) c.solver.mip_gap = *a.gap;
  return c;
}

ordered_json read_json(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw DataError("missing " + what + ": " + p.string());
  try {
    return ordered_json::parse(read_text_file(p));
  } catch (const ordered_json::exception& e) {
    throw DataError(p.string() + ": malformed " + what + ": " + e.what());
  }
}

void write_json(const fs::path& p, const ordered_json& j) {
  write_text(p, j.dump(2) + "\n");
  std::cout << "wrote " << p.string() << "\n";
}

fs::path tier_dir(const Args& a) { return fs::path(a.out) / ("tier_" + std::to_string(a.tier)); }

void require_tier(const Args& a, const Case& c) {
  if (a.tier < 0) throw UsageError("--tier is required");
  if (static_cast<std::size_t>(a.tier) >= c.budget.tiers.size())
    throw DataError("tier " + std::to_string(a.tier) + " is not configured (case has " +
                    std::to_string(c.budget.tiers.size()) + " tiers)");
}

BaselineArtifact load_baseline(const Args& a, const Case& c) {
  auto b = baseline_from_json(read_json(fs::path(a.out) / "baseline.json", "baseline result"));
  if (b.candidate_ids.size() != c.network.candidates.size() || b.m1.baseline_kw.size() != c.scenarios.scenarios.size())
    throw DataError("baseline result does not match the case");
  return b;
}

TierResult load_tier(const Args& a, const Case& c, bool need_p1) {
  TierResult t;
  const auto p0j = read_json(tier_dir(a) / "p0.json", "tier result");
  t.k = p0j.at("k").get<int>();
  t.delta_gamma = p0j.at("delta_gamma").get<double>();
  t.gamma = p0j.at("gamma").get<double>();
  t.p0 = p0_from_json(p0j.at("p0"));
  if (t.k != a.tier || t.delta_gamma != c.budget.tiers[static_cast<std::size_t>(a.tier)])
    throw DataError("tier result does not match the configured tier");
  if (need_p1) {
    t.p1 = p1_from_json(read_json(tier_dir(a) / "p1.json", "tier result").at("p1"));
    if (!t.p1 || !solved(t.p1->status)) throw DataError("missing tier result: no solved envelope for tier " + std::to_string(a.tier));
  }
  return t;
}

int cmd_baseline(const Args& a) {
  const Case c = load(a);
  const auto b = run_baseline(c);
  write_json(fs::path(a.out) / "baseline.json", baseline_to_json(b));
  std::cout << "gamma0 = " << b.m1.gamma0 << " $/yr\n";
  return kOk;
}

int cmd_p0(const Args& a) {
  const Case c = load(a);
  require_tier(a, c);
  const auto b = load_baseline(a, c);
  TierResult t;
  t.k = a.tier;
  t.delta_gamma = c.budget.tiers[static_cast<std::size_t>(a.tier)];
  t.gamma = b.m1.gamma0 + t.delta_gamma;
  t.p0 = solve_model2(c, b.m1, b.peaks, t.delta_gamma);
  write_json(tier_dir(a) / "p0.json", p0_artifact(t, b.candidate_ids));
  if (solved(t.p0.status)) std::cout << "lambda_d = " << t.p0.lambda_d << " kW, lambda_r = " << t.p0.lambda_r << " kW\n";
  return exit_for(t.p0.status);
}

int cmd_p1(const Args& a) {
  const Case c = load(a);
  require_tier(a, c);
  auto t = load_tier(a, c, false);
  const auto b = load_baseline(a, c);
  if (!solved(t.p0.status)) throw DataError("missing tier result: peak caps for tier " + std::to_string(a.tier) + " are " +
                                            std::string(to_string(t.p0.status)));
  std::optional<P1Result> p1;
  if (!c.windows.empty()) p1 = solve_model3(c, b.m1, t.p0, t.delta_gamma);
  write_json(tier_dir(a) / "p1.json", p1_artifact(t.k, p1, b.candidate_ids));
  if (!p1) return kOk;
  for (const auto& w : p1->windows)
    std::cout << w.id << ": r_down = " << w.r_down << " kW, r_up = " << w.r_up << " kW\n";
  return exit_for(p1->status);
}

int cmd_p2(const Args& a) {
  const Case c = load(a);
  require_tier(a, c);
  if (a.variant.empty()) throw UsageError("--variant is required");
  const Variant v = variant_from_string(a.variant);
  const auto t = load_tier(a, c, true);
  const auto b = load_baseline(a, c);
  const auto p2 = solve_model4(c, b.m1, t.p0, *t.p1, t.delta_gamma, v);
  write_json(tier_dir(a) / ("p2_" + a.variant + ".json"), p2_artifact(t.k, v, p2, b.candidate_ids));
  if (p2.eta) std::cout << "eta_" << a.variant << " = " << *p2.eta << " kW\n";
  else std::cout << "P2-" << a.variant << " " << to_string(p2.status) << "\n";
  return exit_for(p2.status);
}

fs::path menu_path(const std::string& out) {
  const fs::path p(out);
  return p.extension() == ".json" ? p : p / "menu.json";
}

int cmd_sweep(const Args& a) {
  const Case c = load(a);
  const auto menu = run_sweep(c, SweepOptions{a.jobs});
  const auto path = menu_path(a.out);
  const auto dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  write_stage_artifacts(menu, dir);
  emit_menu(menu, path);
  std::cout << "wrote " << path.string() << "\n";
  for (const auto& w : menu.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& t : menu.tiers) {
    std::cout << "tier " << t.k << " (+" << t.delta_gamma << " $/yr): P0 " << to_string(t.p0.status);
    if (solved(t.p0.status)) std::cout << " lambda_d=" << t.p0.lambda_d;
    std::cout << ", P1 " << status_string(t.p1 ? std::optional(t.p1->status) : std::nullopt);
    for (Variant v : {Variant::kA, Variant::kB, Variant::kC}) {
      const auto& p2 = t.p2[static_cast<std::size_t>(v)];
      std::cout << ", P2-" << to_string(v) << " " << status_string(p2 ? std::optional(p2->status) : std::nullopt);
      if (p2 && p2->eta) std::cout << " eta=" << *p2->eta;
    }
    std::cout << "\n";
  }
  return kOk;
}

int cmd_verify(const Args& a) {
  const Case c = load(a);
  require_tier(a, c);
  const auto t = load_tier(a, c, true);
  const auto b = load_baseline(a, c);
  const auto reports = verify_envelope(c, b.m1, t, VerifyOptions{a.samples, a.seed, a.jobs});
  write_json(fs::path(a.out) / ("verify_tier_" + std::to_string(a.tier) + ".json"), reports_to_json(a.tier, reports));
  for (const auto& r : reports)
    std::cout << r.window << ": " << r.violations << "/" << r.n << " calls violated (screening " << r.screening_violations
              << "/" << r.screening_n << ", random " << r.random_violations << "/" << r.random_n
              << "), worst residual " << r.worst_residual_kw << " kW\n";
  return kOk;
}

int cmd_plot(const Args& a) {
  const auto path = menu_path(a.out);
  if (!fs::exists(path)) throw DataError("missing menu: " + path.string());
  const auto menu = load_menu(path);
  const auto dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  write_text(dir / "frontier.svg", render_frontier_svg(menu));
  write_text(dir / "rebound_profiles.svg", render_profiles_svg(menu, a.tier));
  std::cout << "wrote " << (dir / "frontier.svg").string() << "\nwrote " << (dir / "rebound_profiles.svg").string()
            << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Netload range cost curve planning toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Args a;
  app.add_option("--case", a.case_dir, "Case directory (network.json, scenarios.csv, config.json)");
  app.add_option("--out", a.out, "Output directory (or menu path for sweep/plot)");
  app.add_option("--jobs", a.jobs, "Parallel solver jobs")->check(CLI::PositiveNumber);
  app.add_option("--solver", a.solver, "Solver backend")->check(CLI::IsMember({"auto", "highs", "mps"}));
  app.add_option("--time-limit", a.time_limit, "Per-model time limit (s)")->check(CLI::PositiveNumber);
  app.add_option("--gap", a.gap, "Relative MIP gap")->check(CLI::NonNegativeNumber);

  auto* baseline = app.add_subcommand("baseline", "Least-cost planning (baseline budget and netload)");
  auto* p0 = app.add_subcommand("p0", "Peak caps for one tier");
  auto* p1 = app.add_subcommand("p1", "Service-window envelope for one tier");
  auto* p2 = app.add_subcommand("p2", "Rebound-governed envelope for one tier and variant");
  auto* sweep = app.add_subcommand("sweep", "Full budget sweep");
  auto* verify = app.add_subcommand("verify", "Sampled deliverability check of a tier envelope");
  auto* plot = app.add_subcommand("plot", "Render SVG figures from a menu");
  for (auto* sc : {p0, p1, p2, verify}) sc->add_option("--tier", a.tier, "Tier index")->check(CLI::NonNegativeNumber);
  plot->add_option("--tier", a.tier, "Tier shown in the profile figure (default: last solved)");
  p2->add_option("--variant", a.variant, "Governance variant")->check(CLI::IsMember({"a", "b", "c"}));
  verify->add_option("--samples", a.samples, "Random calls per window")->check(CLI::NonNegativeNumber);
  verify->add_option("--seed", a.seed, "Sampler seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (!a.solver.empty()) ::setenv("NRCC_SOLVER", a.solver.c_str(), 1);

  try {
    if (baseline->parsed()) return cmd_baseline(a);
    if (p0->parsed()) return cmd_p0(a);
    if (p1->parsed()) return cmd_p1(a);
    if (p2->parsed()) return cmd_p2(a);
    if (sweep->parsed()) return cmd_sweep(a);
    if (verify->parsed()) return cmd_verify(a);
    if (plot->parsed()) return cmd_plot(a);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_for(e.status) == kOk ? kSolver : exit_for(e.status);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const CaseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolver;
  }
  return kUsage;
}
