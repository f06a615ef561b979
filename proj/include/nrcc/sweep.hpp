#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "nrcc/netmodel.hpp"
#include "nrcc/products.hpp"
#include "nrcc/verifier.hpp"

namespace nrcc {

using ordered_json = nlohmann::ordered_json;

struct WindowSets {
  std::string id;
  std::vector<int> service_steps;
  std::vector<int> protected_steps;
  std::vector<int> rebound_steps;
  friend bool operator==(const WindowSets&, const WindowSets&) = default;
};

/// Baseline stage output: Model 1 plus the expected-scenario peaks.
struct BaselineArtifact {
  std::string case_name;
  Model1Result m1;
  ExpectedPeaks peaks;
  std::vector<std::string> candidate_ids;
  std::vector<std::string> scenario_ids;
};

struct ProductMenu {
  std::string case_name;
  double gamma0 = 0.0;
  ExpectedPeaks peaks;
  BaselineArtifact baseline;
  int steps_per_day = 0;
  std::vector<WindowSets> windows;
  std::vector<TierResult> tiers;
  std::vector<std::map<std::string, double>> timing_s;  // per tier, keyed by stage
  std::vector<std::string> warnings;
};

struct SweepOptions {
  int jobs = 1;
};

BaselineArtifact run_baseline(const Case& c);
/// Algorithm stages for one tier; P1 and P2 are skipped when upstream stages
/// fail or the case has no windows.
ProductMenu run_sweep(const Case& c, const SweepOptions& opts = {});

/// Human-readable warnings for a solved tier (e.g. clamped durations).
std::vector<std::string> tier_warnings(const Case& c, const TierResult& t);

std::string status_string(const std::optional<SolveStatus>& s);

ordered_json plan_to_json(const InvestmentPlan& p, const std::vector<std::string>& ids);
InvestmentPlan plan_from_json(const ordered_json& j);

ordered_json baseline_to_json(const BaselineArtifact& b);
BaselineArtifact baseline_from_json(const ordered_json& j);
ordered_json p0_to_json(const TierResult& t, const std::vector<std::string>& ids);
ordered_json p1_to_json(const std::optional<P1Result>& p1, const std::vector<std::string>& ids);
ordered_json p2_to_json(const std::optional<P2Result>& p2, const std::vector<std::string>& ids);
P0Result p0_from_json(const ordered_json& j);
std::optional<P1Result> p1_from_json(const ordered_json& j);
std::optional<P2Result> p2_from_json(const ordered_json& j, Variant v);
ordered_json reports_to_json(int tier, const std::vector<WindowReport>& reports);

ordered_json menu_to_json(const ProductMenu& m);
ProductMenu menu_from_json(const ordered_json& j);
std::string menu_to_string(const ProductMenu& m);
ProductMenu parse_menu(std::string_view text);
void emit_menu(const ProductMenu& m, const std::filesystem::path& path);
ProductMenu load_menu(const std::filesystem::path& path);

/// Contents of the per-stage artifact files.
ordered_json p0_artifact(const TierResult& t, const std::vector<std::string>& ids);
ordered_json p1_artifact(int k, const std::optional<P1Result>& p1, const std::vector<std::string>& ids);
ordered_json p2_artifact(int k, Variant v, const std::optional<P2Result>& p2, const std::vector<std::string>& ids);

/// Per-tier stage files (baseline.json, tier_<k>/p0.json, p1.json,
/// p2_<q>.json) as written by the stage commands.
void write_stage_artifacts(const ProductMenu& m, const std::filesystem::path& dir);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace nrcc
