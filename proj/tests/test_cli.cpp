#include <doctest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

#include <json.hpp>

#include "nrcc/plot.hpp"
#include "nrcc/sweep.hpp"
#include "support.hpp"

using namespace nrcc;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;  // stdout and stderr
};

Run nrcc_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + std::string(NRCC_CLI_BINARY) + "' " + args + " 2>&1";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) r.output += buf.data();
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string toy6_arg() { return "--case '" + test::toy6_dir().string() + "'"; }

struct ScratchDir {
  fs::path path;
  ~ScratchDir() { fs::remove_all(path); }
};

/// One full sweep through the CLI shared by the tests below.
const fs::path& sweep_dir() {
  static const ScratchDir dir = [] {
    auto d = test::scratch_dir("cli_sweep");
    const auto r = nrcc_cli("sweep " + toy6_arg() + " --out '" + (d / "menu.json").string() + "' --jobs 2");
    INFO(r.output);
    REQUIRE(r.code == 0);
    return ScratchDir{d};
  }();
  return dir.path;
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("sweep writes a schema-valid menu") {
  const auto menu = sweep_dir() / "menu.json";
  REQUIRE(fs::exists(menu));
  const test::SchemaValidator v(nlohmann::json::parse(read_text_file(test::schema_path())));
  CHECK(v.validate(nlohmann::json::parse(read_text_file(menu))).empty());
  CHECK(fs::exists(sweep_dir() / "baseline.json"));
  CHECK(fs::exists(sweep_dir() / "tier_3" / "p2_c.json"));
}

TEST_CASE("sweep into a directory writes menu.json there") {
  const auto d = test::scratch_dir("cli_dir");
  auto c = test::toy6();
  c.budget.tiers = {0.0};
  save_case_dir(c, d / "case");
  const auto r = nrcc_cli("sweep --case '" + (d / "case").string() + "' --out '" + (d / "out").string() + "'");
  CHECK(r.code == 0);
  CHECK(fs::exists(d / "out" / "menu.json"));
  fs::remove_all(d);
}

TEST_CASE("usage errors exit 1") {
  auto r = nrcc_cli("p2 " + toy6_arg() + " --tier 1 --variant d");
  CHECK(r.code == 1);
  CHECK(contains(r.output, "--variant"));
  CHECK(nrcc_cli("").code == 1);
  CHECK(nrcc_cli("frobnicate").code == 1);
  CHECK(nrcc_cli("p0 --out /tmp").code == 1);
  CHECK(nrcc_cli("p0 " + toy6_arg() + " --out /tmp").code == 1);
  CHECK(nrcc_cli("sweep " + toy6_arg() + " --solver cplex").code == 1);
  CHECK(nrcc_cli("--help").code == 0);
}

TEST_CASE("verify before envelope outputs exist is a data error") {
  const auto d = test::scratch_dir("cli_missing");
  auto r = nrcc_cli("verify " + toy6_arg() + " --out '" + d.string() + "' --tier 1");
  CHECK(r.code == 2);
  CHECK(contains(r.output, "missing tier result"));
  REQUIRE(nrcc_cli("baseline " + toy6_arg() + " --out '" + d.string() + "'").code == 0);
  REQUIRE(nrcc_cli("p0 " + toy6_arg() + " --out '" + d.string() + "' --tier 1").code == 0);
  r = nrcc_cli("verify " + toy6_arg() + " --out '" + d.string() + "' --tier 1");
  CHECK(r.code == 2);
  CHECK(contains(r.output, "missing tier result"));
  CHECK(nrcc_cli("p0 " + toy6_arg() + " --out '" + d.string() + "' --tier 7").code == 2);
  CHECK(nrcc_cli("baseline --case /nonexistent --out '" + d.string() + "'").code == 2);
  fs::remove_all(d);
}

TEST_CASE("stage commands reproduce the sweep artifacts") {
  const auto d = test::scratch_dir("cli_stages");
  const std::string io = toy6_arg() + " --out '" + d.string() + "'";
  REQUIRE(nrcc_cli("baseline " + io).code == 0);
  std::vector<fs::path> files{"baseline.json"};
  for (int k = 0; k < 4; ++k) {
    const std::string t = " --tier " + std::to_string(k);
    REQUIRE(nrcc_cli("p0 " + io + t).code == 0);
    REQUIRE(nrcc_cli("p1 " + io + t).code == 0);
    for (const char* v : {"a", "b", "c"}) REQUIRE(nrcc_cli("p2 " + io + t + " --variant " + v).code == 0);
    const fs::path td = "tier_" + std::to_string(k);
    for (const char* f : {"p0.json", "p1.json", "p2_a.json", "p2_b.json", "p2_c.json"}) files.push_back(td / f);
  }
  for (const auto& f : files) {
    CAPTURE(f.string());
    CHECK(read_text_file(d / f) == read_text_file(sweep_dir() / f));
  }
  fs::remove_all(d);
}

TEST_CASE("verify writes a seeded report") {
  const auto d = sweep_dir();
  const std::string args = "verify " + toy6_arg() + " --out '" + d.string() + "' --tier 2 --samples 12 --seed 3";
  REQUIRE(nrcc_cli(args).code == 0);
  const auto first = read_text_file(d / "verify_tier_2.json");
  REQUIRE(nrcc_cli(args).code == 0);
  CHECK(read_text_file(d / "verify_tier_2.json") == first);
  const auto j = nlohmann::json::parse(first);
  CHECK(j["tier"] == 2);
  const auto& r = j["reports"][0];
  for (const char* key : {"tier", "window", "n", "violations", "worst_residual_kw", "seed"}) CHECK(r.contains(key));
  CHECK(r["n"] == 16);
  CHECK(r["seed"] == 3);
  CHECK(r["screening"]["violations"] == 0);
}

TEST_CASE("infeasible stage exits 4") {
  const auto d = test::scratch_dir("cli_infeas");
  auto c = test::toy6();
  c.windows[0].rebound_steps.clear();
  c.budget.tiers = {20000.0};
  save_case_dir(c, d / "case");
  const std::string io = "--case '" + (d / "case").string() + "' --out '" + (d / "out").string() + "'";
  REQUIRE(nrcc_cli("baseline " + io).code == 0);
  REQUIRE(nrcc_cli("p0 " + io + " --tier 0").code == 0);
  REQUIRE(nrcc_cli("p1 " + io + " --tier 0").code == 0);
  // Without a rebound window the down call has nowhere to recover.
  const auto r = nrcc_cli("p2 " + io + " --tier 0 --variant b");
  CHECK(r.code == 4);
  CHECK(fs::exists(d / "out" / "tier_0" / "p2_b.json"));
  fs::remove_all(d);
}

TEST_CASE("solver errors exit 3 and the solver flag selects the backend") {
  const auto d = test::scratch_dir("cli_solver");
  const std::string io = toy6_arg() + " --out '" + d.string() + "'";
  CHECK(nrcc_cli("baseline " + io, "NRCC_SOLVER=nonexistent").code == 3);
  REQUIRE(nrcc_cli("baseline " + io + " --solver mps", "NRCC_SOLVER=nonexistent").code == 0);
  const auto via_mps = nlohmann::json::parse(read_text_file(d / "baseline.json"));
  CHECK(via_mps["gamma0"].get<double>() == doctest::Approx(6000.0));
  fs::remove_all(d);
}

TEST_CASE("plot writes two deterministic SVG files") {
  const auto d = sweep_dir();
  const std::string args = "plot --out '" + (d / "menu.json").string() + "'";
  REQUIRE(nrcc_cli(args).code == 0);
  const auto frontier = read_text_file(d / "frontier.svg");
  const auto profiles = read_text_file(d / "rebound_profiles.svg");
  REQUIRE(nrcc_cli(args).code == 0);
  CHECK(read_text_file(d / "frontier.svg") == frontier);
  CHECK(read_text_file(d / "rebound_profiles.svg") == profiles);
  CHECK(frontier.rfind("<?xml", 0) == 0);
  CHECK(contains(frontier, "</svg>"));
  CHECK(contains(profiles, "service"));
  CHECK(nrcc_cli("plot --out '" + (d / "nope.json").string() + "'").code == 2);
}

TEST_CASE("rendering is a pure function of the menu") {
  const auto m = load_menu(sweep_dir() / "menu.json");
  CHECK(render_frontier_svg(m) == render_frontier_svg(load_menu(sweep_dir() / "menu.json")));
  CHECK(render_profiles_svg(m, 1) == render_profiles_svg(m, 1));
  CHECK(render_profiles_svg(m, 1) != render_profiles_svg(m, 3));
  CHECK(render_profiles_svg(m) == render_profiles_svg(m, 3));
  // Regions are shaded for each of the three window sets.
  const auto svg = render_profiles_svg(m);
  for (const char* label : {"service", "protected", "rebound"}) CHECK(contains(svg, label));
}
