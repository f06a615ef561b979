#include <doctest.h>

#include <json.hpp>

#include "nrcc/sweep.hpp"
#include "support.hpp"

using namespace nrcc;

namespace {

const ProductMenu& menu1() {
  static const ProductMenu m = run_sweep(test::toy6(), SweepOptions{1});
  return m;
}

ordered_json without_timing(ordered_json j) {
  for (auto& t : j["tiers"]) t.erase("timing_s");
  return j;
}

test::SchemaValidator validator() { return test::SchemaValidator(nlohmann::json::parse(read_text_file(test::schema_path()))); }

}  // namespace

TEST_CASE("menu structure on toy6") {
  const auto& m = menu1();
  CHECK(m.case_name == "toy6");
  CHECK(m.gamma0 == doctest::Approx(6000.0));
  REQUIRE(m.tiers.size() == 4);
  for (std::size_t k = 0; k < m.tiers.size(); ++k) {
    CHECK(m.tiers[k].k == static_cast<int>(k));
    if (k > 0) CHECK(m.tiers[k].delta_gamma > m.tiers[k - 1].delta_gamma);
    CHECK(m.timing_s[k].contains("p0"));
  }
  CHECK(m.warnings.empty());
}

TEST_CASE("zero tier caps equal the worst-case baseline peak") {
  const auto& m = menu1();
  double peak = 0.0;
  for (const auto& s : m.baseline.m1.baseline_kw)
    for (double v : s) peak = std::max(peak, v);
  CHECK(test::close(m.tiers[0].p0.lambda_d, peak));
}

TEST_CASE("menu JSON round-trips") {
  const auto text = menu_to_string(menu1());
  const auto back = parse_menu(text);
  CHECK(menu_to_string(back) == text);
  const auto j = ordered_json::parse(text);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"case", "gamma0", "lambda_exp", "baseline", "steps_per_day", "windows", "tiers",
                                         "warnings"});
}

TEST_CASE("menu validates against the bundled schema") {
  const auto v = validator();
  const auto doc = nlohmann::json::parse(menu_to_string(menu1()));
  const auto errors = v.validate(doc);
  for (const auto& e : errors) INFO(e);
  CHECK(errors.empty());

  auto broken = doc;
  broken["tiers"][1]["p0"]["lambda_d"] = -3.0;
  broken["tiers"][2]["p2"]["b"]["status"] = "bogus";
  broken["tiers"][0].erase("k");
  CHECK(v.validate(broken).size() >= 3);
}

TEST_CASE("sweep is deterministic and independent of the worker count") {
  const auto again = run_sweep(test::toy6(), SweepOptions{4});
  CHECK(without_timing(menu_to_json(again)) == without_timing(menu_to_json(menu1())));
}

TEST_CASE("empty window list marks P1 and P2 skipped") {
  auto c = test::toy6();
  c.windows.clear();
  c.budget.tiers = {0.0, 10000.0};
  const auto m = run_sweep(c);
  REQUIRE(m.tiers.size() == 2);
  for (const auto& t : m.tiers) {
    CHECK(t.p0.status == SolveStatus::kOptimal);
    CHECK_FALSE(t.p1);
    for (const auto& p2 : t.p2) CHECK_FALSE(p2);
  }
  const auto j = menu_to_json(m);
  CHECK(j["tiers"][0]["p1"]["status"] == "skipped");
  CHECK(j["tiers"][0]["p2"]["a"]["status"] == "skipped");
  CHECK(j["tiers"][0]["p2"]["a"]["eta"].is_null());
  CHECK(validator().validate(nlohmann::json::parse(j.dump())).empty());
  CHECK(menu_to_string(parse_menu(menu_to_string(m))) == menu_to_string(m));
}

TEST_CASE("model 1 failure aborts the sweep") {
  auto c = test::toy6();
  // Reverse flow beyond every line rating cannot be shed.
  for (auto& s : c.scenarios.scenarios) s.p_kw *= -3.0;
  CHECK_THROWS_AS(run_sweep(c), StageError);
}

TEST_CASE("clamped durations raise a warning") {
  auto c = test::toy6();
  c.windows[0].theta_down = 5.0;
  c.budget.tiers = {10000.0};
  const auto m = run_sweep(c);
  REQUIRE(m.tiers[0].p1);
  CHECK(m.tiers[0].p1->clamped);
  REQUIRE(m.warnings.size() == 1);
  CHECK(m.warnings[0].find("evening") != std::string::npos);
}

TEST_CASE("stage artifacts and baseline round-trip") {
  const auto dir = test::scratch_dir("stages");
  write_stage_artifacts(menu1(), dir);
  CHECK(std::filesystem::exists(dir / "baseline.json"));
  for (int k = 0; k < 4; ++k)
    for (const char* f : {"p0.json", "p1.json", "p2_a.json", "p2_b.json", "p2_c.json"})
      CHECK(std::filesystem::exists(dir / ("tier_" + std::to_string(k)) / f));
  const auto b = baseline_from_json(ordered_json::parse(read_text_file(dir / "baseline.json")));
  CHECK(baseline_to_json(b) == baseline_to_json(menu1().baseline));
  CHECK(b.candidate_ids == std::vector<std::string>{"up_l1", "bess_b3", "bess_b5"});
  const auto p1j = ordered_json::parse(read_text_file(dir / "tier_2" / "p1.json"));
  const auto p1 = p1_from_json(p1j.at("p1"));
  REQUIRE(p1);
  CHECK(p1_to_json(p1, b.candidate_ids) == p1j.at("p1"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("verification report JSON") {
  WindowReport r;
  r.tier = 1;
  r.window = "evening";
  r.seed = 4;
  r.n = 10;
  r.violations = 2;
  r.worst_residual_kw = kInf;
  r.screening_n = 4;
  r.random_n = 6;
  r.random_violations = 2;
  const auto j = reports_to_json(1, {r});
  CHECK(j["tier"] == 1);
  const auto& e = j["reports"][0];
  CHECK(e["window"] == "evening");
  CHECK(e["n"] == 10);
  CHECK(e["violations"] == 2);
  CHECK(e["seed"] == 4);
  CHECK(e["worst_residual_kw"].is_null());
  CHECK(e["violation_rate"] == doctest::Approx(0.2));
}

TEST_CASE("plan JSON keeps candidate order") {
  const InvestmentPlan p{{1, 0, 1}, {0, 0, 125.5}};
  const std::vector<std::string> ids{"z", "a", "m"};
  const auto j = plan_to_json(p, ids);
  CHECK(j.begin().key() == "z");
  CHECK(plan_from_json(j) == p);
}
