#include <doctest.h>

#include <cmath>
#include <random>

#include "nrcc/products.hpp"
#include "nrcc/sweep.hpp"
#include "nrcc/verifier.hpp"
#include "support.hpp"

using namespace nrcc;

namespace {

ServiceWindowSpec window(int H, double theta_down, double theta_up = 0.0, double beta_up = 0.0) {
  ServiceWindowSpec w;
  w.id = "w";
  for (int i = 0; i < H; ++i) w.service_steps.push_back(i);
  w.theta_down = theta_down;
  w.theta_up = theta_up;
  w.beta_up = beta_up;
  w.r_cap = 1e6;
  return w;
}

CallTrajectory call_of(std::vector<double> down) {
  CallTrajectory c;
  for (std::size_t i = 0; i < down.size(); ++i) c.steps.push_back(static_cast<int>(i));
  c.xi_up.assign(down.size(), 0.0);
  c.xi_down = std::move(down);
  return c;
}

/// Shapes written out directly from the definitions: sustained delivery
/// spreads theta over the window, start and end deliver full rating for the
/// first or last tau steps.
std::vector<double> closed_form(PatternKind k, int H, double theta, double dt) {
  const double th = std::min(theta, H * dt);
  int tau = 0;
  while (tau < H && (tau + 1) * dt <= th * (1 + 1e-12)) ++tau;
  std::vector<double> s(static_cast<std::size_t>(H), 0.0);
  for (int i = 0; i < H; ++i) {
    if (k == PatternKind::kSust) s[static_cast<std::size_t>(i)] = th / (H * dt);
    if (k == PatternKind::kStart && i < tau) s[static_cast<std::size_t>(i)] = 1.0;
    if (k == PatternKind::kEnd && i >= H - tau) s[static_cast<std::size_t>(i)] = 1.0;
  }
  return s;
}

Case without_storage(Case c) {
  std::erase_if(c.network.candidates, [](const auto& k) { return k.kind == CandidateKind::kStorage; });
  return c;
}

Case scaled_load(Case c, double f) {
  for (auto& s : c.scenarios.scenarios) {
    s.p_kw *= f;
    s.q_kvar *= f;
  }
  return c;
}

const ProductMenu& toy6_menu() {
  static const ProductMenu m = run_sweep(test::toy6(), SweepOptions{2});
  return m;
}

}  // namespace

TEST_CASE("call admissibility") {
  const CallSetParams p{100.0, 0.0, 200.0, 0.0};
  CHECK(call_admissible(p, call_of({100, 100, 0}), 1.0));
  CHECK_FALSE(call_admissible(p, call_of({100, 100, 100}), 1.0));
  CHECK_FALSE(call_admissible(p, call_of({120, 0, 0}), 1.0));
  CHECK_FALSE(call_admissible(p, call_of({-1, 0, 0}), 1.0));
  CHECK(call_admissible(CallSetParams{}, call_of({0, 0, 0}), 1.0));
  CHECK(call_admissible(CallSetParams{5, 3, 1, 1}, call_of({0, 0, 0}), 0.25));
  auto up = call_of({0, 0});
  up.xi_up = {3, 0};
  CHECK_FALSE(call_admissible(CallSetParams{5, 3, 1, 1}, up, 0.5));
  CHECK(call_admissible(CallSetParams{5, 3, 1, 1.5}, up, 0.5));
}

TEST_CASE("per-day energy budget for multi-day calls") {
  const CallSetParams p{100.0, 0.0, 200.0, 0.0};
  CallTrajectory c{{16, 17, 40, 41}, {100, 100, 100, 100}, {0, 0, 0, 0}};
  CHECK(call_admissible(p, c, 1.0, 24));
  CHECK_FALSE(call_admissible(p, c, 1.0, 0));
}

TEST_CASE("pattern examples") {
  const auto sust = pattern_shape(PatternKind::kSust, 3, 2.0, 1.0);
  for (double v : sust) CHECK(100.0 * v == doctest::Approx(66.6667).epsilon(1e-5));
  CHECK(pattern_shape(PatternKind::kStart, 3, 2.0, 1.0) == std::vector<double>{1, 1, 0});
  CHECK(pattern_shape(PatternKind::kEnd, 3, 2.0, 1.0) == std::vector<double>{0, 1, 1});
  CHECK(pattern_shape(PatternKind::kBase, 3, 2.0, 1.0) == std::vector<double>{0, 0, 0});
  CHECK_THROWS_AS(pattern_shape(PatternKind::kSust, 0, 1.0, 1.0), BuildError);
}

TEST_CASE("patterns match the closed forms on a parameter grid") {
  for (int H : {1, 2, 3, 5, 8})
    for (double dt : {0.25, 0.5, 1.0})
      for (double theta : {0.0, 0.25, 0.7, 1.0, 2.0, 3.5, 6.0, 12.0})
        for (auto k : {PatternKind::kBase, PatternKind::kSust, PatternKind::kStart, PatternKind::kEnd}) {
          CAPTURE(H);
          CAPTURE(dt);
          CAPTURE(theta);
          CHECK(pattern_shape(k, H, theta, dt) == closed_form(k, H, theta, dt));
        }
}

TEST_CASE("clamped duration delivers the full window") {
  const auto w = window(3, 5.0);
  const auto set = gen_stress_patterns(w, 1.0);
  CHECK(set.clamped);
  // sust, start and end coincide at full delivery and collapse to one pattern.
  REQUIRE(set.patterns.size() == 2);
  CHECK(set.patterns[1].unit_down == std::vector<double>{1, 1, 1});
  CHECK_FALSE(gen_stress_patterns(window(3, 2.0), 1.0).clamped);
}

TEST_CASE("screening set sizes") {
  const auto down = gen_stress_patterns(window(3, 2.0), 1.0);
  REQUIRE(down.patterns.size() == 4);
  CHECK(down.patterns[0].is_base());
  CHECK(down.patterns[1].down == PatternKind::kSust);
  CHECK(down.patterns[2].down == PatternKind::kStart);
  CHECK(down.patterns[3].down == PatternKind::kEnd);
  CHECK(down.patterns.size() * test::toy6().scenarios.scenarios.size() == 12);

  const auto both = gen_stress_patterns(window(3, 2.0, 1.0, 1.0), 1.0);
  CHECK(both.patterns.size() == 16);
  CHECK(both.patterns[1].name() == "base/sust");
  CHECK(gen_stress_patterns(window(3, 0.0), 1.0).patterns.size() == 1);
  CHECK_THROWS_AS(gen_stress_patterns(window(0, 1.0), 1.0), BuildError);
}

TEST_CASE("property: generated patterns are admissible for random parameters") {
  std::mt19937_64 rng(1000);
  std::uniform_int_distribution<int> h(1, 12), days(1, 3);
  std::uniform_real_distribution<double> th(0.0, 14.0), r(0.0, 5000.0), u01(0.0, 1.0);
  const double dts[] = {0.25, 0.5, 1.0};
  for (int draw = 0; draw < 1000; ++draw) {
    const int H = h(rng);
    const double dt = dts[draw % 3];
    auto w = window(H, th(rng), th(rng), u01(rng) < 0.5 ? 1.0 : 0.0);
    w.beta_down = u01(rng) < 0.9 ? 1.0 : 0.0;
    const TimeGrid grid{dt, H + 4, days(rng)};
    const double rd = r(rng), ru = r(rng);
    const CallSetParams params{rd, ru, w.theta_down * rd, w.theta_up * ru};
    const auto set = gen_stress_patterns(w, dt);
    for (const auto& p : set.patterns) {
      const auto call = realize(p, w, grid, rd, ru);
      CHECK(call.steps.size() == static_cast<std::size_t>(H * grid.days));
      CHECK(call_admissible(params, call, dt, grid.steps_per_day));
    }
  }
}

TEST_CASE("property: pattern energy totals") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> h(1, 10);
  std::uniform_real_distribution<double> frac(0.0, 1.0), r(0.0, 1000.0);
  for (int draw = 0; draw < 500; ++draw) {
    const int H = h(rng);
    const double dt = draw % 2 ? 0.5 : 1.0;
    const double theta = frac(rng) * H * dt;
    const double R = r(rng);
    auto energy = [&](PatternKind k) {
      double e = 0.0;
      for (double v : pattern_shape(k, H, theta, dt)) e += v * R * dt;
      return e;
    };
    CHECK(energy(PatternKind::kSust) == doctest::Approx(theta * R).epsilon(1e-12));
    const int tau = static_cast<int>(std::floor(theta / dt + 1e-9));
    CHECK(energy(PatternKind::kStart) == doctest::Approx(tau * R * dt));
    CHECK(energy(PatternKind::kEnd) == doctest::Approx(tau * R * dt));
    CHECK(energy(PatternKind::kStart) <= theta * R * (1 + 1e-9) + 1e-9);
  }
}

TEST_CASE("model 1 on toy6 matches the enumeration oracle") {
  const auto& c = test::toy6();
  const auto m1 = solve_model1(c);
  REQUIRE(m1.status == SolveStatus::kOptimal);
  const auto oracle = enumerate_oracle(c, OracleModel::kModel1, 0);
  CHECK(test::close(m1.gamma0, oracle.objective));
  CHECK(m1.gamma0 == doctest::Approx(6000.0));
  CHECK(m1.plan.u == std::vector<double>{1, 0, 0});
  CHECK(m1.expected_shed_kwh == doctest::Approx(0.0));
  REQUIRE(m1.baseline_kw.size() == 3);
  CHECK(m1.baseline_kw[0].size() == 24);
}

TEST_CASE("model 1 with ample capacity needs no investment") {
  const auto c = scaled_load(test::toy6(), 0.5);
  const auto m1 = solve_model1(c);
  REQUIRE(m1.status == SolveStatus::kOptimal);
  CHECK(m1.gamma0 == doctest::Approx(0.0));
  CHECK(m1.expected_shed_kwh == doctest::Approx(0.0));
  CHECK(m1.plan.u == std::vector<double>{0, 0, 0});
}

TEST_CASE("model 1 sheds when load is cheaper to lose than to serve") {
  auto c = test::toy6();
  for (auto& k : c.network.candidates) k.fixed_cost = 1e7;
  c.budget.voll = 0.05;
  const auto m1 = solve_model1(c);
  REQUIRE(m1.status == SolveStatus::kOptimal);
  CHECK(m1.plan.u == std::vector<double>{0, 0, 0});
  CHECK(m1.expected_shed_kwh > 0.0);
  CHECK(m1.gamma0 == doctest::Approx(c.budget.voll * c.budget.shed_annualization * m1.expected_shed_kwh));
  CHECK(test::close(m1.gamma0, enumerate_oracle(c, OracleModel::kModel1, 0).objective));
}

TEST_CASE("expected peaks") {
  const auto& c = test::toy6();
  const auto pk = expected_peaks(c);
  CHECK(pk.r == 0.0);
  CHECK(pk.d == doctest::Approx(1117.0));
  auto zero = c;
  for (auto& s : zero.scenarios.scenarios) {
    s.p_kw.setZero();
    s.q_kvar.setZero();
  }
  const auto z = expected_peaks(zero);
  CHECK(z.d == 0.0);
  CHECK(z.r == 0.0);
}

TEST_CASE("model 2 without flexibility reproduces the baseline peak") {
  auto c = without_storage(scaled_load(test::toy6(), 0.8));
  c.network.candidates.clear();
  c.scenarios.scenarios = {expected_scenario(c.scenarios)};
  const auto m1 = solve_model1(c);
  const auto peaks = expected_peaks(c);
  const auto p0 = solve_model2(c, m1, peaks, 0.0);
  REQUIRE(p0.status == SolveStatus::kOptimal);
  double peak = 0.0;
  for (double v : m1.baseline_kw[0]) peak = std::max(peak, v);
  CHECK(p0.lambda_d == doctest::Approx(peak).epsilon(1e-6));
  CHECK(p0.objective == doctest::Approx(0.0));
  CHECK(p0.lambda_r == doctest::Approx(0.0));
}

TEST_CASE("model 2 weighting trades direct and reverse caps") {
  auto c = test::toy6();
  c.budget.W = 0.5;
  const auto m1 = solve_model1(c);
  const auto p0 = solve_model2(c, m1, expected_peaks(c), 10000.0);
  REQUIRE(p0.status == SolveStatus::kOptimal);
  CHECK(p0.lambda_d >= 0.0);
  CHECK(p0.lambda_r >= 0.0);
}

TEST_CASE("model 3 without storage cannot deliver a down call") {
  const auto c = without_storage(test::toy6());
  const auto m1 = solve_model1(c);
  const auto p0 = solve_model2(c, m1, expected_peaks(c), 10000.0);
  REQUIRE(p0.status == SolveStatus::kOptimal);
  const auto p1 = solve_model3(c, m1, p0, 10000.0);
  REQUIRE(p1.status == SolveStatus::kOptimal);
  CHECK(p1.windows.at(0).r_down == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(p1.objective == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("model 3 rating respects the cap") {
  auto c = test::toy6();
  c.windows[0].r_cap = 50.0;
  const auto m1 = solve_model1(c);
  const auto p0 = solve_model2(c, m1, expected_peaks(c), 40000.0);
  const auto p1 = solve_model3(c, m1, p0, 40000.0);
  REQUIRE(p1.status == SolveStatus::kOptimal);
  CHECK(p1.windows[0].r_down == doctest::Approx(50.0));
  CHECK(p1.windows[0].e_down == doctest::Approx(100.0));
}

TEST_CASE("tier results on toy6") {
  const auto& m = toy6_menu();
  REQUIRE(m.tiers.size() == 4);
  double prev_ld = kInf, prev_obj2 = kInf, prev_obj3 = -kInf;
  for (const auto& t : m.tiers) {
    CAPTURE(t.k);
    REQUIRE(t.p0.status == SolveStatus::kOptimal);
    REQUIRE(t.p1);
    REQUIRE(t.p1->status == SolveStatus::kOptimal);
    CHECK(t.p0.lambda_d <= prev_ld + 1e-6 * std::max(1.0, prev_ld));
    CHECK(t.p0.objective <= prev_obj2 + 1e-6);
    CHECK(t.p1->objective >= prev_obj3 - 1e-6);
    prev_ld = t.p0.lambda_d;
    prev_obj2 = t.p0.objective;
    prev_obj3 = t.p1->objective;
    CHECK(t.p1->lambda_d_used == t.p0.lambda_d);
    CHECK(t.p1->lambda_r_used == t.p0.lambda_r);
    CHECK(t.gamma == doctest::Approx(m.gamma0 + t.delta_gamma));
    const auto& c = test::toy6();
    CHECK(investment_cost(c.network, t.p1->plan) <= t.gamma + budget_tolerance(t.gamma));
    for (const auto& w : t.p1->windows) CHECK(w.e_down == doctest::Approx(2.0 * w.r_down));
    for (const auto& p2 : t.p2) {
      REQUIRE(p2);
      REQUIRE(p2->eta);
      CHECK(*p2->eta >= 0.0);
      for (std::size_t i = 0; i < p2->windows.size(); ++i) {
        CHECK(p2->windows[i].r_down >= t.p1->windows[i].r_down - 1e-6);
        CHECK(p2->windows[i].e_down >= t.p1->windows[i].e_down - 1e-6);
      }
    }
  }
}

TEST_CASE("zero rating gives zero rebound for every variant") {
  const auto& t = toy6_menu().tiers[0];
  REQUIRE(t.p1);
  CHECK(t.p1->windows[0].r_down == doctest::Approx(0.0).epsilon(1e-9));
  for (const auto& p2 : t.p2) CHECK(*p2->eta == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("variant a recovers outside the protected window at every tier") {
  for (const auto& t : toy6_menu().tiers) CHECK(*t.p2[0]->eta == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("variant c equals variant a over the complement of the service window") {
  auto c = test::toy6();
  const auto& w = c.windows[0];
  std::vector<int> rest;
  for (int t = 0; t < c.scenarios.grid.steps_per_day; ++t)
    if (std::find(w.service_steps.begin(), w.service_steps.end(), t) == w.service_steps.end()) rest.push_back(t);
  auto full = c;
  full.windows[0].protected_steps = rest;
  full.windows[0].rebound_steps.clear();
  const auto& tier = toy6_menu().tiers[2];
  const auto m1 = solve_model1(c);
  const auto a = solve_model4(full, m1, tier.p0, *tier.p1, tier.delta_gamma, Variant::kA);
  const auto cc = solve_model4(c, m1, tier.p0, *tier.p1, tier.delta_gamma, Variant::kC);
  REQUIRE(a.eta);
  REQUIRE(cc.eta);
  CHECK(std::abs(*a.eta - *cc.eta) <= 1e-6 * std::max(1.0, *cc.eta));
  CHECK(*cc.eta == doctest::Approx(*tier.p2[2]->eta));
}

TEST_CASE("tolerance helpers") {
  CHECK(budget_tolerance(0.0) == 1e-6);
  CHECK(budget_tolerance(1e5) == doctest::Approx(0.1));
  CHECK(floor_bound(0.0) == 0.0);
  CHECK(floor_bound(1.0) == 1.0 - 1e-10);
  CHECK(floor_bound(1000.0) == doctest::Approx(1000.0 - 1e-7));
  CHECK(floor_bound(-1e-12) == 0.0);
}
