#include "nrcc/sweep.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

namespace nrcc {

using json = nlohmann::json;

namespace {

/// Fixed-size worker pool; tasks may enqueue further tasks.
class TaskPool {
 public:
  explicit TaskPool(int jobs) : jobs_(std::max(1, jobs)) {}

  void submit(std::function<void()> task) {
    {
      std::lock_guard lock(mu_);
      queue_.push_back(std::move(task));
      ++pending_;
    }
    cv_.notify_one();
  }

  void run() {
    std::vector<std::jthread> workers;
    for (int i = 0; i < jobs_; ++i) workers.emplace_back([this] { loop(); });
  }

 private:
  void loop() {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return !queue_.empty() || pending_ == 0; });
        if (queue_.empty()) return;
        task = std::move(queue_.front());
        queue_.pop_front();
      }
      task();
      {
        std::lock_guard lock(mu_);
        --pending_;
      }
      cv_.notify_all();
    }
  }

  int jobs_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  int pending_ = 0;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool solved(SolveStatus s) { return s == SolveStatus::kOptimal || s == SolveStatus::kFeasible; }

json null_if_inf(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

ordered_json envelopes_to_json(const std::vector<WindowEnvelope>& ws) {
  ordered_json a = ordered_json::array();
  for (const auto& w : ws)
    a.push_back({{"id", w.id}, {"r_down", w.r_down}, {"r_up", w.r_up}, {"e_down", w.e_down}, {"e_up", w.e_up}});
  return a;
}

std::vector<WindowEnvelope> envelopes_from_json(const ordered_json& a) {
  std::vector<WindowEnvelope> out;
  for (const auto& w : a)
    out.push_back({w.at("id").get<std::string>(), w.at("r_down").get<double>(), w.at("r_up").get<double>(),
                   w.at("e_down").get<double>(), w.at("e_up").get<double>()});
  return out;
}

std::vector<std::string> candidate_ids(const Case& c) {
  std::vector<std::string> ids;
  for (const auto& cand : c.network.candidates) ids.push_back(cand.id);
  return ids;
}

}  // namespace

std::string status_string(const std::optional<SolveStatus>& s) {
  return s ? std::string(to_string(*s)) : std::string("skipped");
}

BaselineArtifact run_baseline(const Case& c) {
  BaselineArtifact b;
  b.case_name = c.name;
  b.m1 = solve_model1(c);
  b.peaks = expected_peaks(c);
  b.candidate_ids = candidate_ids(c);
  for (const auto& s : c.scenarios.scenarios) b.scenario_ids.push_back(s.id);
  return b;
}

std::vector<std::string> tier_warnings(const Case& c, const TierResult& t) {
  std::vector<std::string> w;
  if (t.p1 && t.p1->clamped)
    for (const auto& win : c.windows) {
      const double span = static_cast<double>(win.service_steps.size()) * c.scenarios.grid.dt_h;
      if ((win.down_enabled() && win.theta_down > span) || (win.up_enabled() && win.theta_up > span))
        w.push_back("tier " + std::to_string(t.k) + ", window '" + win.id +
                    "': duration multiplier exceeds the window length and was clamped");
    }
  if (!solved(t.p0.status)) w.push_back("tier " + std::to_string(t.k) + ": peak-cap stage " + status_string(t.p0.status));
  return w;
}

ProductMenu run_sweep(const Case& c, const SweepOptions& opts) {
  ProductMenu menu;
  menu.case_name = c.name;
  menu.baseline = run_baseline(c);
  menu.gamma0 = menu.baseline.m1.gamma0;
  menu.peaks = menu.baseline.peaks;
  menu.steps_per_day = c.scenarios.grid.steps_per_day;
  for (const auto& w : c.windows) menu.windows.push_back({w.id, w.service_steps, w.protected_steps, w.rebound_steps});

  const auto& m1 = menu.baseline.m1;
  const auto K = c.budget.tiers.size();
  menu.tiers.resize(K);
  menu.timing_s.resize(K);
  std::mutex timing_mu;
  TaskPool pool(opts.jobs);

  for (std::size_t k = 0; k < K; ++k) {
    pool.submit([&, k] {
      auto& tier = menu.tiers[k];
      tier.k = static_cast<int>(k);
      tier.delta_gamma = c.budget.tiers[k];
      tier.gamma = m1.gamma0 + tier.delta_gamma;
      auto t0 = std::chrono::steady_clock::now();
      try {
        tier.p0 = solve_model2(c, m1, menu.peaks, tier.delta_gamma);
      } catch (const std::exception&) {
        tier.p0.status = SolveStatus::kError;
      }
      const double t_p0 = seconds_since(t0);
      double t_p1 = 0.0;
      if (solved(tier.p0.status) && !c.windows.empty()) {
        t0 = std::chrono::steady_clock::now();
        try {
          tier.p1 = solve_model3(c, m1, tier.p0, tier.delta_gamma);
        } catch (const std::exception&) {
          tier.p1 = P1Result{};
        }
        t_p1 = seconds_since(t0);
      }
      {
        std::lock_guard lock(timing_mu);
        menu.timing_s[k]["p0"] = t_p0;
        if (tier.p1) menu.timing_s[k]["p1"] = t_p1;
      }
      if (!tier.p1 || !solved(tier.p1->status)) return;
      for (Variant v : {Variant::kA, Variant::kB, Variant::kC}) {
        pool.submit([&, k, v] {
          auto& t = menu.tiers[k];
          const auto s0 = std::chrono::steady_clock::now();
          P2Result r;
          try {
            r = solve_model4(c, m1, t.p0, *t.p1, t.delta_gamma, v);
          } catch (const std::exception&) {
            r.variant = v;
            r.status = SolveStatus::kError;
          }
          t.p2[static_cast<std::size_t>(v)] = std::move(r);
          std::lock_guard lock(timing_mu);
          menu.timing_s[k]["p2_" + std::string(to_string(v))] = seconds_since(s0);
        });
      }
    });
  }
  pool.run();

  for (const auto& t : menu.tiers)
    for (auto& w : tier_warnings(c, t)) menu.warnings.push_back(std::move(w));
  return menu;
}

ordered_json plan_to_json(const InvestmentPlan& p, const std::vector<std::string>& ids) {
  ordered_json j = ordered_json::object();
  for (std::size_t i = 0; i < ids.size() && i < p.u.size(); ++i) j[ids[i]] = {{"u", p.u[i]}, {"v_kw", p.v_kw[i]}};
  return j;
}

InvestmentPlan plan_from_json(const ordered_json& j) {
  InvestmentPlan p;
  for (const auto& [id, e] : j.items()) {
    p.u.push_back(e.at("u").get<double>());
    p.v_kw.push_back(e.at("v_kw").get<double>());
  }
  return p;
}

ordered_json baseline_to_json(const BaselineArtifact& b) {
  ordered_json j;
  j["case"] = b.case_name;
  j["status"] = std::string(to_string(b.m1.status));
  j["gamma0"] = b.m1.gamma0;
  j["lambda_exp"] = {{"d", b.peaks.d}, {"r", b.peaks.r}};
  j["investment_cost"] = b.m1.investment_cost;
  j["expected_shed_kwh"] = b.m1.expected_shed_kwh;
  j["investments"] = plan_to_json(b.m1.plan, b.candidate_ids);
  ordered_json prof = ordered_json::object();
  for (std::size_t s = 0; s < b.scenario_ids.size() && s < b.m1.baseline_kw.size(); ++s)
    prof[b.scenario_ids[s]] = b.m1.baseline_kw[s];
  j["profiles_kw"] = prof;
  return j;
}

BaselineArtifact baseline_from_json(const ordered_json& j) {
  BaselineArtifact b;
  b.case_name = j.at("case").get<std::string>();
  b.m1.status = status_from_string(j.at("status").get<std::string>());
  b.m1.gamma0 = j.at("gamma0").get<double>();
  b.peaks.d = j.at("lambda_exp").at("d").get<double>();
  b.peaks.r = j.at("lambda_exp").at("r").get<double>();
  b.m1.investment_cost = j.at("investment_cost").get<double>();
  b.m1.expected_shed_kwh = j.at("expected_shed_kwh").get<double>();
  b.m1.plan = plan_from_json(j.at("investments"));
  for (const auto& [id, e] : j.at("investments").items()) b.candidate_ids.push_back(id);
  for (const auto& [id, prof] : j.at("profiles_kw").items()) {
    b.scenario_ids.push_back(id);
    b.m1.baseline_kw.push_back(prof.get<std::vector<double>>());
  }
  return b;
}

ordered_json p0_to_json(const TierResult& t, const std::vector<std::string>& ids) {
  return {{"lambda_d", t.p0.lambda_d},
          {"lambda_r", t.p0.lambda_r},
          {"objective", t.p0.objective},
          {"status", std::string(to_string(t.p0.status))},
          {"investments", plan_to_json(t.p0.plan, ids)}};
}

P0Result p0_from_json(const ordered_json& j) {
  P0Result r;
  r.lambda_d = j.at("lambda_d").get<double>();
  r.lambda_r = j.at("lambda_r").get<double>();
  r.objective = j.at("objective").get<double>();
  r.status = status_from_string(j.at("status").get<std::string>());
  r.plan = plan_from_json(j.at("investments"));
  return r;
}

ordered_json p1_to_json(const std::optional<P1Result>& p1, const std::vector<std::string>& ids) {
  if (!p1) return {{"status", "skipped"}};
  return {{"status", std::string(to_string(p1->status))},
          {"objective", p1->objective},
          {"lambda_d_used", p1->lambda_d_used},
          {"lambda_r_used", p1->lambda_r_used},
          {"clamped", p1->clamped},
          {"windows", envelopes_to_json(p1->windows)},
          {"investments", plan_to_json(p1->plan, ids)}};
}

std::optional<P1Result> p1_from_json(const ordered_json& j) {
  if (j.at("status") == "skipped") return std::nullopt;
  P1Result r;
  r.status = status_from_string(j.at("status").get<std::string>());
  r.objective = j.at("objective").get<double>();
  r.lambda_d_used = j.at("lambda_d_used").get<double>();
  r.lambda_r_used = j.at("lambda_r_used").get<double>();
  r.clamped = j.at("clamped").get<bool>();
  r.windows = envelopes_from_json(j.at("windows"));
  r.plan = plan_from_json(j.at("investments"));
  return r;
}

ordered_json p2_to_json(const std::optional<P2Result>& p2, const std::vector<std::string>& ids) {
  if (!p2) return {{"eta", nullptr}, {"status", "skipped"}};
  return {{"eta", p2->eta ? json(*p2->eta) : json(nullptr)},
          {"status", std::string(to_string(p2->status))},
          {"windows", envelopes_to_json(p2->windows)},
          {"investments", plan_to_json(p2->plan, ids)},
          {"profile_kw", p2->profile_kw}};
}

std::optional<P2Result> p2_from_json(const ordered_json& j, Variant v) {
  if (j.at("status") == "skipped") return std::nullopt;
  P2Result r;
  r.variant = v;
  r.status = status_from_string(j.at("status").get<std::string>());
  if (!j.at("eta").is_null()) r.eta = j.at("eta").get<double>();
  r.windows = envelopes_from_json(j.at("windows"));
  r.plan = plan_from_json(j.at("investments"));
  r.profile_kw = j.at("profile_kw").get<std::vector<double>>();
  return r;
}

ordered_json reports_to_json(int tier, const std::vector<WindowReport>& reports) {
  ordered_json a = ordered_json::array();
  for (const auto& r : reports)
    a.push_back({{"tier", r.tier},
                 {"window", r.window},
                 {"n", r.n},
                 {"violations", r.violations},
                 {"worst_residual_kw", null_if_inf(r.worst_residual_kw)},
                 {"seed", r.seed},
                 {"violation_rate", r.violation_rate()},
                 {"screening", {{"n", r.screening_n}, {"violations", r.screening_violations}}},
                 {"random", {{"n", r.random_n}, {"violations", r.random_violations}, {"rate", r.random_violation_rate()}}},
                 {"solver_failures", r.solver_failures}});
  return {{"tier", tier}, {"reports", a}};
}

ordered_json menu_to_json(const ProductMenu& m) {
  const auto& ids = m.baseline.candidate_ids;
  ordered_json j;
  j["case"] = m.case_name;
  j["gamma0"] = m.gamma0;
  j["lambda_exp"] = {{"d", m.peaks.d}, {"r", m.peaks.r}};
  j["baseline"] = baseline_to_json(m.baseline);
  j["steps_per_day"] = m.steps_per_day;
  j["windows"] = ordered_json::array();
  for (const auto& w : m.windows)
    j["windows"].push_back({{"id", w.id},
                            {"service_steps", w.service_steps},
                            {"protected_steps", w.protected_steps},
                            {"rebound_steps", w.rebound_steps}});
  j["tiers"] = ordered_json::array();
  for (std::size_t k = 0; k < m.tiers.size(); ++k) {
    const auto& t = m.tiers[k];
    ordered_json tj;
    tj["k"] = t.k;
    tj["delta_gamma"] = t.delta_gamma;
    tj["gamma"] = t.gamma;
    tj["p0"] = p0_to_json(t, ids);
    tj["p1"] = p1_to_json(t.p1, ids);
    tj["p2"] = {{"a", p2_to_json(t.p2[0], ids)}, {"b", p2_to_json(t.p2[1], ids)}, {"c", p2_to_json(t.p2[2], ids)}};
    tj["investments"] = plan_to_json(t.p1 ? t.p1->plan : t.p0.plan, ids);
    ordered_json timing = ordered_json::object();
    if (k < m.timing_s.size())
      for (const auto& [stage, secs] : m.timing_s[k]) timing[stage] = secs;
    tj["timing_s"] = timing;
    j["tiers"].push_back(std::move(tj));
  }
  j["warnings"] = m.warnings;
  return j;
}

ProductMenu menu_from_json(const ordered_json& j) {
  ProductMenu m;
  m.case_name = j.at("case").get<std::string>();
  m.gamma0 = j.at("gamma0").get<double>();
  m.peaks.d = j.at("lambda_exp").at("d").get<double>();
  m.peaks.r = j.at("lambda_exp").at("r").get<double>();
  m.baseline = baseline_from_json(j.at("baseline"));
  m.steps_per_day = j.at("steps_per_day").get<int>();
  for (const auto& w : j.at("windows"))
    m.windows.push_back({w.at("id").get<std::string>(), w.at("service_steps").get<std::vector<int>>(),
                         w.at("protected_steps").get<std::vector<int>>(), w.at("rebound_steps").get<std::vector<int>>()});
  for (const auto& tj : j.at("tiers")) {
    TierResult t;
    t.k = tj.at("k").get<int>();
    t.delta_gamma = tj.at("delta_gamma").get<double>();
    t.gamma = tj.at("gamma").get<double>();
    t.p0 = p0_from_json(tj.at("p0"));
    t.p1 = p1_from_json(tj.at("p1"));
    t.p2[0] = p2_from_json(tj.at("p2").at("a"), Variant::kA);
    t.p2[1] = p2_from_json(tj.at("p2").at("b"), Variant::kB);
    t.p2[2] = p2_from_json(tj.at("p2").at("c"), Variant::kC);
    std::map<std::string, double> timing;
    for (const auto& [stage, secs] : tj.at("timing_s").items()) timing[stage] = secs.get<double>();
    m.timing_s.push_back(std::move(timing));
    m.tiers.push_back(std::move(t));
  }
  m.warnings = j.at("warnings").get<std::vector<std::string>>();
  return m;
}

std::string menu_to_string(const ProductMenu& m) { return menu_to_json(m).dump(2) + "\n"; }

ProductMenu parse_menu(std::string_view text) {
  try {
    return menu_from_json(ordered_json::parse(text));
  } catch (const json::exception& e) {
    throw CaseError(std::string("malformed menu: ") + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(path.string() + ": cannot write");
  f << text;
  if (!f) throw std::runtime_error(path.string() + ": write failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CaseError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void emit_menu(const ProductMenu& m, const std::filesystem::path& path) { write_text(path, menu_to_string(m)); }

ProductMenu load_menu(const std::filesystem::path& path) { return parse_menu(read_text_file(path)); }

ordered_json p0_artifact(const TierResult& t, const std::vector<std::string>& ids) {
  return {{"k", t.k}, {"delta_gamma", t.delta_gamma}, {"gamma", t.gamma}, {"p0", p0_to_json(t, ids)}};
}

ordered_json p1_artifact(int k, const std::optional<P1Result>& p1, const std::vector<std::string>& ids) {
  return {{"k", k}, {"p1", p1_to_json(p1, ids)}};
}

ordered_json p2_artifact(int k, Variant v, const std::optional<P2Result>& p2, const std::vector<std::string>& ids) {
  return {{"k", k}, {"variant", std::string(to_string(v))}, {"p2", p2_to_json(p2, ids)}};
}

void write_stage_artifacts(const ProductMenu& m, const std::filesystem::path& dir) {
  const auto& ids = m.baseline.candidate_ids;
  write_text(dir / "baseline.json", baseline_to_json(m.baseline).dump(2) + "\n");
  for (const auto& t : m.tiers) {
    const auto td = dir / ("tier_" + std::to_string(t.k));
    write_text(td / "p0.json", p0_artifact(t, ids).dump(2) + "\n");
    if (!solved(t.p0.status)) continue;
    write_text(td / "p1.json", p1_artifact(t.k, t.p1, ids).dump(2) + "\n");
    for (Variant v : {Variant::kA, Variant::kB, Variant::kC}) {
      const auto& p2 = t.p2[static_cast<std::size_t>(v)];
      if (!p2) continue;
      write_text(td / ("p2_" + std::string(to_string(v)) + ".json"), p2_artifact(t.k, v, p2, ids).dump(2) + "\n");
    }
  }
}

}  // namespace nrcc
