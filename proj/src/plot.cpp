#include "nrcc/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string_view>
#include <vector>

namespace nrcc {

namespace {

std::string fmt(double v, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  std::string s(buf);
  if (s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
  return s;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double nice_step(double span, int target) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x, y;
  bool dashed = false;
  bool markers = true;
};

struct Band {
  double x0, x1;
  std::string color;
};

class Panel {
 public:
  Panel(double left, double top, double width, double height) : l_(left), t_(top), w_(width), h_(height) {}

  void set_range(double xmin, double xmax, double ymin, double ymax) {
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;
    const double ys = nice_step(ymax - ymin, 5);
    xmin_ = xmin;
    xmax_ = xmax;
    ymin_ = std::floor(ymin / ys) * ys;
    ymax_ = std::ceil(ymax / ys) * ys;
    if (ymax_ <= ymin_) ymax_ = ymin_ + ys;
  }

  double px(double x) const { return l_ + (x - xmin_) / (xmax_ - xmin_) * w_; }
  double py(double y) const { return t_ + h_ - (y - ymin_) / (ymax_ - ymin_) * h_; }

  void bands(std::string& out, const std::vector<Band>& bs) const {
    for (const auto& b : bs)
      out += "<rect x=\"" + fmt(px(b.x0)) + "\" y=\"" + fmt(t_) + "\" width=\"" + fmt(px(b.x1) - px(b.x0)) +
             "\" height=\"" + fmt(h_) + "\" fill=\"" + b.color + "\" fill-opacity=\"0.18\"/>\n";
  }

  void axes(std::string& out, const std::string& title, const std::string& xlabel, const std::string& ylabel,
            int x_prec) const {
    out += "<rect x=\"" + fmt(l_) + "\" y=\"" + fmt(t_) + "\" width=\"" + fmt(w_) + "\" height=\"" + fmt(h_) +
           "\" fill=\"none\" stroke=\"#333\"/>\n";
    const double ys = nice_step(ymax_ - ymin_, 5);
    for (double y = ymin_; y <= ymax_ + 1e-9 * ys; y += ys) {
      out += "<line x1=\"" + fmt(l_) + "\" y1=\"" + fmt(py(y)) + "\" x2=\"" + fmt(l_ + w_) + "\" y2=\"" + fmt(py(y)) +
             "\" stroke=\"#ddd\"/>\n";
      out += "<text x=\"" + fmt(l_ - 6) + "\" y=\"" + fmt(py(y) + 4) + "\" text-anchor=\"end\">" + fmt(y, 0) + "</text>\n";
    }
    const double xs = nice_step(xmax_ - xmin_, 6);
    for (double x = std::ceil(xmin_ / xs) * xs; x <= xmax_ + 1e-9 * xs; x += xs)
      out += "<text x=\"" + fmt(px(x)) + "\" y=\"" + fmt(t_ + h_ + 16) + "\" text-anchor=\"middle\">" +
             fmt(x, x_prec) + "</text>\n";
    out += "<text x=\"" + fmt(l_ + w_ / 2) + "\" y=\"" + fmt(t_ - 10) +
           "\" text-anchor=\"middle\" font-weight=\"bold\">" + escape(title) + "</text>\n";
    out += "<text x=\"" + fmt(l_ + w_ / 2) + "\" y=\"" + fmt(t_ + h_ + 34) + "\" text-anchor=\"middle\">" +
           escape(xlabel) + "</text>\n";
    out += "<text transform=\"translate(" + fmt(l_ - 48) + "," + fmt(t_ + h_ / 2) +
           ") rotate(-90)\" text-anchor=\"middle\">" + escape(ylabel) + "</text>\n";
  }

  void series(std::string& out, const Series& s) const {
    if (s.x.empty()) return;
    out += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"2\"";
    if (s.dashed) out += " stroke-dasharray=\"6 4\"";
    out += " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) out += (i ? " " : "") + fmt(px(s.x[i])) + "," + fmt(py(s.y[i]));
    out += "\"/>\n";
    if (s.markers)
      for (std::size_t i = 0; i < s.x.size(); ++i)
        out += "<circle cx=\"" + fmt(px(s.x[i])) + "\" cy=\"" + fmt(py(s.y[i])) + "\" r=\"3\" fill=\"" + s.color +
               "\"/>\n";
  }

  void legend(std::string& out, const std::vector<std::pair<std::string, std::string>>& items) const {
    double y = t_ + 14;
    for (const auto& [label, color] : items) {
      out += "<rect x=\"" + fmt(l_ + 10) + "\" y=\"" + fmt(y - 9) + "\" width=\"14\" height=\"10\" fill=\"" + color +
             "\"/>\n";
      out += "<text x=\"" + fmt(l_ + 30) + "\" y=\"" + fmt(y) + "\">" + escape(label) + "</text>\n";
      y += 16;
    }
  }

 private:
  double l_, t_, w_, h_;
  double xmin_ = 0, xmax_ = 1, ymin_ = 0, ymax_ = 1;
};

std::string header(double w, double h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w, 0) +
         "\" height=\"" + fmt(h, 0) + "\" viewBox=\"0 0 " + fmt(w, 0) + " " + fmt(h, 0) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void extend(double& lo, double& hi, const std::vector<double>& v) {
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
}

constexpr const char* kVariantColor[] = {"#1f77b4", "#d62728", "#2ca02c"};

}  // namespace

std::string render_frontier_svg(const ProductMenu& menu) {
  Series lam{"peak cap lambda_D", "#1f77b4", {}, {}};
  Series rdn{"downward rating R", "#ff7f0e", {}, {}};
  std::vector<Series> eta;
  for (int v = 0; v < 3; ++v) eta.push_back({"eta P2-" + std::string(to_string(static_cast<Variant>(v))), kVariantColor[v], {}, {}});

  for (const auto& t : menu.tiers) {
    const double x = t.delta_gamma / 1000.0;
    if (t.p0.status == SolveStatus::kOptimal || t.p0.status == SolveStatus::kFeasible) {
      lam.x.push_back(x);
      lam.y.push_back(t.p0.lambda_d);
    }
    if (t.p1 && !t.p1->windows.empty()) {
      rdn.x.push_back(x);
      rdn.y.push_back(t.p1->windows.front().r_down);
    }
    for (int v = 0; v < 3; ++v)
      if (const auto& p2 = t.p2[static_cast<std::size_t>(v)]; p2 && p2->eta) {
        eta[static_cast<std::size_t>(v)].x.push_back(x);
        eta[static_cast<std::size_t>(v)].y.push_back(*p2->eta);
      }
  }
  double xmin = 0.0, xmax = 0.0;
  for (const auto& t : menu.tiers) xmax = std::max(xmax, t.delta_gamma / 1000.0);

  std::string out = header(960, 400);
  out += "<text x=\"480\" y=\"22\" text-anchor=\"middle\" font-size=\"14\" font-weight=\"bold\">" +
         escape(menu.case_name) + ": budget frontier</text>\n";

  Panel left(80, 60, 370, 270);
  double lo = 0.0, hi = 0.0;
  extend(lo, hi, lam.y);
  extend(lo, hi, rdn.y);
  left.set_range(xmin, xmax, lo, hi);
  left.axes(out, "Peak cap and downward rating", "budget increment (k$/yr)", "kW", 1);
  left.series(out, lam);
  left.series(out, rdn);
  left.legend(out, {{lam.label, lam.color}, {rdn.label, rdn.color}});

  Panel right(560, 60, 370, 270);
  lo = 0.0;
  hi = 0.0;
  for (const auto& s : eta) extend(lo, hi, s.y);
  right.set_range(xmin, xmax, lo, hi);
  right.axes(out, "Worst-case rebound", "budget increment (k$/yr)", "kW", 1);
  std::vector<std::pair<std::string, std::string>> items;
  for (const auto& s : eta) {
    right.series(out, s);
    items.emplace_back(s.label, s.color);
  }
  right.legend(out, items);
  out += "</svg>\n";
  return out;
}

std::string render_profiles_svg(const ProductMenu& menu, int tier) {
  const TierResult* pick = nullptr;
  for (const auto& t : menu.tiers) {
    if (tier >= 0 && t.k != tier) continue;
    const bool any = std::any_of(t.p2.begin(), t.p2.end(), [](const auto& p) { return p && !p->profile_kw.empty(); });
    if (any) pick = &t;
  }

  std::string out = header(1200, 380);
  if (!pick) {
    out += "<text x=\"600\" y=\"190\" text-anchor=\"middle\">no solved rebound profile</text>\n</svg>\n";
    return out;
  }
  out += "<text x=\"600\" y=\"22\" text-anchor=\"middle\" font-size=\"14\" font-weight=\"bold\">" +
         escape(menu.case_name) + ": netload under the sustained down-call, tier " + std::to_string(pick->k) +
         "</text>\n";

  const std::vector<double> baseline =
      menu.baseline.m1.baseline_kw.empty() ? std::vector<double>{} : menu.baseline.m1.baseline_kw.front();
  const std::size_t T = baseline.size();
  std::vector<double> steps(T);
  for (std::size_t t = 0; t < T; ++t) steps[t] = static_cast<double>(t);

  std::vector<Band> bands;
  if (!menu.windows.empty() && T > 0) {
    const auto& w = menu.windows.front();
    const int per_day = menu.steps_per_day > 0 ? menu.steps_per_day : static_cast<int>(T);
    auto add = [&](const std::vector<int>& set, const char* color) {
      for (int d = 0; d * per_day < static_cast<int>(T); ++d)
        for (int s : set) bands.push_back({d * per_day + s - 0.5, d * per_day + s + 0.5, color});
    };
    add(w.service_steps, "#1f77b4");
    add(w.protected_steps, "#ff7f0e");
    add(w.rebound_steps, "#9467bd");
  }

  double lo = 0.0, hi = 0.0;
  extend(lo, hi, baseline);
  for (const auto& p : pick->p2)
    if (p) extend(lo, hi, p->profile_kw);

  for (int v = 0; v < 3; ++v) {
    Panel panel(70 + 390.0 * v, 60, 320, 260);
    panel.set_range(-0.5, T > 0 ? static_cast<double>(T) - 0.5 : 0.5, lo, hi);
    panel.bands(out, bands);
    const auto& p2 = pick->p2[static_cast<std::size_t>(v)];
    std::string title = "P2-" + std::string(to_string(static_cast<Variant>(v)));
    if (p2 && p2->eta) title += " (eta = " + fmt(*p2->eta, 1) + " kW)";
    else title += p2 ? " (" + std::string(to_string(p2->status)) + ")" : " (skipped)";
    panel.axes(out, title, "time step", "substation netload (kW)", 0);
    panel.series(out, {"baseline", "#555", steps, baseline, true, false});
    if (p2 && p2->profile_kw.size() == T) panel.series(out, {"profile", kVariantColor[v], steps, p2->profile_kw, false, false});
    panel.legend(out, {{"service", "#1f77b4"}, {"protected", "#ff7f0e"}, {"rebound", "#9467bd"}});
  }
  out += "</svg>\n";
  return out;
}

}  // namespace nrcc
