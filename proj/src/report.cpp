#include "homog2d/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace homog2d {

std::string to_string(Status s) {
  switch (s) {
    case Status::Pass: return "PASS";
    case Status::Flag: return "FLAG";
    case Status::Fail: return "FAIL";
  }
  return "FAIL";
}

std::string format_value(double v) { return fmt::format("{:.10g}", v); }

std::string summary_csv(const std::vector<Check>& checks) {
  std::string s = "id,status,value,limit,source\n";
  for (const auto& c : checks)
    s += fmt::format("{},{},{},\"{}\",{}\n", c.id, to_string(c.status), format_value(c.value), c.limit, c.source);
  return s;
}

std::string report_text(const std::string& title, const std::vector<Check>& checks) {
  std::size_t w = 0;
  for (const auto& c : checks) w = std::max(w, c.id.size());
  std::string s = title + "\n\n";
  int pass = 0, flag = 0, fail = 0;
  for (const auto& c : checks) {
    s += fmt::format("{:<4}  {:<{}}  {:>18}  {:<14}  [{}]\n", to_string(c.status), c.id, w, format_value(c.value), c.limit,
                     c.source);
    (c.status == Status::Pass ? pass : c.status == Status::Flag ? flag : fail)++;
  }
  s += fmt::format("\n{} PASS, {} FLAG, {} FAIL\n", pass, flag, fail);
  return s;
}

std::string rates_csv(const std::vector<RateReport>& reps) {
  std::string s = "preset,eps,norm_id,error,slope,residual\n";
  for (const auto& r : reps)
    for (const auto& series : r.series)
      for (std::size_t k = 0; k < series.eps.size(); ++k) {
        const std::string slope = series.fit.exact ? "exact" : fmt::format("{:.17g}", series.fit.slope);
        const std::string res = series.fit.exact ? "0" : fmt::format("{:.17g}", series.fit.residual);
        s += fmt::format("{},{:.17g},{},{:.17g},{},{}\n", r.preset, series.eps[k], series.norm_id, series.error[k],
                         slope, res);
      }
  return s;
}

std::string green_report_header() { return "ineq_id,eps,x1,x2,y1,y2,lhs,bound,ratio\n"; }

std::string green_report_rows(double eps, const PointwiseReport& rep) {
  std::string s;
  for (const auto& r : rep.rows)
    s += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.ineq_id, eps, r.x1, r.x2,
                     r.y1, r.y2, r.lhs, r.bound, r.ratio);
  return s;
}

namespace {

std::string escape(const std::string& t) {
  std::string o;
  for (char c : t) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string svg_loglog(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<PlotSeries>& series, bool lines) {
  const double W = 640, H = 420, L = 70, R = 170, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::max(), x1 = 0, y0 = x0, y1 = 0;
  for (const auto& s : series)
    for (std::size_t k = 0; k < s.x.size(); ++k)
      if (s.x[k] > 0 && s.y[k] > 0) {
        x0 = std::min(x0, s.x[k]);
        x1 = std::max(x1, s.x[k]);
        y0 = std::min(y0, s.y[k]);
        y1 = std::max(y1, s.y[k]);
      }
  if (!(x1 > 0)) x0 = 0.1, x1 = 1, y0 = 0.1, y1 = 1;
  const double lx0 = std::floor(std::log10(x0)), lx1 = std::max(std::ceil(std::log10(x1)), lx0 + 1);
  const double ly0 = std::floor(std::log10(y0)), ly1 = std::max(std::ceil(std::log10(y1)), ly0 + 1);
  auto px = [&](double x) { return L + (std::log10(x) - lx0) / (lx1 - lx0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (std::log10(y) - ly0) / (ly1 - ly0) * (H - T - B); };

  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      W, H);
  s += fmt::format("<text x=\"{}\" y=\"22\" font-size=\"14\">{}</text>\n", L, escape(title));
  s += fmt::format("<path d=\"M{} {} L{} {} L{} {}\" fill=\"none\" stroke=\"black\"/>\n", L, T, L, H - B, W - R, H - B);
  for (double e = lx0; e <= lx1 + 1e-9; e += 1) {
    const double x = L + (e - lx0) / (lx1 - lx0) * (W - L - R);
    s += fmt::format("<path d=\"M{:.1f} {} L{:.1f} {}\" stroke=\"#ddd\"/>\n", x, T, x, H - B);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">1e{}</text>\n", x, H - B + 15, e);
  }
  for (double e = ly0; e <= ly1 + 1e-9; e += 1) {
    const double y = H - B - (e - ly0) / (ly1 - ly0) * (H - T - B);
    s += fmt::format("<path d=\"M{} {:.1f} L{} {:.1f}\" stroke=\"#ddd\"/>\n", L, y, W - R, y);
    s += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">1e{}</text>\n", L - 5, y + 4, e);
  }
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (L + W - R) / 2, H - 12, escape(xlabel));
  s += fmt::format("<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">{}</text>\n",
                   (T + H - B) / 2, (T + H - B) / 2, escape(ylabel));
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& sr = series[k];
    const char* col = kColors[k % 8];
    std::string d;
    for (std::size_t n = 0; n < sr.x.size(); ++n) {
      if (!(sr.x[n] > 0 && sr.y[n] > 0)) continue;
      d += fmt::format("{}{:.1f} {:.1f} ", d.empty() ? "M" : "L", px(sr.x[n]), py(sr.y[n]));
      s += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"{}\" fill=\"{}\"/>\n", px(sr.x[n]), py(sr.y[n]),
                       lines ? 3 : 1.5, col);
    }
    if (lines && !d.empty()) s += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"{}\"/>\n", d, col);
    const double ly = T + 14 * k + 6;
    s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n", W - R + 12, ly, col);
    s += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", W - R + 27, ly + 9, escape(sr.name));
  }
  return s + "</svg>\n";
}

}  // namespace homog2d
