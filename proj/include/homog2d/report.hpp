#pragma once

#include <string>
#include <vector>

#include "homog2d/green.hpp"
#include "homog2d/rates.hpp"

namespace homog2d {

/// PASS: check met. FLAG: estimate-ratio drift, reported only. FAIL: solver
/// failure or violated invariant; makes the run exit nonzero.
enum class Status { Pass, Flag, Fail };

std::string to_string(Status s);

/// One line of summary.csv / report.txt.
struct Check {
  std::string id;
  Status status = Status::Pass;
  double value = 0.0;
  std::string limit;   // human-readable threshold, e.g. "<= 1e-06"
  std::string source;  // CSV the value comes from
};

/// Number format shared by summary.csv and report.txt.
std::string format_value(double v);

/// id,status,value,limit,source
std::string summary_csv(const std::vector<Check>& checks);
/// Text view of summary.csv.
std::string report_text(const std::string& title, const std::vector<Check>& checks);

/// preset,eps,norm_id,error,slope,residual (slope "exact" when no fit applies)
std::string rates_csv(const std::vector<RateReport>& reps);

std::string green_report_header();
/// ineq_id,eps,x1,x2,y1,y2,lhs,bound,ratio rows (corner-flagged rows included).
std::string green_report_rows(double eps, const PointwiseReport& rep);

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
};

/// Log-log plot; lines joins the points of each series, otherwise dots only.
std::string svg_loglog(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<PlotSeries>& series, bool lines = true);

}  // namespace homog2d
