// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [criterion numbers...]

#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "homog2d/cell.hpp"
#include "homog2d/effective.hpp"
#include "homog2d/error.hpp"
#include "homog2d/green.hpp"
#include "homog2d/rates.hpp"
#include "homog2d/solver.hpp"

using namespace homog2d;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTol = 1e-10;
constexpr int kN = 256;
constexpr int kP = 16;
const std::vector<double> kEps = {0.25, 0.125, 0.0625, 0.03125};

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double spread(const std::vector<double>& v) {
  double lo = v[0], hi = v[0];
  for (double x : v) lo = std::min(lo, x), hi = std::max(hi, x);
  return lo > 0.0 ? hi / lo : INFINITY;
}

struct Cell {
  CorrectorBundle cb;
  EffectiveTensors eff;
};

const Cell& cell(const std::string& name, int N = kN) {
  static std::map<std::pair<std::string, int>, Cell> memo;
  auto it = memo.find({name, N});
  if (it == memo.end()) {
    Cell c;
    c.cb = solve_cell_problems(sample_grid(preset(name), N), kTol, &c.eff);
    it = memo.emplace(std::pair{name, N}, std::move(c)).first;
  }
  return it->second;
}

// max |coarse(node) - fine interpolated at the same point|
double refinement_gap(const MatrixField& coarse, const MatrixField& fine) {
  double d = 0.0;
  const int N = coarse.N;
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i)
      d = std::max(d, std::abs(coarse(i, j, 0, 0) - fine.interpolate((i + 0.5) / N, (j + 0.5) / N, 0, 0)));
  return d;
}

Outcome c1_effective_tensor() {
  const Clock clock;
  EffectiveTensors eff;
  solve_cell_problems(sample_grid(preset("laminate"), kN), kTol, &eff);
  const double t = clock.seconds();
  const double a11 = eff.a(0, 0, 0, 0), a22 = eff.a(1, 1, 0, 0);
  const bool ok = std::abs(a11 - std::sqrt(3.0)) <= 5e-3 && std::abs(a22 - 2.0) <= 5e-3 && t < 10.0;
  return {ok, fmt::format("A11={:.6f} (sqrt3={:.6f}) A22={:.6f} (2) tol 5e-3, runtime {:.2f}s < 10s", a11,
                          std::sqrt(3.0), a22, t)};
}

Outcome c2_corrector_accuracy() {
  const auto& c = cell("laminate");
  double worst = 0.0;
  const double target = std::sqrt(3.0) / 3.0 - 1.0;
  for (int j = 0; j < kN; ++j) {
    // nodes 63 and 64 straddle y1 = 1/4
    const double d = (c.cb.chi[1](64, j, 0, 0) - c.cb.chi[1](63, j, 0, 0)) * kN;
    worst = std::max(worst, std::abs(d - target));
  }
  const auto& c64 = cell("laminate", 64).cb.chi[1];
  const auto& c128 = cell("laminate", 128).cb.chi[1];
  const double order = std::log2(refinement_gap(c64, c128) / refinement_gap(c128, c.cb.chi[1]));
  return {worst <= 1e-3 && order >= 1.8,
          fmt::format("max |d1chi1(0.25) - (sqrt3/3 - 1)| = {:.2e} <= 1e-3, refinement order 64->256 = {:.3f} >= 1.8",
                      worst, order)};
}

Outcome c3_manufactured() {
  std::vector<std::pair<double, double>> pts;
  for (int n : {32, 64, 128, 256}) {
    const DomainMesh mesh{n - 1};
    AssembleOptions opt;
    opt.lambda = 1.0;
    const auto op = assemble_Leps(preset("identity"), 1.0 / n, mesh, opt);
    const auto exact = Field::from_function(mesh, 1, [](double x, double y, int) {
      return std::sin(kPi * x) * std::sin(kPi * y);
    });
    const auto F = Field::from_function(mesh, 1, [](double x, double y, int) {
      return (2.0 * kPi * kPi + 1.0) * std::sin(kPi * x) * std::sin(kPi * y);
    });
    const auto u = solve_dirichlet(op, {}, F, Field(mesh, 1), 1e-12);
    pts.emplace_back(mesh.h(), norm(u - exact, NormKind::L2));
  }
  const auto fit = fit_rate(pts);
  return {std::abs(fit.slope - 2.0) <= 0.2, fmt::format("L2 error slope vs h = {:.4f} (2.0 +- 0.2)", fit.slope)};
}

const std::map<std::string, RateReport>& rate_reports(double* runtime = nullptr) {
  static std::map<std::string, RateReport> reps;
  static double seconds = 0.0;
  if (reps.empty()) {
    for (const auto* name : {"laminate", "full-lower-order"}) {
      const auto& c = cell(name);
      const Clock clock;
      RateExperiment exp;
      exp.set = preset(name);
      exp.eps = kEps;
      exp.P = kP;
      exp.tol = kTol;
      reps[name] = run_rate_experiment(exp, c.eff);
      seconds += clock.seconds();
    }
  }
  if (runtime) *runtime = seconds;
  return reps;
}

Outcome c4_lq_rate() {
  double t = 0.0;
  const auto& reps = rate_reports(&t);
  bool ok = t < 300.0;
  std::string d;
  for (const auto& [name, r] : reps) {
    const double s = r.get("L2").fit.slope;
    ok = ok && s >= 0.9;
    d += fmt::format("{} L2 slope {:.3f} >= 0.9; ", name, s);
  }
  return {ok, d + fmt::format("runtime {:.1f}s < 300s", t)};
}

Outcome c5_corrected_h1() {
  const auto& reps = rate_reports();
  bool ok = true;
  std::string d;
  for (const auto& [name, r] : reps) {
    const double sc = r.get("H1_corrected").fit.slope, su = r.get("H1").fit.slope;
    ok = ok && sc >= 0.9 && su < 0.5;
    d += fmt::format("{} corrected {:.3f} >= 0.9, uncorrected {:.3f} < 0.5; ", name, sc, su);
  }
  return {ok, d};
}

// Green columns per preset and eps, reduced to the quantities the criteria need.
struct GreenStats {
  double sym_defect = 0.0, sym_scale = 0.0;
  double rep_error = 0.0;
  double p4 = 0.0;
  double bmo = 0.0;
  double log_slope = 0.0;
};

Field seeded_rhs(const DomainMesh& mesh, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Field F(mesh, m);
  for (Eigen::Index k = 0; k < F.interior.size(); ++k) F.interior[k] = U(rng);
  return F;
}

const std::map<std::string, std::vector<GreenStats>>& green_stats() {
  static std::map<std::string, std::vector<GreenStats>> out;
  if (!out.empty()) return out;
  for (const auto& name : preset_names()) {
    const auto set = preset(name);
    for (double eps : kEps) {
      const auto mesh = DomainMesh::for_period(eps, kP);
      const auto op = assemble_Leps(set, eps, mesh);
      const double h = mesh.h();
      std::vector<GreenColumn> dir, adj;
      for (auto [x, y] : {std::pair{0.5, 0.5}, std::pair{0.375, 0.375}, std::pair{0.625, 0.5}}) {
        const int i = static_cast<int>(std::lround(x / h)), j = static_cast<int>(std::lround(y / h));
        dir.push_back(green_column(op, i, j, 0.0, kTol));
        adj.push_back(adjoint_column(set, nullptr, op, i, j, 0.0, kTol));
      }
      GreenStats g;
      const auto sym = adjoint_symmetry(dir, adj);
      g.sym_defect = sym.max_defect;
      g.sym_scale = sym.scale;
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Field F = seeded_rhs(mesh, set.m, seed);
        const Field u = solve_dirichlet(op, {}, F, Field(mesh, set.m), kTol);
        g.rep_error = std::max(g.rep_error, representation_check(adj, F, u).rel_error);
      }
      g.p4 = check_pointwise_bounds(dir[0], nullptr, nullptr, PointwiseSigmas{}, 512, 42).max_ratio("P4");
      for (const auto& col : dir[0].columns) g.bmo = std::max(g.bmo, bmo_norm(col, 64, 42));
      if (set.m == 1) g.log_slope = log_fit(dir[0], 4.0 * h, 0.125).slope;
      out[name].push_back(g);
    }
  }
  return out;
}

Outcome c6_symmetry() {
  bool ok = true;
  double worst = 0.0;
  for (const auto& [name, v] : green_stats())
    for (const auto& g : v) {
      ok = ok && g.sym_defect <= 1e-6 * g.sym_scale;
      worst = std::max(worst, g.sym_defect / g.sym_scale);
    }
  return {ok, fmt::format("max defect / column sup = {:.2e} <= 1e-6 over 4 presets x 4 eps", worst)};
}

Outcome c7_representation() {
  double worst = 0.0;
  for (const auto& [name, v] : green_stats())
    for (const auto& g : v) worst = std::max(worst, g.rep_error);
  return {worst <= 1e-6, fmt::format("max rel. L2 error over 5 seeded RHS, all presets and eps = {:.2e} <= 1e-6", worst)};
}

Outcome c8_log_bound() {
  const auto& stats = green_stats();
  const double slope = stats.at("identity").back().log_slope;
  const double target = 1.0 / (2.0 * kPi);
  bool ok = std::abs(slope - target) <= 0.15 * target;
  std::string d = fmt::format("Laplacian log slope {:.5f} vs 1/(2pi) = {:.5f} (15%); P4 ratio spread:", slope, target);
  for (const auto* name : {"laminate", "smooth-checkerboard", "full-lower-order"}) {
    std::vector<double> r;
    for (const auto& g : stats.at(name)) r.push_back(g.p4);
    const double s = spread(r);
    ok = ok && s < 2.0;
    d += fmt::format(" {} {:.3f}", name, s);
  }
  return {ok, d + " (< 2)"};
}

Outcome c9_green_convergence() {
  const Clock clock;
  const std::vector<std::pair<std::array<double, 2>, std::array<double, 2>>> pairs = {
      {{0.3, 0.5}, {0.7, 0.5}}, {{0.25, 0.5}, {0.75, 0.5}}, {{0.5, 0.25}, {0.5, 0.75}}};
  bool ok = true;
  std::string d;
  for (const auto* name : {"laminate", "full-lower-order"}) {
    const auto rep = green_convergence(preset(name), cell(name).eff, pairs, kEps, kP, 2.0, kTol);
    d += fmt::format("{}: cell-sup slopes", name);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const double s = rep.get(fmt::format("pair{}_cell", k + 1)).fit.slope;
      ok = ok && s >= 0.8;
      d += fmt::format(" {:.3f}", s);
    }
    d += " (point values";
    for (std::size_t k = 0; k < pairs.size(); ++k) d += fmt::format(" {:.3f}", rep.get(fmt::format("pair{}", k + 1)).fit.slope);
    d += "); ";
  }
  const double t = clock.seconds();
  ok = ok && t < 300.0;
  return {ok, d + fmt::format(">= 0.8, runtime {:.1f}s < 300s", t)};
}

Outcome c10_bmo() {
  bool ok = true;
  std::string d = "bmo spread:";
  for (const auto& [name, v] : green_stats()) {
    std::vector<double> b;
    for (const auto& g : v) b.push_back(g.bmo);
    const double s = spread(b);
    ok = ok && s < 2.0;
    d += fmt::format(" {} {:.3f}", name, s);
  }
  return {ok, d + " (< 2)"};
}

Outcome c11_structure() {
  bool ok = true;
  std::string d;
  for (const auto* name : {"laminate", "smooth-checkerboard", "full-lower-order"}) {
    const auto& c = cell(name);
    const auto& cb = c.cb;
    double bsup = 0.0, bmean = 0.0, bnorm = 0.0, err = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 3; ++k) {
        const auto& b = cb.b[i][k];
        bsup = std::max(bsup, b.sup());
        for (int r = 0; r < cb.m; ++r)
          for (int s = 0; s < cb.m; ++s) bmean = std::max(bmean, std::abs(b.mean(r, s)));
        for (double v : b.v) bnorm += v * v;
        // centred divergence D_j E_jik
        const auto& E0 = cb.E[0][i][k];
        const auto& E1 = cb.E[1][i][k];
        for (int q = 0; q < kN; ++q)
          for (int p = 0; p < kN; ++p)
            for (int r = 0; r < cb.m; ++r)
              for (int s = 0; s < cb.m; ++s) {
                const double div = (E0((p + 1) % kN, q, r, s) - E0((p + kN - 1) % kN, q, r, s)) * kN / 2.0 +
                                   (E1(p, (q + 1) % kN, r, s) - E1(p, (q + kN - 1) % kN, r, s)) * kN / 2.0;
                err += (div - b(p, q, r, s)) * (div - b(p, q, r, s));
              }
      }
    const double rel = bnorm > 0.0 ? std::sqrt(err / bnorm) : 0.0;
    const double anti = antisymmetry_defect(cb.E);
    double theta = 0.0;
    for (const auto& [id, v] : cell_residuals(sample_grid(preset(name), kN), cb, c.eff))
      if (id.starts_with("theta")) theta = std::max(theta, v);
    const bool pass = bmean <= 1e-8 * std::max(1.0, bsup) && anti == 0.0 && rel <= 1e-2 && theta <= kTol;
    ok = ok && pass;
    d += fmt::format("{}: |mean b| {:.1e}, antisym {:.0e}, DE-b {:.2e}, theta res {:.1e}; ", name, bmean, anti, rel,
                     theta);
  }
  d += "two-scale identity order:";
  for (const auto* name : {"laminate", "full-lower-order"}) {
    const auto chk = two_scale_identity_check(preset(name), 0.25, {32, 64}, kTol);
    ok = ok && chk.order >= 1.5;
    d += fmt::format(" {} {:.3f}", name, chk.order);
  }
  return {ok, d + " (>= 1.5)"};
}

Outcome c12_uniformity() {
  bool ok = true;
  std::string d;
  for (const auto* name : {"laminate", "full-lower-order"}) {
    const auto set = preset(name);
    const int m = set.m;
    std::vector<double> w2, w4, hold, maxp, energy;
    for (double eps : kEps) {
      const auto mesh = DomainMesh::for_period(eps, kP);
      const auto op = assemble_Leps(set, eps, mesh);
      const auto F = Field::from_function(mesh, m, [](double x, double y, int a) {
        return 1.0 + (0.5 + 0.5 * a) * std::sin(kPi * x) * std::sin(kPi * y);
      });
      const auto g = Field::from_function(mesh, m, [](double x, double y, int a) { return 0.5 * x + 0.25 * (a + 1) * y; });
      const auto gmp = Field::from_function(mesh, m, [](double x, double y, int a) {
        return std::cos(2 * kPi * x) * std::cos(kPi * y) + 0.5 * a * x * y;
      });
      const Field zero(mesh, m);
      const Field u = solve_dirichlet(op, {}, F, zero, kTol);
      const Field v = solve_dirichlet(op, {}, zero, gmp, kTol);
      const Field w = solve_dirichlet(op, {}, F, g, kTol);
      const double f2 = norm(F, NormKind::L2), f4 = norm(F, NormKind::Lp, 4.0);
      w2.push_back(norm(u, NormKind::W1pSemi, 2.0) / f2);
      w4.push_back(norm(u, NormKind::W1pSemi, 4.0) / f4);
      hold.push_back(holder_seminorm(u, 0.5, 512, 42) / f4);
      maxp.push_back(norm(v, NormKind::Linf) / gmp.boundary.cwiseAbs().maxCoeff());
      energy.push_back(norm(w, NormKind::H1) / (f2 + g.boundary.cwiseAbs().maxCoeff()));
    }
    d += fmt::format("{}:", name);
    for (const auto& [id, v] : std::vector<std::pair<const char*, const std::vector<double>*>>{
             {"W12", &w2}, {"W14", &w4}, {"holder", &hold}, {"maxp", &maxp}, {"energy", &energy}}) {
      const double s = spread(*v);
      ok = ok && s < 2.0;
      d += fmt::format(" {} {:.3f}", id, s);
    }
    d += "; ";
  }
  return {ok, d + "spreads < 2"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"laminate effective tensor", c1_effective_tensor},
      {"corrector accuracy", c2_corrector_accuracy},
      {"manufactured solution", c3_manufactured},
      {"L^q homogenization rate", c4_lq_rate},
      {"corrected H1 rate", c5_corrected_h1},
      {"Green symmetry", c6_symmetry},
      {"Green representation", c7_representation},
      {"2D log bound", c8_log_bound},
      {"Green convergence", c9_green_convergence},
      {"BMO uniformity", c10_bmo},
      {"structural invariants", c11_structure},
      {"uniformity suite", c12_uniformity},
  };
  std::set<int> only;
  for (int k = 1; k < argc; ++k) only.insert(std::atoi(argv[k]));
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    const Clock clock;
    try {
      o = criteria[k].second();
    } catch (const Error& e) {
      o = {false, fmt::format("error: {}", e.what())};
    }
    if (!o.pass) ++failed;
    fmt::print("[{}] {:>2} {}: {} [{:.1f}s]\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first, o.detail,
               clock.seconds());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
