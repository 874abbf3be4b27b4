#include "homog2d/rates.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "homog2d/error.hpp"
#include "homog2d/green.hpp"
#include "homog2d/parallel.hpp"
#include "homog2d/stencil.hpp"

namespace homog2d {

RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw Error("a rate fit needs at least three points");
  RateFit f;
  for (const auto& [e, err] : points) {
    if (!(e > 0.0)) throw Error("eps values must be positive");
    if (!(err > 0.0)) {
      f.exact = true;
      return f;
    }
  }
  const double n = static_cast<double>(points.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [e, err] : points) {
    const double x = std::log(e), y = std::log(err);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double b = (sy - f.slope * sx) / n;
  for (const auto& [e, err] : points) f.residual = std::max(f.residual, std::abs(b + f.slope * std::log(e) - std::log(err)));
  return f;
}

Field two_scale_expansion(const Field& u0, const CorrectorBundle& chi, double eps) {
  if (chi.m != u0.m) throw Error("corrector bundle and field have different system sizes");
  if (!(eps > 0.0)) throw Error("eps must be positive");
  const DomainMesh& mesh = u0.mesh;
  const int s = mesh.side(), m = u0.m;
  std::vector<std::array<Eigen::VectorXd, 2>> grads;
  for (int a = 0; a < m; ++a) grads.push_back(nodal_gradient(u0, a));
  Field out = u0;
  for (int j = 0; j < s; ++j)
    for (int i = 0; i < s; ++i) {
      const double y1 = mesh.x(i) / eps, y2 = mesh.x(j) / eps;
      for (int b = 0; b < m; ++b) {
        double corr = 0.0;
        for (int g = 0; g < m; ++g) {
          corr += chi.chi[0].interpolate(y1, y2, b, g) * u0.value(i, j, g);
          for (int k = 0; k < 2; ++k) corr += chi.chi[k + 1].interpolate(y1, y2, b, g) * grads[g][k][j * s + i];
        }
        out.set(i, j, b, u0.value(i, j, b) + eps * corr);
      }
    }
  return out;
}

namespace {

int period_nodes(double eps, const DomainMesh& mesh) {
  const double P = (mesh.M + 1) * eps;
  const long long r = std::llround(P);
  if (r < 1 || std::abs(P - static_cast<double>(r)) > 1e-9 * std::max(1.0, P))
    throw Error(fmt::format("eps = {} is not commensurate with the mesh (M+1 = {})", eps, mesh.M + 1));
  return static_cast<int>(r);
}

}  // namespace

std::vector<Field> dirichlet_corrector(const CoefficientSet& set, double eps, const DomainMesh& mesh, int k,
                                       double tol) {
  if (k < 0 || k > 2) throw Error(fmt::format("corrector index k={} out of range", k));
  AssembleOptions opt;
  opt.leading_only = true;
  const DiscreteOperator op = assemble_Leps(set, eps, mesh, opt);
  const int m = set.m;
  std::vector<Field> out;
  NineStencil drift;
  if (k == 0) {
    FormParts parts;
    parts.leading = parts.convection = parts.zeroth = false;
    drift = assemble_form(mesh.side(), false, mesh.h(), sample_lattice(set, period_nodes(eps, mesh)), 0, parts);
  }
  for (int g = 0; g < m; ++g) {
    Field trace = Field::from_function(mesh, m, [&](double x, double y, int a) {
      if (a != g) return 0.0;
      return k == 0 ? 1.0 : (k == 1 ? x : y);
    });
    Field F(mesh, m);
    if (k == 0) {
      // -div(A grad Phi) = div(V e_g)  <=>  F = -(drift part applied to the constant e_g)
      Field e = Field::from_function(mesh, m, [&](double, double, int a) { return a == g ? 1.0 : 0.0; });
      Eigen::VectorXd full;
      drift.apply(e.full(), full);
      F = Field::from_full(mesh, m, -full);
    }
    out.push_back(solve_dirichlet(op, {}, F, trace, tol));
  }
  return out;
}

const RateSeries& RateReport::get(const std::string& id) const {
  for (const auto& s : series)
    if (s.norm_id == id) return s;
  throw Error(fmt::format("rate report has no series '{}'", id));
}

namespace {

struct EpsErrors {
  std::vector<std::pair<std::string, double>> err;
  double residual = 0.0;
};

RateReport collect(const std::string& name, const std::vector<double>& eps, const std::vector<EpsErrors>& rows) {
  RateReport rep;
  rep.preset = name;
  for (std::size_t c = 0; c < rows.front().err.size(); ++c) {
    RateSeries s;
    s.norm_id = rows.front().err[c].first;
    for (std::size_t e = 0; e < eps.size(); ++e) {
      s.eps.push_back(eps[e]);
      s.error.push_back(rows[e].err[c].second);
    }
    bool tiny = true;
    for (double v : s.error) tiny = tiny && v < 1e-8;
    if (tiny) {
      s.fit.exact = true;
    } else {
      std::vector<std::pair<double, double>> pts;
      for (std::size_t e = 0; e < eps.size(); ++e) pts.emplace_back(s.eps[e], s.error[e]);
      s.fit = fit_rate(pts);
    }
    rep.series.push_back(std::move(s));
  }
  for (const auto& r : rows) rep.residuals.push_back(r.residual);
  return rep;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

RateReport run_rate_experiment(const RateExperiment& exp, const EffectiveTensors& eff, const CorrectorBundle* chi) {
  const auto t0 = std::chrono::steady_clock::now();
  if (exp.eps.size() < 3) throw Error("a rate experiment needs at least three eps values");
  const int m = exp.set.m;
  if (eff.m != m) throw Error("effective tensors do not match the coefficient set");
  const NodalFunction F = exp.F ? exp.F : NodalFunction([](double, double, int) { return 1.0; });
  const NodalFunction g = exp.g ? exp.g : NodalFunction([](double, double, int) { return 0.0; });
  std::vector<EpsErrors> rows(exp.eps.size());

  parallel_for(static_cast<int>(exp.eps.size()), exp.threads, [&](int e) {
    const double eps = exp.eps[e];
    const DomainMesh mesh = DomainMesh::for_period(eps, exp.P);
    AssembleOptions opt;
    opt.lambda = exp.lambda;
    const Field Ff = Field::from_function(mesh, m, F);
    const Field gf = Field::from_function(mesh, m, g);
    SolveInfo i1, i2;
    Field ue, u0;
    {
      const DiscreteOperator op = assemble_Leps(exp.set, eps, mesh, opt);
      ue = solve_dirichlet(op, {}, Ff, gf, exp.tol, &i1);
    }
    {
      const DiscreteOperator op0 = assemble_L0(eff, mesh, opt);
      u0 = solve_dirichlet(op0, {}, Ff, gf, exp.tol, &i2);
    }
    const Field diff = ue - u0;
    EpsErrors& row = rows[e];
    row.residual = std::max(i1.residual, i2.residual);
    row.err.emplace_back("L2", norm(diff, NormKind::L2));
    row.err.emplace_back("Linf", norm(diff, NormKind::Linf));
    row.err.emplace_back("H1", norm(diff, NormKind::H1));
    row.err.emplace_back("L2_interior", norm(diff, NormKind::L2, 2.0, exp.interior));

    // corrected error u_eps - Phi_0 u0 - (Phi_k - P_k) d_k u0
    std::array<std::vector<Field>, 3> phi;
    for (int k = 0; k < 3; ++k) phi[k] = dirichlet_corrector(exp.set, eps, mesh, k, exp.tol);
    std::vector<std::array<Eigen::VectorXd, 2>> grads;
    for (int a = 0; a < m; ++a) grads.push_back(nodal_gradient(u0, a));
    Field w = ue;
    const int s = mesh.side();
    for (int j = 0; j < s; ++j)
      for (int i = 0; i < s; ++i)
        for (int a = 0; a < m; ++a) {
          double v = w.value(i, j, a);
          for (int b = 0; b < m; ++b) {
            v -= phi[0][b].value(i, j, a) * u0.value(i, j, b);
            for (int k = 0; k < 2; ++k) {
              const double pk = (a == b) ? (k == 0 ? mesh.x(i) : mesh.x(j)) : 0.0;
              v -= (phi[k + 1][b].value(i, j, a) - pk) * grads[b][k][j * s + i];
            }
          }
          w.set(i, j, a, v);
        }
    row.err.emplace_back("H1_corrected", norm(w, NormKind::H1));
    row.err.emplace_back("H1_corrected_interior", norm(w, NormKind::H1, 2.0, exp.interior));
    if (chi) {
      const Field ts = two_scale_expansion(u0, *chi, eps);
      row.err.emplace_back("H1_two_scale_interior", norm(ue - ts, NormKind::H1, 2.0, exp.interior));
    }
  });
  RateReport rep = collect(exp.set.name, exp.eps, rows);
  rep.runtime = seconds_since(t0);
  return rep;
}

double green_convergence_bound(double eps, double dist) {
  if (!(dist > 0.0)) throw Error("distance must be positive");
  return eps / dist;
}

RateReport green_convergence(const CoefficientSet& set, const EffectiveTensors& eff,
                             const std::vector<std::pair<std::array<double, 2>, std::array<double, 2>>>& pairs,
                             const std::vector<double>& eps, int P, double rho_cells, double tol, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  if (pairs.empty()) throw Error("green_convergence needs at least one pair");
  if (eps.size() < 3) throw Error("green_convergence needs at least three eps values");
  auto dist_to_boundary = [](const std::array<double, 2>& p) { return std::min({p[0], p[1], 1 - p[0], 1 - p[1]}); };
  for (const auto& [x, y] : pairs) {
    const double r = std::hypot(x[0] - y[0], x[1] - y[1]);
    if (r < 0.25 || dist_to_boundary(x) < 0.25 || dist_to_boundary(y) < 0.25)
      throw Error(fmt::format("pair ({}, {}) - ({}, {}) violates the separation rule |x-y| >= 1/4, "
                              "dist(x), dist(y) >= 1/4",
                              x[0], x[1], y[0], y[1]));
  }
  const int m = set.m;
  std::vector<EpsErrors> rows(eps.size());
  parallel_for(static_cast<int>(eps.size()), threads, [&](int e) {
    const DomainMesh mesh = DomainMesh::for_period(eps[e], P);
    const double h = mesh.h();
    const DiscreteOperator ope = assemble_Leps(set, eps[e], mesh);
    const DiscreteOperator op0 = assemble_L0(eff, mesh);
    double worst = 0.0, residual = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& [x, y] = pairs[p];
      const int pi = static_cast<int>(std::lround(y[0] / h)), pj = static_cast<int>(std::lround(y[1] / h));
      const GreenColumn ge = green_column(ope, pi, pj, rho_cells * h, tol);
      const GreenColumn g0 = green_column(op0, pi, pj, rho_cells * h, tol);
      residual = std::max({residual, ge.residual, g0.residual});
      const double fx = x[0] / h, fy = x[1] / h;
      const int i0 = static_cast<int>(std::floor(fx)), j0 = static_cast<int>(std::floor(fy));
      const double tx = fx - i0, ty = fy - j0;
      double s = 0.0;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          auto d = [&](int i, int j) { return ge.at(i, j, a, b) - g0.at(i, j, a, b); };
          const double v = (1 - tx) * (1 - ty) * d(i0, j0) + tx * (1 - ty) * d(i0 + 1, j0) +
                           (1 - tx) * ty * d(i0, j0 + 1) + tx * ty * d(i0 + 1, j0 + 1);
          s += v * v;
        }
      const double diff = std::sqrt(s);
      // sup over the nodes of the period cell centred at x removes the corrector phase at x / eps
      const int half = static_cast<int>(std::lround(0.5 * eps[e] / h));
      const int ci = static_cast<int>(std::lround(fx)), cj = static_cast<int>(std::lround(fy));
      double cell = 0.0;
      for (int j = cj - half; j <= cj + half; ++j)
        for (int i = ci - half; i <= ci + half; ++i) {
          double t = 0.0;
          for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
              const double v = ge.at(i, j, a, b) - g0.at(i, j, a, b);
              t += v * v;
            }
          cell = std::max(cell, std::sqrt(t));
        }
      rows[e].err.emplace_back(fmt::format("pair{}", p + 1), diff);
      rows[e].err.emplace_back(fmt::format("pair{}_cell", p + 1), cell);
      worst = std::max(worst, cell);
    }
    rows[e].err.emplace_back("max", worst);
    rows[e].residual = residual;
  });
  RateReport rep = collect(set.name, eps, rows);
  rep.runtime = seconds_since(t0);
  return rep;
}

namespace {

// Manufactured periodic field u^a = sin(2 pi x1 + 0.7 a) cos(2 pi x2) and its derivatives.
struct Manufactured {
  static constexpr double w = 2.0 * std::numbers::pi;
  double u(double x, double y, int a) const { return std::sin(w * x + 0.7 * a) * std::cos(w * y); }
  // d[k]: k = 0 -> u, 1 -> d1 u, 2 -> d2 u
  double d(int k, double x, double y, int a) const {
    const double s = std::sin(w * x + 0.7 * a), c = std::cos(w * x + 0.7 * a);
    if (k == 0) return s * std::cos(w * y);
    if (k == 1) return w * c * std::cos(w * y);
    return -w * s * std::sin(w * y);
  }
  // dd(j, k) = d_j d_k u with d_0 = identity
  double dd(int j, int k, double x, double y, int a) const {
    if (k == 0) return d(j + 1, x, y, a);
    const double s = std::sin(w * x + 0.7 * a), c = std::cos(w * x + 0.7 * a);
    if (j == 0 && k == 1) return -w * w * s * std::cos(w * y);
    if (j == 1 && k == 2) return -w * w * s * std::cos(w * y);
    return -w * w * c * std::sin(w * y);
  }
};

}  // namespace

IdentityCheck two_scale_identity_check(const CoefficientSet& set, double eps, const std::vector<int>& Ns, double tol) {
  if (Ns.size() < 2) throw Error("the identity check needs a refinement pair");
  const double inv = 1.0 / eps;
  if (std::abs(inv - std::round(inv)) > 1e-12) throw Error("1/eps must be an integer on the unit torus");
  IdentityCheck out;
  const Manufactured U;
  const int m = set.m;
  for (int N : Ns) {
    const GridCoefficients grid = sample_grid(set, N);
    EffectiveTensors eff;
    const CorrectorBundle cb = solve_cell_problems(grid, tol, &eff);
    const int n = static_cast<int>(std::lround(N * inv));
    const double h = 1.0 / n;
    FormParts parts;
    parts.shift = set.lambda;
    const NineStencil Le = assemble_form(n, true, h, grid, 1, parts);
    const NineStencil L0 = assemble_form(n, true, h, sample_lattice(to_coefficient_set(eff), 1), 1, parts);
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    auto idx = [&](int i, int j, int a) { return (static_cast<std::size_t>(j) * n + i) * m + a; };
    auto xc = [&](int i) { return (i + 0.5) * h; };
    Eigen::VectorXd u0(nn * m), v(nn * m);
    // per-node fields on the fine torus: Ii, Ji (flux terms), Kt (E term), MN
    std::vector<double> flux0(nn * m), flux1(nn * m), ek0(nn * m), ek1(nn * m), mn(nn * m);
    std::array<std::array<MatrixField, 2>, 3> dth;
    for (int k = 0; k < 3; ++k) {
      auto g = centered_gradient(cb.theta[k]);
      dth[k][0] = std::move(g[0]);
      dth[k][1] = std::move(g[1]);
    }
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double x = xc(i), y = xc(j);
        const int ci = i % N, cj = j % N;
        const int s = 2 * ci + 1, t = 2 * cj + 1;
        for (int a = 0; a < m; ++a) {
          double corr = 0.0;
          for (int g = 0; g < m; ++g)
            for (int k = 0; k < 3; ++k) corr += cb.chi[k](ci, cj, a, g) * U.d(k, x, y, g);
          u0[idx(i, j, a)] = U.u(x, y, a);
          v[idx(i, j, a)] = U.u(x, y, a) + eps * corr;
          std::array<double, 2> I{}, J{}, EK{};
          double Mv = 0.0, Nv = 0.0;
          for (int d = 0; d < 2; ++d) {
            for (int b = 0; b < m; ++b)
              for (int g = 0; g < m; ++g)
                for (int k = 0; k < 3; ++k) {
                  const double chi = cb.chi[k](ci, cj, b, g);
                  for (int jj = 0; jj < 2; ++jj) I[d] += grid.a(d, jj, a, b, s, t) * chi * U.dd(jj, k, x, y, g);
                  I[d] += grid.V(d, a, b, s, t) * chi * U.d(k, x, y, g);
                  Mv += grid.B(d, a, b, s, t) * chi * U.dd(d, k, x, y, g);
                }
            for (int g = 0; g < m; ++g)
              for (int k = 0; k < 3; ++k) {
                J[d] += dth[k][d](ci, cj, a, g) * U.d(k, x, y, g);
                Mv += dth[k][d](ci, cj, a, g) * U.dd(d, k, x, y, g);
                for (int jj = 0; jj < 2; ++jj) EK[d] += cb.E[jj][d][k](ci, cj, a, g) * U.dd(jj, k, x, y, g);
              }
          }
          for (int b = 0; b < m; ++b) {
            double cv = grid.c(a, b, s, t) + (a == b ? set.lambda : 0.0);
            for (int g = 0; g < m; ++g)
              for (int k = 0; k < 3; ++k) Nv += cv * cb.chi[k](ci, cj, b, g) * U.d(k, x, y, g);
          }
          flux0[idx(i, j, a)] = I[0] + J[0];
          flux1[idx(i, j, a)] = I[1] + J[1];
          ek0[idx(i, j, a)] = EK[0];
          ek1[idx(i, j, a)] = EK[1];
          mn[idx(i, j, a)] = Mv + Nv;
        }
      }
    Eigen::VectorXd lhs, l0;
    Le.apply(v, lhs);
    L0.apply(u0, l0);
    Eigen::VectorXd rhs = l0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int ip = (i + 1) % n, im = (i + n - 1) % n, jp = (j + 1) % n, jm = (j + n - 1) % n;
        for (int a = 0; a < m; ++a) {
          auto D = [&](const std::vector<double>& f0, const std::vector<double>& f1) {
            return (f0[idx(ip, j, a)] - f0[idx(im, j, a)] + f1[idx(i, jp, a)] - f1[idx(i, jm, a)]) / (2 * h);
          };
          rhs[idx(i, j, a)] += -eps * D(ek0, ek1) - eps * D(flux0, flux1) + eps * mn[idx(i, j, a)];
        }
      }
    out.N.push_back(N);
    out.residual.push_back((lhs - rhs).norm() / lhs.norm());
  }
  const std::size_t k = out.N.size() - 1;
  out.order = std::log(out.residual[k - 1] / out.residual[k]) /
              std::log(static_cast<double>(out.N[k]) / out.N[k - 1]);
  return out;
}

}  // namespace homog2d
