#include "homog2d/green.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "homog2d/error.hpp"

namespace homog2d {

double GreenColumn::sup() const {
  double s = 0.0;
  for (const auto& c : columns) {
    if (c.interior.size()) s = std::max(s, c.interior.cwiseAbs().maxCoeff());
    if (c.boundary.size()) s = std::max(s, c.boundary.cwiseAbs().maxCoeff());
  }
  return s;
}

std::vector<std::array<int, 2>> ball_nodes(const DomainMesh& mesh, int i, int j, double rho) {
  const double r = rho / mesh.h() + 1e-9;
  const int k = static_cast<int>(std::floor(r));
  std::vector<std::array<int, 2>> out;
  for (int dj = -k; dj <= k; ++dj)
    for (int di = -k; di <= k; ++di) {
      const int a = i + di, b = j + dj;
      if (a < 1 || b < 1 || a > mesh.M || b > mesh.M) continue;
      if (di * di + dj * dj <= r * r) out.push_back({a, b});
    }
  return out;
}

Field averaged_source(const DomainMesh& mesh, int m, int i, int j, double rho, int gamma) {
  const auto nodes = ball_nodes(mesh, i, j, rho);
  if (nodes.empty()) throw Error("averaging ball contains no interior node");
  Field F(mesh, m);
  const double v = 1.0 / (static_cast<double>(nodes.size()) * mesh.h() * mesh.h());
  for (const auto& n : nodes) F.set(n[0], n[1], gamma, v);
  return F;
}

double ball_average(const Field& u, int i, int j, double rho, int alpha) {
  const auto nodes = ball_nodes(u.mesh, i, j, rho);
  if (nodes.empty()) throw Error("averaging ball contains no interior node");
  double s = 0.0;
  for (const auto& n : nodes) s += u.value(n[0], n[1], alpha);
  return s / static_cast<double>(nodes.size());
}

namespace {

double delta(const DomainMesh& mesh, int i, int j) {
  const double x = mesh.x(i), y = mesh.x(j);
  return std::min({x, y, 1.0 - x, 1.0 - y});
}

}  // namespace

GreenColumn green_column(const DiscreteOperator& op, int i, int j, double rho, double tol) {
  const DomainMesh& mesh = op.mesh;
  const double h = mesh.h();
  if (rho <= 0.0) rho = 2.0 * h;
  if (rho < h * (1 - 1e-9)) throw Error(fmt::format("averaging radius {} is below the mesh width {}", rho, h));
  if (i < 1 || j < 1 || i > mesh.M || j > mesh.M) throw Error("Green pole must be an interior node");
  if (rho > delta(mesh, i, j) * (1 + 1e-9))
    throw Error(fmt::format("averaging radius {} exceeds the pole's distance {} to the boundary", rho,
                            delta(mesh, i, j)));
  GreenColumn col;
  col.mesh = mesh;
  col.m = op.m;
  col.pole_i = i;
  col.pole_j = j;
  col.rho = rho;
  col.eps = op.eps;
  const Field zero(mesh, op.m);
  for (int g = 0; g < op.m; ++g) {
    SolveInfo info;
    col.columns.push_back(solve_dirichlet(op, {}, averaged_source(mesh, op.m, i, j, rho, g), zero, tol, &info));
    col.residual = std::max(col.residual, info.residual);
  }
  return col;
}

DiscreteOperator adjoint_operator(const CoefficientSet& set, const EffectiveTensors* eff, const DiscreteOperator& op) {
  AssembleOptions opt;
  opt.lambda = op.lambda;
  if (eff) {
    const CoefficientSet adj = to_coefficient_set(*eff).adjoint();
    EffectiveTensors e = from_coefficient_set(adj);
    e.quadrature_N = eff->quadrature_N;
    return assemble_L0(e, op.mesh, opt);
  }
  return assemble_Leps(set.adjoint(), op.eps, op.mesh, opt);
}

GreenColumn adjoint_column(const CoefficientSet& set, const EffectiveTensors* eff, const DiscreteOperator& op, int i,
                           int j, double rho, double tol) {
  GreenColumn col = green_column(adjoint_operator(set, eff, op), i, j, rho, tol);
  col.adjoint = true;
  return col;
}

SymmetryReport adjoint_symmetry(const std::vector<GreenColumn>& direct, const std::vector<GreenColumn>& adjoint) {
  if (direct.size() != adjoint.size()) throw Error("symmetry check needs matching pole lists");
  SymmetryReport r;
  for (const auto* list : {&direct, &adjoint})
    for (const auto& c : *list) r.scale = std::max(r.scale, c.sup());
  for (std::size_t k = 0; k < direct.size(); ++k) {
    if (direct[k].pole_i != adjoint[k].pole_i || direct[k].pole_j != adjoint[k].pole_j)
      throw Error("symmetry check needs matching poles");
    for (std::size_t l = 0; l < direct.size(); ++l) {
      if (k == l) continue;
      const auto& gy = direct[l];   // pole y
      const auto& gx = adjoint[k];  // pole x
      const int m = gy.m;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          const double lhs = ball_average(gy.columns[b], gx.pole_i, gx.pole_j, gy.rho, a);
          const double rhs = ball_average(gx.columns[a], gy.pole_i, gy.pole_j, gx.rho, b);
          r.max_defect = std::max(r.max_defect, std::abs(lhs - rhs));
        }
      ++r.pairs;
    }
  }
  return r;
}

RepresentationReport representation_check(const std::vector<GreenColumn>& adjoint, const Field& F, const Field& u) {
  RepresentationReport rep;
  double num = 0.0, den = 0.0;
  for (const auto& col : adjoint) {
    const double h2 = col.mesh.h() * col.mesh.h();
    for (int a = 0; a < col.m; ++a) {
      const double synth = h2 * col.columns[a].interior.dot(F.interior);
      const double direct = ball_average(u, col.pole_i, col.pole_j, col.rho, a);
      rep.synthesized.push_back(synth);
      rep.direct.push_back(direct);
      num += (synth - direct) * (synth - direct);
      den += direct * direct;
    }
  }
  rep.rel_error = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  return rep;
}

double bmo_norm(const Field& u, int centers, std::uint64_t seed) {
  const DomainMesh& mesh = u.mesh;
  const int s = mesh.side(), m = u.m;
  const double h = mesh.h();
  auto w = [&](int i) { return (i == 0 || i == s - 1) ? 0.5 * h : h; };
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, s - 1);
  const double diam = std::sqrt(2.0);
  std::vector<double> ubar(m);
  double best = 0.0;
  for (int c = 0; c < centers; ++c) {
    const int ci = pick(rng), cj = pick(rng);
    const double d0 = delta(mesh, ci, cj);
    for (double r = h;; r *= 2.0) {
      const int k = static_cast<int>(std::floor(r / h + 1e-9));
      const int i0 = std::max(0, ci - k), i1 = std::min(s - 1, ci + k);
      const int j0 = std::max(0, cj - k), j1 = std::min(s - 1, cj + k);
      const double rr = (r / h) * (r / h) + 1e-9;
      double area = 0.0;
      std::fill(ubar.begin(), ubar.end(), 0.0);
      const bool use_mean = r < d0;
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
          if ((i - ci) * (i - ci) + (j - cj) * (j - cj) > rr) continue;
          const double wt = w(i) * w(j);
          area += wt;
          if (use_mean)
            for (int a = 0; a < m; ++a) ubar[a] += wt * u.value(i, j, a);
        }
      if (use_mean)
        for (auto& x : ubar) x /= area;
      double osc = 0.0;
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
          if ((i - ci) * (i - ci) + (j - cj) * (j - cj) > rr) continue;
          double d2 = 0.0;
          for (int a = 0; a < m; ++a) {
            const double d = u.value(i, j, a) - ubar[a];
            d2 += d * d;
          }
          osc += w(i) * w(j) * std::sqrt(d2);
        }
      best = std::max(best, osc / area);
      if (r >= diam) break;
    }
  }
  return best;
}

std::vector<std::pair<std::string, double>> PointwiseReport::maxima() const {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& row : rows) {
    if (row.near_corner) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == row.ineq_id; });
    if (it == out.end())
      out.emplace_back(row.ineq_id, row.ratio);
    else
      it->second = std::max(it->second, row.ratio);
  }
  return out;
}

double PointwiseReport::max_ratio(const std::string& id) const {
  for (const auto& [k, v] : maxima())
    if (k == id) return v;
  return 0.0;
}

namespace {

// Frobenius norm of the m x m matrix G^{ab}(x, y) (or of a difference).
double mat_norm(const GreenColumn& c, int i, int j) {
  double s = 0.0;
  for (int g = 0; g < c.m; ++g)
    for (int a = 0; a < c.m; ++a) s += c.at(i, j, a, g) * c.at(i, j, a, g);
  return std::sqrt(s);
}

double diff_norm(const GreenColumn& c, int i0, int j0, int i1, int j1) {
  double s = 0.0;
  for (int g = 0; g < c.m; ++g)
    for (int a = 0; a < c.m; ++a) {
      const double d = c.at(i0, j0, a, g) - c.at(i1, j1, a, g);
      s += d * d;
    }
  return std::sqrt(s);
}

// Centred gradient norm at an interior node.
double grad_norm(const GreenColumn& c, int i, int j) {
  const double h = c.mesh.h();
  double s = 0.0;
  for (int g = 0; g < c.m; ++g)
    for (int a = 0; a < c.m; ++a) {
      const double dx = (c.at(i + 1, j, a, g) - c.at(i - 1, j, a, g)) / (2 * h);
      const double dy = (c.at(i, j + 1, a, g) - c.at(i, j - 1, a, g)) / (2 * h);
      s += dx * dx + dy * dy;
    }
  return std::sqrt(s);
}

}  // namespace

PointwiseReport check_pointwise_bounds(const GreenColumn& col, const GreenColumn* adjoint,
                                       const std::array<GreenColumn, 4>* shifted, const PointwiseSigmas& sg,
                                       int random_x, std::uint64_t seed) {
  for (double s : {sg.sigma, sg.sigma1, sg.sigma2, sg.sigma3, sg.sigma4})
    if (!(s > 0.0 && s < 1.0)) throw Error("pointwise exponents must lie in (0, 1)");
  const DomainMesh& mesh = col.mesh;
  const int M = mesh.M;
  const double h = mesh.h();
  PointwiseReport rep;

  std::vector<std::array<int, 2>> xs;
  for (int b = 0; b < 16; ++b)
    for (int a = 0; a < 16; ++a) {
      const int i = std::clamp(static_cast<int>(std::lround((a + 0.5) / 16.0 / h)), 1, M);
      const int j = std::clamp(static_cast<int>(std::lround((b + 0.5) / 16.0 / h)), 1, M);
      xs.push_back({i, j});
    }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(1, M);
  for (int k = 0; k < random_x; ++k) xs.push_back({pick(rng), pick(rng)});

  const int yi = col.pole_i, yj = col.pole_j;
  const double y1 = mesh.x(yi), y2 = mesh.x(yj);
  const double dy = delta(mesh, yi, yj);
  auto near_corner = [&](double a, double b) {
    for (double cx : {0.0, 1.0})
      for (double cy : {0.0, 1.0})
        if (std::hypot(a - cx, b - cy) < 4 * h) return true;
    return false;
  };
  const double diam = std::sqrt(2.0);

  for (const auto& x : xs) {
    const int xi = x[0], xj = x[1];
    const double x1 = mesh.x(xi), x2 = mesh.x(xj);
    const double r = std::hypot(x1 - y1, x2 - y2);
    if (r < 2 * h) {
      ++rep.excluded_near;
      continue;
    }
    const double dx = delta(mesh, xi, xj);
    const bool corner = near_corner(x1, x2) || near_corner(y1, y2);
    auto add = [&](const char* id, double lhs, double bound) {
      if (!(bound > 0.0)) return;
      rep.rows.push_back(BoundRow{id, x1, x2, y1, y2, lhs, bound, lhs / bound, corner});
      if (corner) ++rep.flagged_corner;
    };
    const double g = mat_norm(col, xi, xj);
    add("preliminary", g, std::pow(r, -sg.sigma));
    const bool bx = dx < r / 4, by = dy < r / 4;
    if (bx) add("P1", g, std::pow(dx / r, sg.sigma1));
    if (by) add("P2", g, std::pow(dy / r, sg.sigma2));
    if (bx || by) add("P3", g, std::pow(dx, sg.sigma1) * std::pow(dy, sg.sigma2) / std::pow(r, sg.sigma1 + sg.sigma2));
    if (!bx && !by) add("P4", g, 1.0 + std::log(diam / r));
    {
      const double ax = std::pow(dx / r, sg.sigma1), ay = std::pow(dy / r, sg.sigma2);
      add("combined", g, std::pow(r, -sg.sigma) * std::min({1.0, ax, ay, ax * ay}));
    }
    // Hoelder differences in x (P5) and, through the adjoint, in y (P6).
    double best5 = -1, bound5 = 0, best6 = -1, bound6 = 0;
    for (int k : {1, 2, 4})
      for (int d = 0; d < 2; ++d) {
        const int zi = xi + (d == 0 ? k : 0), zj = xj + (d == 1 ? k : 0);
        if (zi > M || zj > M) continue;
        const double dz = k * h;
        if (!(dz < r / 2)) continue;
        const double b5 = std::pow(dz / r, sg.sigma3);
        const double l5 = diff_norm(col, xi, xj, zi, zj);
        if (l5 / b5 > best5) best5 = l5 / b5, bound5 = b5;
        if (adjoint) {
          const double b6 = std::pow(dz / r, sg.sigma4);
          const double l6 = diff_norm(*adjoint, xi, xj, zi, zj);
          if (l6 / b6 > best6) best6 = l6 / b6, bound6 = b6;
        }
      }
    if (best5 >= 0) add("P5", best5 * bound5, bound5);
    if (best6 >= 0) add("P6", best6 * bound6, bound6);
    // Lipschitz bounds
    if (xi > 1 && xj > 1 && xi < M && xj < M) {
      add("L1", grad_norm(col, xi, xj), std::min(1.0, dy / r) / r);
      if (adjoint) add("L2", grad_norm(*adjoint, xi, xj), std::min(1.0, dy / r) / r);
      if (shifted) {
        double s = 0.0;
        for (int k = 0; k < 2; ++k) {
          const GreenColumn& p = (*shifted)[2 * k];
          const GreenColumn& q = (*shifted)[2 * k + 1];
          for (int l = 0; l < 2; ++l) {
            const int di = l == 0 ? 1 : 0, dj = 1 - di;
            for (int g2 = 0; g2 < col.m; ++g2)
              for (int a = 0; a < col.m; ++a) {
                const double up = p.at(xi + di, xj + dj, a, g2) - q.at(xi + di, xj + dj, a, g2);
                const double dn = p.at(xi - di, xj - dj, a, g2) - q.at(xi - di, xj - dj, a, g2);
                const double v = (up - dn) / (4 * h * h);
                s += v * v;
              }
          }
        }
        add("L3", std::sqrt(s), 1.0 / (r * r));
      }
    }
  }
  return rep;
}

LogFit log_fit(const GreenColumn& col, double rmin, double rmax) {
  const DomainMesh& mesh = col.mesh;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int j = 1; j <= mesh.M; ++j)
    for (int i = 1; i <= mesh.M; ++i) {
      const double r = std::hypot(mesh.x(i) - col.pole_x(), mesh.x(j) - col.pole_y());
      if (r < rmin - 1e-12 || r > rmax + 1e-12) continue;
      const double x = std::log(1.0 / r), y = col.at(i, j, 0, 0);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
  LogFit f;
  f.samples = n;
  if (n < 2) throw Error("log fit needs at least two samples");
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

}  // namespace homog2d
