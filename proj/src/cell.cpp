#include "homog2d/cell.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "homog2d/effective.hpp"
#include "homog2d/error.hpp"
#include "homog2d/fft.hpp"
#include "homog2d/krylov.hpp"
#include "homog2d/parallel.hpp"
#include "homog2d/stencil.hpp"

namespace homog2d {

double MatrixField::sup() const {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

double MatrixField::mean(int r, int c) const {
  double s = 0.0;
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) s += (*this)(i, j, r, c);
  return s / (static_cast<double>(N) * N);
}

double MatrixField::interpolate(double y1, double y2, int r, int c) const {
  // node i sits at (i + 1/2)/N
  const double x = y1 * N - 0.5, y = y2 * N - 0.5;
  const double fx = std::floor(x), fy = std::floor(y);
  const double tx = x - fx, ty = y - fy;
  auto wrap = [n = N](long long k) { return static_cast<int>(((k % n) + n) % n); };
  const int i0 = wrap(static_cast<long long>(fx)), j0 = wrap(static_cast<long long>(fy));
  const int i1 = (i0 + 1) % N, j1 = (j0 + 1) % N;
  return (1 - tx) * (1 - ty) * (*this)(i0, j0, r, c) + tx * (1 - ty) * (*this)(i1, j0, r, c) +
         (1 - tx) * ty * (*this)(i0, j1, r, c) + tx * ty * (*this)(i1, j1, r, c);
}

namespace {

bool leading_symmetric(const GridCoefficients& g) {
  const int m = g.m(), w = g.side();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          for (int t = 0; t < w; ++t)
            for (int s = 0; s < w; ++s)
              if (g.a(i, j, a, b, s, t) != g.a(j, i, b, a, s, t)) return false;
  return true;
}

Eigen::MatrixXd mean_block(const GridCoefficients& g, int d) {
  const int m = g.m();
  Eigen::MatrixXd M(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) M(a, b) = g.mean(g.layout().a(d, d, a, b));
  return M;
}

void check_same(const GridCoefficients& g, const MatrixField& f) {
  if (f.N != g.N() || f.rows != g.m() || f.cols != g.m())
    throw Error(fmt::format("grid mismatch: field is {}x{} with {}x{} blocks, grid is {}x{} with m={}", f.N, f.N, f.rows,
                            f.cols, g.N(), g.N(), g.m()));
}

// Torus operator -D.(A D) and its spectral preconditioner.
struct TorusSystem {
  int N, m;
  SparseMatrix L;
  std::shared_ptr<BlockSpectralPreconditioner> pre;
  bool symmetric;
};

TorusSystem torus_system(const GridCoefficients& g) {
  const int N = g.N();
  const double h = 1.0 / N;
  FormParts parts;
  parts.drift = parts.convection = parts.zeroth = false;
  TorusSystem sys{N, g.m(), assemble_form(N, true, h, g, 1, parts).matrix(), nullptr, leading_symmetric(g)};
  sys.pre = std::make_shared<BlockSpectralPreconditioner>(
      BlockSpectralPreconditioner::periodic(N, h, mean_block(g, 0), mean_block(g, 1)));
  return sys;
}

Projection mean_projection(int m) {
  return [m](Eigen::VectorXd& v) {
    const Eigen::Index nodes = v.size() / m;
    for (int a = 0; a < m; ++a) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < nodes; ++k) s += v[k * m + a];
      s /= static_cast<double>(nodes);
      for (Eigen::Index k = 0; k < nodes; ++k) v[k * m + a] -= s;
    }
  };
}

Eigen::VectorXd chi_rhs(const GridCoefficients& g, int k, int beta) {
  const int N = g.N(), m = g.m();
  const double h = 1.0 / N;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N) * N * m);
  auto at = [&](int i, int j, int a) -> double& {
    return rhs[(static_cast<Eigen::Index>((j + N) % N) * N + (i + N) % N) * m + a];
  };
  if (k == 0) {
    FormParts parts;
    parts.leading = parts.convection = parts.zeroth = false;
    const NineStencil drift = assemble_form(N, true, h, g, 1, parts);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(rhs.size()), out;
    for (Eigen::Index n = 0; n < static_cast<Eigen::Index>(N) * N; ++n) e[n * m + beta] = 1.0;
    drift.apply(e, out);
    return -out;
  }
  const int d = k - 1;
  const int di = d == 0 ? 1 : 0, dj = 1 - di;
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i)
      for (int a = 0; a < m; ++a) {
        // face between (i,j) and (i+di, j+dj)
        const double F = g.a(d, d, a, beta, 2 * i + 1 + di, 2 * j + 1 + dj) / h;
        at(i, j, a) += F;
        at(i + di, j + dj, a) -= F;
        // cell with lower-left node (i,j)
        const double a12 = d == 1 ? g.a(0, 1, a, beta, 2 * i + 2, 2 * j + 2) : 0.0;
        const double a21 = d == 0 ? g.a(1, 0, a, beta, 2 * i + 2, 2 * j + 2) : 0.0;
        if (a12 == 0.0 && a21 == 0.0) continue;
        for (int rj = 0; rj < 2; ++rj)
          for (int ri = 0; ri < 2; ++ri) at(i + ri, j + rj, a) -= (a12 * (2 * ri - 1) + a21 * (2 * rj - 1)) / (2 * h);
      }
  return rhs;
}

MatrixField zero_field(int N, int m) { return MatrixField(N, m, m); }

}  // namespace

MatrixField solve_chi(const GridCoefficients& grid, int k, double tol, double* residual, int threads) {
  if (k < 0 || k > 2) throw Error(fmt::format("corrector index k={} out of range", k));
  if (!(tol > 0.0)) throw Error("tolerance must be positive");
  const int N = grid.N(), m = grid.m();
  const TorusSystem sys = torus_system(grid);
  const Projection proj = mean_projection(m);
  const LinearMap A = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = sys.L * x; };
  const LinearMap M = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { sys.pre->apply(x, y); };
  KrylovOptions opt;
  opt.tol = tol;

  MatrixField out = zero_field(N, m);
  std::vector<double> res(m, 0.0);
  parallel_for(m, threads, [&](int beta) {
    const Eigen::VectorXd rhs = chi_rhs(grid, k, beta);
    KrylovResult r = sys.symmetric ? pcg(A, M, rhs, opt, proj) : bicgstab(A, M, rhs, opt, proj);
    proj(r.x);
    res[beta] = r.residual;
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < N; ++i)
        for (int a = 0; a < m; ++a) out(i, j, a, beta) = r.x[(static_cast<Eigen::Index>(j) * N + i) * m + a];
  });
  if (residual) *residual = *std::max_element(res.begin(), res.end());
  return out;
}

std::array<MatrixField, 2> centered_gradient(const MatrixField& f) {
  const int N = f.N;
  const double s = N / 2.0;
  std::array<MatrixField, 2> g{MatrixField(N, f.rows, f.cols), MatrixField(N, f.rows, f.cols)};
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i)
      for (int r = 0; r < f.rows; ++r)
        for (int c = 0; c < f.cols; ++c) {
          g[0](i, j, r, c) = (f((i + 1) % N, j, r, c) - f((i + N - 1) % N, j, r, c)) * s;
          g[1](i, j, r, c) = (f(i, (j + 1) % N, r, c) - f(i, (j + N - 1) % N, r, c)) * s;
        }
  return g;
}

BField compute_b(const GridCoefficients& grid, const std::array<MatrixField, 3>& chi, const EffectiveTensors& eff) {
  const int N = grid.N(), m = grid.m();
  for (const auto& c : chi) check_same(grid, c);
  if (eff.m != m) throw Error("effective tensors do not match the grid");
  BField b;
  for (int k = 0; k < 3; ++k) {
    const auto d = centered_gradient(chi[k]);
    for (int i = 0; i < 2; ++i) {
      MatrixField f = zero_field(N, m);
      for (int y = 0; y < N; ++y)
        for (int x = 0; x < N; ++x) {
          const int s = 2 * x + 1, t = 2 * y + 1;
          for (int a = 0; a < m; ++a)
            for (int c = 0; c < m; ++c) {
              double v = k == 0 ? eff.V(i, a, c) - grid.V(i, a, c, s, t)
                                : eff.a(i, k - 1, a, c) - grid.a(i, k - 1, a, c, s, t);
              for (int j = 0; j < 2; ++j)
                for (int be = 0; be < m; ++be) v -= grid.a(i, j, a, be, s, t) * d[j](x, y, be, c);
              f(x, y, a, c) = v;
            }
        }
      b[i][k] = std::move(f);
    }
  }
  return b;
}

MatrixField theta_rhs(const GridCoefficients& grid, const std::array<MatrixField, 3>& chi,
                      const EffectiveTensors& eff, int k) {
  if (k < 0 || k > 2) throw Error(fmt::format("corrector index k={} out of range", k));
  const int N = grid.N(), m = grid.m();
  check_same(grid, chi[k]);
  const auto d = centered_gradient(chi[k]);
  MatrixField f = zero_field(N, m);
  for (int y = 0; y < N; ++y)
    for (int x = 0; x < N; ++x) {
      const int s = 2 * x + 1, t = 2 * y + 1;
      for (int a = 0; a < m; ++a)
        for (int c = 0; c < m; ++c) {
          double v = k == 0 ? eff.c(a, c) - grid.c(a, c, s, t) : eff.B(k - 1, a, c) - grid.B(k - 1, a, c, s, t);
          for (int j = 0; j < 2; ++j)
            for (int be = 0; be < m; ++be) v -= grid.B(j, a, be, s, t) * d[j](x, y, be, c);
          f(x, y, a, c) = v;
        }
    }
  return f;
}

namespace {

// Entries whose sup is below this are rounding noise of O(scale) data.
double noise_floor(double scale) { return 1e-13 * std::max(1.0, scale); }

double eff_scale(const EffectiveTensors& eff) {
  double s = 0.0;
  for (const auto* v : {&eff.A_hat, &eff.V_hat, &eff.B_hat, &eff.c_hat})
    for (double x : *v) s = std::max(s, std::abs(x));
  return s;
}

// Solves lap_h u = rhs entrywise; rejects right-hand sides with a visible
// mean. Entries with sup <= floor are treated as zero.
MatrixField poisson_entrywise(const MatrixField& rhs, double tol, const char* what, double* residual,
                              double floor) {
  const int N = rhs.N;
  const PeriodicFFT fft(N);
  MatrixField out(N, rhs.rows, rhs.cols);
  const std::size_t nn = static_cast<std::size_t>(N) * N;
  std::vector<double> f(nn), u(nn), lap(nn);
  double worst = 0.0;
  for (int r = 0; r < rhs.rows; ++r)
    for (int c = 0; c < rhs.cols; ++c) {
      double sup = 0.0;
      for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) {
          f[j * N + i] = rhs(i, j, r, c);
          sup = std::max(sup, std::abs(f[j * N + i]));
        }
      if (sup <= floor) continue;
      const double mean = rhs.mean(r, c);
      if (std::abs(mean) > 1e-6 * sup)
        throw Error(fmt::format("{}: right-hand side entry ({}, {}) has mean {:.3e}, above 1e-6 * sup = {:.3e}", what,
                                r + 1, c + 1, mean, 1e-6 * sup));
      periodic_poisson_solve(fft, f, u);
      periodic_laplacian(N, u, lap);
      double err = 0.0;
      for (std::size_t k = 0; k < nn; ++k) err = std::max(err, std::abs(lap[k] - (f[k] - mean)));
      worst = std::max(worst, err / sup);
      for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) out(i, j, r, c) = u[j * N + i];
    }
  if (worst > tol) throw Error(fmt::format("{}: Poisson residual {:.3e} exceeds tolerance {:.3e}", what, worst, tol));
  if (residual) *residual = worst;
  return out;
}

}  // namespace

MatrixField solve_theta(const GridCoefficients& grid, const std::array<MatrixField, 3>& chi,
                        const EffectiveTensors& eff, int k, double tol, double* residual) {
  return poisson_entrywise(theta_rhs(grid, chi, eff, k), tol, "theta solve", residual,
                           noise_floor(eff_scale(eff)));
}

EField solve_flux_corrector(const BField& b, double tol) {
  const int N = b[0][0].N;
  double scale = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 3; ++k) scale = std::max(scale, b[i][k].sup());
  std::array<std::array<MatrixField, 3>, 2> f;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 3; ++k)
      f[i][k] = poisson_entrywise(b[i][k], tol, "flux corrector", nullptr, noise_floor(scale));
  EField E;
  for (int k = 0; k < 3; ++k) {
    std::array<std::array<MatrixField, 2>, 2> df;  // df[i][j] = D_j f_ik
    for (int i = 0; i < 2; ++i) {
      auto g = centered_gradient(f[i][k]);
      df[i][0] = std::move(g[0]);
      df[i][1] = std::move(g[1]);
    }
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) {
        MatrixField e(N, b[i][k].rows, b[i][k].cols);
        for (std::size_t n = 0; n < e.v.size(); ++n) e.v[n] = df[i][j].v[n] - df[j][i].v[n];
        E[j][i][k] = std::move(e);
      }
  }
  return E;
}

MatrixField flux_divergence(const EField& E, int i, int k) {
  const auto d0 = centered_gradient(E[0][i][k]);
  const auto d1 = centered_gradient(E[1][i][k]);
  MatrixField out = d0[0];
  for (std::size_t n = 0; n < out.v.size(); ++n) out.v[n] += d1[1].v[n];
  return out;
}

double antisymmetry_defect(const EField& E) {
  double d = 0.0;
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 3; ++k)
        for (std::size_t n = 0; n < E[j][i][k].v.size(); ++n)
          d = std::max(d, std::abs(E[j][i][k].v[n] + E[i][j][k].v[n]));
  return d;
}

CorrectorBundle solve_cell_problems(const GridCoefficients& grid, double tol, EffectiveTensors* eff_out,
                                    int threads) {
  CorrectorBundle out;
  out.N = grid.N();
  out.m = grid.m();
  std::array<double, 3> res{};
  parallel_for(3, threads, [&](int k) { out.chi[k] = solve_chi(grid, k, tol, &res[k]); });
  for (int k = 0; k < 3; ++k) out.residuals.emplace_back(fmt::format("chi{}", k), res[k]);
  const EffectiveTensors eff = assemble_homogenized(grid, out.chi);
  out.b = compute_b(grid, out.chi, eff);
  std::array<double, 3> tres{};
  parallel_for(3, threads, [&](int k) { out.theta[k] = solve_theta(grid, out.chi, eff, k, tol, &tres[k]); });
  for (int k = 0; k < 3; ++k) out.residuals.emplace_back(fmt::format("theta{}", k), tres[k]);
  out.E = solve_flux_corrector(out.b, tol);
  if (eff_out) *eff_out = eff;
  return out;
}

std::vector<std::pair<std::string, double>> cell_residuals(const GridCoefficients& grid, const CorrectorBundle& cb,
                                                          const EffectiveTensors& eff) {
  if (cb.N != grid.N() || cb.m != grid.m()) throw Error("corrector bundle does not match the grid");
  const int N = grid.N(), m = grid.m();
  const TorusSystem sys = torus_system(grid);
  std::vector<std::pair<std::string, double>> out;
  for (int k = 0; k < 3; ++k) {
    double worst = 0.0;
    for (int beta = 0; beta < m; ++beta) {
      const Eigen::VectorXd rhs = chi_rhs(grid, k, beta);
      Eigen::VectorXd x(rhs.size());
      for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i)
          for (int a = 0; a < m; ++a) x[(static_cast<Eigen::Index>(j) * N + i) * m + a] = cb.chi[k](i, j, a, beta);
      const double r = (sys.L * x - rhs).norm();
      const double scale = rhs.norm();
      worst = std::max(worst, scale > 0.0 ? r / scale : r);
    }
    out.emplace_back(fmt::format("chi{}", k), worst);
  }
  const std::size_t nn = static_cast<std::size_t>(N) * N;
  std::vector<double> u(nn), lap(nn);
  for (int k = 0; k < 3; ++k) {
    const MatrixField rhs = theta_rhs(grid, cb.chi, eff, k);
    double worst = 0.0;
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) {
        double sup = 0.0;
        for (std::size_t n = 0; n < nn; ++n) {
          u[n] = cb.theta[k](static_cast<int>(n % N), static_cast<int>(n / N), r, c);
          sup = std::max(sup, std::abs(rhs(static_cast<int>(n % N), static_cast<int>(n / N), r, c)));
        }
        if (sup <= noise_floor(eff_scale(eff))) continue;
        periodic_laplacian(N, u, lap);
        const double mean = rhs.mean(r, c);
        double err = 0.0;
        for (std::size_t n = 0; n < nn; ++n)
          err = std::max(err, std::abs(lap[n] - (rhs(static_cast<int>(n % N), static_cast<int>(n / N), r, c) - mean)));
        worst = std::max(worst, err / sup);
      }
    out.emplace_back(fmt::format("theta{}", k), worst);
  }
  return out;
}

}  // namespace homog2d
