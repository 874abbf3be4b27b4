#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "homog2d/cell.hpp"
#include "homog2d/effective.hpp"
#include "homog2d/solver.hpp"

namespace homog2d {

struct RateFit {
  bool exact = false;  // some error was <= 0: no log fit
  double slope = 0.0;
  double residual = 0.0;  // max |fit - data| in log space
};

/// Ordinary least squares of ln(err) against ln(eps). Needs >= 3 points.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

/// u0 + eps sum_k chi_k(x/eps) d_k u0 with d_0 u0 := u0 (bilinear torus
/// interpolation of chi, centred differences of u0).
Field two_scale_expansion(const Field& u0, const CorrectorBundle& chi, double eps);

/// Dirichlet correctors of -div(A(x/eps) grad): column gamma of the result
/// has trace e_gamma and right-hand side div(V e_gamma) for k = 0, trace
/// x_k e_gamma and zero right-hand side for k = 1, 2.
std::vector<Field> dirichlet_corrector(const CoefficientSet& set, double eps, const DomainMesh& mesh, int k,
                                       double tol = 1e-10);

using NodalFunction = std::function<double(double, double, int)>;

struct RateExperiment {
  CoefficientSet set;
  std::vector<double> eps;  // descending, dyadic
  int P = 16;               // nodes per period: M + 1 = P / eps
  NodalFunction F;          // empty: F = 1
  NodalFunction g;          // empty: g = 0
  std::optional<double> lambda;
  double tol = 1e-10;
  int threads = 1;
  Region interior{0.25, 0.75};
};

struct RateSeries {
  std::string norm_id;
  std::vector<double> eps;
  std::vector<double> error;
  RateFit fit;
};

struct RateReport {
  std::string preset;
  std::vector<RateSeries> series;
  std::vector<double> residuals;  // worst solver residual per eps
  double runtime = 0.0;

  const RateSeries& get(const std::string& id) const;
};

/// Errors u_eps - u0 (L2, Linf, H1 and interior L2), the corrected H1 error
/// with Dirichlet correctors (global and interior) and, if `chi` is given,
/// the interior H1 error of the two-scale expansion. Errors all below 1e-8
/// are reported as exact.
RateReport run_rate_experiment(const RateExperiment& exp, const EffectiveTensors& eff,
                               const CorrectorBundle* chi = nullptr);

/// eps / |x - y|: the right-hand side of the Green convergence estimate with C = 1 in 2D.
double green_convergence_bound(double eps, double dist);

/// |G_eps(x, y) - G0(x, y)| (Frobenius over the matrix indices) per pair and
/// eps; x is interpolated bilinearly and y snapped to the nearest node.
/// Series "pair<k>" per pair, "pair<k>_cell" (max over the nodes of the
/// period cell centred at x) and "max" over the cell series.
RateReport green_convergence(const CoefficientSet& set, const EffectiveTensors& eff,
                             const std::vector<std::pair<std::array<double, 2>, std::array<double, 2>>>& pairs,
                             const std::vector<double>& eps, int P, double rho_cells = 2.0, double tol = 1e-10,
                             int threads = 1);

/// Periodic check of the two-scale identity
///   L_eps(u0 + eps chi d u0) = L0 u0 + d_i K_i - eps d_i(I_i + J_i) + eps (M + N)
/// with d_i K_i = -eps d_i(E_jik d_j d_k u0), on the unit torus with a
/// manufactured trigonometric u0 and cell grids of N nodes per period.
struct IdentityCheck {
  std::vector<int> N;
  std::vector<double> residual;  // ||lhs - rhs||_2 / ||lhs||_2
  double order = 0.0;
};
IdentityCheck two_scale_identity_check(const CoefficientSet& set, double eps, const std::vector<int>& N,
                                       double tol = 1e-10);

}  // namespace homog2d
