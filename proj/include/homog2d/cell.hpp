#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "homog2d/coefficients.hpp"

namespace homog2d {

struct EffectiveTensors;

/// Matrix-valued field on the N x N torus grid; node (i, j) is the cell
/// centre ((i + 1/2)/N, (j + 1/2)/N).
struct MatrixField {
  int N = 0;
  int rows = 1;
  int cols = 1;
  std::vector<double> v;

  MatrixField() = default;
  MatrixField(int n, int r, int c) : N(n), rows(r), cols(c), v(static_cast<std::size_t>(n) * n * r * c, 0.0) {}

  double& operator()(int i, int j, int r, int c) { return v[index(i, j, r, c)]; }
  double operator()(int i, int j, int r, int c) const { return v[index(i, j, r, c)]; }
  std::size_t index(int i, int j, int r, int c) const {
    return ((static_cast<std::size_t>(j) * N + i) * rows + r) * cols + c;
  }

  double sup() const;
  double mean(int r, int c) const;
  /// Periodic bilinear interpolation at torus point y (any real y).
  double interpolate(double y1, double y2, int r, int c) const;

  bool operator==(const MatrixField&) const = default;
};

using BField = std::array<std::array<MatrixField, 3>, 2>;                  // b[i][k]
using EField = std::array<std::array<std::array<MatrixField, 3>, 2>, 2>;  // E[j][i][k]

/// Cell-problem solutions on one torus grid. Direction indices are 0-based
/// (0 = y1, 1 = y2); k = 0 is the drift corrector.
struct CorrectorBundle {
  int N = 0;
  int m = 1;
  std::array<MatrixField, 3> chi;
  std::array<MatrixField, 3> theta;
  BField b;
  EField E;
  std::vector<std::pair<std::string, double>> residuals;
};

/// chi_k (k = 1, 2 solve -D.(A D(chi_k + P_k)) = 0; k = 0 solves
/// -D.(A D chi_0) = D.V). Column beta holds the solution for P_k^beta.
/// Mean zero per entry.
MatrixField solve_chi(const GridCoefficients& grid, int k, double tol, double* residual = nullptr, int threads = 1);

/// Centred differences d/dy1, d/dy2 at the cell centres.
std::array<MatrixField, 2> centered_gradient(const MatrixField& f);

/// b_ik = a^_ik - a_ik - a_ij d_j chi_k (k >= 1), b_i0 = V^_i - V_i - a_ij d_j chi_0.
BField compute_b(const GridCoefficients& grid, const std::array<MatrixField, 3>& chi, const EffectiveTensors& eff);

/// Right-hand side of the Theta_k Poisson problem.
MatrixField theta_rhs(const GridCoefficients& grid, const std::array<MatrixField, 3>& chi,
                      const EffectiveTensors& eff, int k);

/// Mean-zero periodic solution of lap_h Theta_k = theta_rhs.
MatrixField solve_theta(const GridCoefficients& grid, const std::array<MatrixField, 3>& chi,
                        const EffectiveTensors& eff, int k, double tol, double* residual = nullptr);

/// E_jik = D_j f_ik - D_i f_jk with lap_h f_ik = b_ik.
EField solve_flux_corrector(const BField& b, double tol);

/// Centred-difference divergence D_j E_jik.
MatrixField flux_divergence(const EField& E, int i, int k);

/// Full pipeline: chi, effective tensors, b, Theta, E.
CorrectorBundle solve_cell_problems(const GridCoefficients& grid, double tol, EffectiveTensors* eff_out = nullptr,
                                    int threads = 1);

/// Residuals of a given bundle recomputed from the grid: relative l2 residual
/// of each chi_k system and the relative sup residual of each Theta_k.
std::vector<std::pair<std::string, double>> cell_residuals(const GridCoefficients& grid, const CorrectorBundle& cb,
                                                          const EffectiveTensors& eff);

/// Max |E_jik + E_ijk| over all entries.
double antisymmetry_defect(const EField& E);

}  // namespace homog2d
