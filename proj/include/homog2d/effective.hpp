#pragma once

#include <array>
#include <string>
#include <vector>

#include "homog2d/cell.hpp"
#include "homog2d/coefficients.hpp"

namespace homog2d {

/// Constant coefficients of the homogenised operator
///   L0 = -div(A^ grad + V^) + B^ grad + c^ + lambda.
struct EffectiveTensors {
  int m = 1;
  std::vector<double> A_hat;  // TensorLayout::a
  std::vector<double> V_hat;  // TensorLayout::vec
  std::vector<double> B_hat;  // TensorLayout::vec
  std::vector<double> c_hat;  // TensorLayout::mat
  double lambda = 0.0;
  int quadrature_N = 0;

  double a(int i, int j, int al, int be) const { return A_hat[TensorLayout{m}.a(i, j, al, be)]; }
  double V(int i, int al, int be) const { return V_hat[TensorLayout{m}.vec(i, al, be)]; }
  double B(int i, int al, int be) const { return B_hat[TensorLayout{m}.vec(i, al, be)]; }
  double c(int al, int be) const { return c_hat[TensorLayout{m}.mat(al, be)]; }

  bool operator==(const EffectiveTensors&) const = default;
};

/// Midpoint-rule cell averages of the corrected fluxes.
EffectiveTensors assemble_homogenized(const GridCoefficients& grid, const std::array<MatrixField, 3>& chi);

/// Smallest eigenvalue of the symmetrised A^ acting on m x 2 matrices.
double check_effective_ellipticity(const EffectiveTensors& eff);

/// Constant coefficient set carrying the effective tensors (for L0 assembly
/// and the config round trip). mu is set to the certified value.
CoefficientSet to_coefficient_set(const EffectiveTensors& eff, const std::string& name = "homogenized");

/// Inverse of to_coefficient_set; throws if `set` is not constant.
EffectiveTensors from_coefficient_set(const CoefficientSet& set);

/// CSV with columns i,j,alpha,beta,value,tensor (1-based indices).
std::string effective_csv(const EffectiveTensors& eff);

}  // namespace homog2d
