#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "homog2d/solver.hpp"

namespace homog2d {

/// Averaged Green matrix G_rho(., y): columns[gamma] solves
/// L u = e_gamma 1_{B(y, rho)} / |B(y, rho)|.
struct GreenColumn {
  DomainMesh mesh;
  int m = 1;
  int pole_i = 0;
  int pole_j = 0;
  double rho = 0.0;
  double eps = 0.0;  // 0 for the homogenised operator
  bool adjoint = false;
  std::vector<Field> columns;
  double residual = 0.0;

  double pole_x() const { return mesh.x(pole_i); }
  double pole_y() const { return mesh.x(pole_j); }
  /// max_{x, alpha, gamma} |G^{alpha gamma}(x, y)|
  double sup() const;
  /// G^{alpha gamma}(x, y) at a node.
  double at(int i, int j, int alpha, int gamma) const { return columns[gamma].value(i, j, alpha); }
};

/// Interior nodes of the closed ball B((i, j) h, rho).
std::vector<std::array<int, 2>> ball_nodes(const DomainMesh& mesh, int i, int j, double rho);

/// Averaged point source e_gamma 1_B / (count h^2) as a Field.
Field averaged_source(const DomainMesh& mesh, int m, int i, int j, double rho, int gamma);

/// Mean of component alpha over the interior nodes of B((i, j) h, rho).
double ball_average(const Field& u, int i, int j, double rho, int alpha);

/// rho <= 0 selects the default 2h.
GreenColumn green_column(const DiscreteOperator& op, int i, int j, double rho = 0.0, double tol = 1e-10);

/// Operator of the formal adjoint on the same mesh and with the same lambda
/// as `op` (eff == nullptr: L_eps* from `set`; otherwise L0*).
DiscreteOperator adjoint_operator(const CoefficientSet& set, const EffectiveTensors* eff, const DiscreteOperator& op);

GreenColumn adjoint_column(const CoefficientSet& set, const EffectiveTensors* eff, const DiscreteOperator& op, int i,
                           int j, double rho = 0.0, double tol = 1e-10);

/// Compares avg_x G^{ab}(., y) with avg_y G*^{ba}(., x) for every ordered
/// pair of distinct poles; direct[k] and adjoint[k] share pole k.
struct SymmetryReport {
  double max_defect = 0.0;
  double scale = 0.0;  // largest column sup
  int pairs = 0;
};
SymmetryReport adjoint_symmetry(const std::vector<GreenColumn>& direct, const std::vector<GreenColumn>& adjoint);

/// Ball averages of u at `points` synthesised from adjoint columns (one per
/// point) through h^2 sum G* F, against the direct values.
struct RepresentationReport {
  std::vector<double> synthesized;
  std::vector<double> direct;
  double rel_error = 0.0;
};
RepresentationReport representation_check(const std::vector<GreenColumn>& adjoint, const Field& F, const Field& u);

/// Mean oscillation norm with the boundary convention (mean replaced by 0
/// once r >= dist(x0, boundary)).
double bmo_norm(const Field& u, int centers, std::uint64_t seed);

struct PointwiseSigmas {
  double sigma = 0.5, sigma1 = 0.5, sigma2 = 0.5, sigma3 = 0.5, sigma4 = 0.5;
};

/// One row of the pointwise report.
struct BoundRow {
  std::string ineq_id;
  double x1, x2, y1, y2;
  double lhs, bound, ratio;
  bool near_corner = false;
};

struct PointwiseReport {
  std::vector<BoundRow> rows;
  int excluded_near = 0;    // pairs with |x - y| < 2h
  int flagged_corner = 0;   // rows within 4h of a corner
  /// max ratio per inequality id, ignoring corner-flagged rows.
  std::vector<std::pair<std::string, double>> maxima() const;
  double max_ratio(const std::string& id) const;
};

/// Evaluates the pointwise and Lipschitz bounds (C = 1) on pairs (x, y) with
/// y the column pole and x from the 16 x 16 probe lattice plus `random_x`
/// seeded nodes. The adjoint column (same pole) supplies the y-side
/// differences; `shifted` (optional, poles y +- h e_k in the order +x, -x,
/// +y, -y) supplies mixed derivatives.
PointwiseReport check_pointwise_bounds(const GreenColumn& col, const GreenColumn* adjoint,
                                       const std::array<GreenColumn, 4>* shifted, const PointwiseSigmas& sig,
                                       int random_x = 512, std::uint64_t seed = 42);

/// Least-squares slope of G(x, y) against ln(1/|x - y|) over nodes with
/// |x - y| in [rmin, rmax] (scalar columns).
struct LogFit {
  double slope = 0.0;
  double intercept = 0.0;
  int samples = 0;
};
LogFit log_fit(const GreenColumn& col, double rmin, double rmax);

}  // namespace homog2d
