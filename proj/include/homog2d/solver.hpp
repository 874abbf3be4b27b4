#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "homog2d/coefficients.hpp"
#include "homog2d/effective.hpp"
#include "homog2d/fft.hpp"
#include "homog2d/stencil.hpp"

namespace homog2d {

/// Uniform mesh of the unit square: nodes (i h, j h), i, j = 0..M+1, with
/// h = 1/(M+1). Nodes with 1 <= i, j <= M are unknowns.
struct DomainMesh {
  int M = 0;

  double h() const { return 1.0 / (M + 1); }
  int side() const { return M + 2; }
  int boundary_count() const { return 4 * (M + 1); }
  double x(int i) const { return i * h(); }
  bool on_boundary(int i, int j) const { return i == 0 || j == 0 || i == M + 1 || j == M + 1; }
  /// Position of a boundary node in row-major boundary order, -1 for interior nodes.
  int boundary_index(int i, int j) const;

  /// Mesh with M + 1 = P / eps; throws if that is not an integer.
  static DomainMesh for_period(double eps, int P);
};

/// Nodal field: interior unknowns plus the boundary trace, m components each.
struct Field {
  DomainMesh mesh;
  int m = 1;
  Eigen::VectorXd interior;  // ((j-1) M + (i-1)) m + alpha
  Eigen::VectorXd boundary;  // boundary_index(i, j) m + alpha

  Field() = default;
  Field(DomainMesh mesh, int m);

  double value(int i, int j, int alpha) const;
  void set(int i, int j, int alpha, double v);

  /// Vector over all (M+2)^2 lattice nodes.
  Eigen::VectorXd full() const;
  static Field from_full(const DomainMesh& mesh, int m, const Eigen::VectorXd& v);
  static Field from_function(const DomainMesh& mesh, int m, const std::function<double(double, double, int)>& f);

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s);
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator*(double s, Field a) { return a *= s; }
};

/// Face data of a vector field f_i^alpha for div(f) right-hand sides. fx holds
/// the x-faces ((j (M+1) + i) m + alpha, face between (i, j) and (i+1, j)),
/// fy the y-faces ((j (M+2) + i) m + alpha, between (i, j) and (i, j+1)).
struct EdgeFlux {
  DomainMesh mesh;
  int m = 1;
  std::vector<double> fx, fy;

  bool empty() const { return fx.empty() && fy.empty(); }
  static EdgeFlux from_function(const DomainMesh& mesh, int m,
                                const std::function<double(int dir, double, double, int)>& f);
};

struct AssembleOptions {
  std::optional<double> lambda;  // overrides the set's lambda
  bool leading_only = false;     // -div(A grad) only, lambda = 0
  int probe_trials = 32;
  std::uint64_t probe_seed = 1;
};

/// Discrete Dirichlet operator on the interior unknowns.
struct DiscreteOperator {
  DomainMesh mesh;
  int m = 1;
  double eps = 0.0;  // 0 for the homogenised operator
  bool homogenized = false;
  double lambda = 0.0;
  std::uint32_t hash = 0;
  bool symmetric = false;
  NineStencil stencil;  // full box stencil, boundary columns included
  SparseMatrix A;       // interior block
  std::shared_ptr<BlockSpectralPreconditioner> pre;
  double coercivity = 0.0;  // certificate from coercivity_probe

  std::string tag() const;
};

/// L_eps = -div(A(x/eps) grad + V(x/eps)) + B(x/eps) grad + c(x/eps) + lambda.
DiscreteOperator assemble_Leps(const CoefficientSet& set, double eps, const DomainMesh& mesh,
                               const AssembleOptions& opt = {});

/// L0 with the effective tensors.
DiscreteOperator assemble_L0(const EffectiveTensors& eff, const DomainMesh& mesh, const AssembleOptions& opt = {});

struct SolveInfo {
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> history;
};

/// Solves L u = div(f) + F in the interior, u = g on the boundary. F's
/// boundary part is ignored; g is given as the boundary part of a Field.
Field solve_dirichlet(const DiscreteOperator& op, const EdgeFlux& f, const Field& F, const Field& g,
                      double tol = 1e-10, SolveInfo* info = nullptr);

/// Applies the full operator to a field (boundary values act as data) and
/// returns the interior result.
Eigen::VectorXd apply_operator(const DiscreteOperator& op, const Field& u);

/// Rayleigh quotients <Lu,u> / ||u||_{H1}^2 of seeded probes.
struct ProbeSet {
  std::vector<double> form;  // <L u, u>
  std::vector<double> l2;    // ||u||_{L2}^2
  std::vector<double> h1;    // ||u||_{H1}^2
  double lambda = 0.0;       // lambda of the probed operator

  /// min over probes with the operator's lambda replaced by `lam`.
  double min_quotient(double lam) const;
};

ProbeSet coercivity_probes(const DiscreteOperator& op, int trials, std::uint64_t seed);
double coercivity_probe(const DiscreteOperator& op, int trials, std::uint64_t seed);

/// Smallest lambda in {0, 1, 2, 4, ..., 64} whose probe value reaches 0.05.
double select_lambda(const CoefficientSet& set, double eps, const DomainMesh& mesh, int trials, std::uint64_t seed);

enum class NormKind { L1, L2, Lp, Linf, H1, H1Semi, W1p, W1pSemi };

/// Axis-aligned square subregion [lo, hi]^2 (default: the whole domain).
struct Region {
  double lo = 0.0;
  double hi = 1.0;
};

/// Discrete norms with dual-cell quadrature weights; gradients by centred
/// differences, one-sided on the boundary ring.
double norm(const Field& u, NormKind kind, double p = 2.0, Region region = {});

/// Nodal gradient (d/dx, d/dy) of component alpha.
std::array<Eigen::VectorXd, 2> nodal_gradient(const Field& u, int alpha);

/// max |u(x) - u(y)| / |x - y|^sigma over all adjacent pairs and `pairs`
/// seeded random pairs.
double holder_seminorm(const Field& u, double sigma, int pairs, std::uint64_t seed);

/// CSV lines x,y,component,value (1-based component).
std::string field_csv(const Field& u);

}  // namespace homog2d
