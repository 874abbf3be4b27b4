#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace homog2d {

using LinearMap = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;
using Projection = std::function<void(Eigen::VectorXd&)>;

struct KrylovOptions {
  double tol = 1e-10;  // relative residual ||b - Ax|| / ||b||
  int max_iter = 100000;
  /// Iterations without a new best residual before giving up.
  int stagnation_window = 5000;
};

struct KrylovResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> history;
};

/// Preconditioned conjugate gradients from x0 = 0. `project` (optional)
/// restricts iterates to a subspace, e.g. mean-zero fields on the torus.
KrylovResult pcg(const LinearMap& A, const LinearMap& M, const Eigen::VectorXd& b, const KrylovOptions& opt,
                 const Projection& project = {});

/// Right-preconditioned BiCGStab from x0 = 0.
KrylovResult bicgstab(const LinearMap& A, const LinearMap& M, const Eigen::VectorXd& b, const KrylovOptions& opt,
                      const Projection& project = {});

}  // namespace homog2d
