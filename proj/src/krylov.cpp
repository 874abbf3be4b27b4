#include "homog2d/krylov.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

#include "homog2d/error.hpp"

namespace homog2d {

namespace {

void maybe_project(const Projection& p, Eigen::VectorXd& v) {
  if (p) p(v);
}

struct Monitor {
  const KrylovOptions& opt;
  const char* name;
  std::vector<double> history;
  double best = std::numeric_limits<double>::infinity();
  int best_at = 0;

  // Returns true when converged; throws on failure.
  bool step(int it, double rel) {
    history.push_back(rel);
    if (!std::isfinite(rel))
      throw SolverError(fmt::format("{}: residual became non-finite at iteration {}", name, it), history);
    if (rel <= opt.tol) return true;
    if (rel < best * 0.999) {
      best = rel;
      best_at = it;
    }
    if (it - best_at > opt.stagnation_window)
      throw SolverError(fmt::format("{}: stagnated at relative residual {:.3e} after {} iterations (operator may be "
                                    "singular or not elliptic)",
                                    name, best, it),
                        history);
    if (it >= opt.max_iter)
      throw SolverError(fmt::format("{}: iteration cap {} reached at relative residual {:.3e}", name, opt.max_iter, rel),
                        history);
    return false;
  }
};

}  // namespace

KrylovResult pcg(const LinearMap& A, const LinearMap& M, const Eigen::VectorXd& b_in, const KrylovOptions& opt,
                 const Projection& project) {
  Eigen::VectorXd b = b_in;
  maybe_project(project, b);
  KrylovResult res;
  res.x = Eigen::VectorXd::Zero(b.size());
  const double bn = b.norm();
  if (bn == 0.0) return res;
  Monitor mon{opt, "CG", {}};
  Eigen::VectorXd r = b, z(b.size()), p(b.size()), q(b.size());
  M(r, z);
  maybe_project(project, z);
  p = z;
  double rz = r.dot(z);
  for (int it = 1;; ++it) {
    A(p, q);
    maybe_project(project, q);
    const double pq = p.dot(q);
    if (!(pq > 0.0))
      throw SolverError(fmt::format("CG: non-positive curvature {:.3e} at iteration {} (operator not positive definite)",
                                    pq, it),
                        mon.history);
    const double alpha = rz / pq;
    res.x += alpha * p;
    r -= alpha * q;
    const double rel = r.norm() / bn;
    res.iterations = it;
    res.residual = rel;
    if (mon.step(it, rel)) break;
    M(r, z);
    maybe_project(project, z);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  // true residual
  A(res.x, q);
  Eigen::VectorXd tr = b - q;
  maybe_project(project, tr);
  res.residual = tr.norm() / bn;
  res.history = std::move(mon.history);
  return res;
}

KrylovResult bicgstab(const LinearMap& A, const LinearMap& M, const Eigen::VectorXd& b_in, const KrylovOptions& opt,
                      const Projection& project) {
  Eigen::VectorXd b = b_in;
  maybe_project(project, b);
  KrylovResult res;
  const Eigen::Index n = b.size();
  res.x = Eigen::VectorXd::Zero(n);
  const double bn = b.norm();
  if (bn == 0.0) return res;
  Monitor mon{opt, "BiCGStab", {}};
  Eigen::VectorXd r = b, r0 = b, p = Eigen::VectorXd::Zero(n), v = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y(n), s(n), z(n), t(n);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  int it = 0;
  while (true) {
    ++it;
    const double rho_new = r0.dot(r);
    if (std::abs(rho_new) < 1e-300 || std::abs(omega) < 1e-300) {
      // breakdown: restart from the current iterate
      A(res.x, t);
      r = b - t;
      maybe_project(project, r);
      r0 = r;
      p.setZero();
      v.setZero();
      rho = alpha = omega = 1.0;
      if (mon.step(it, r.norm() / bn)) break;
      continue;
    }
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    p = r + beta * (p - omega * v);
    M(p, y);
    maybe_project(project, y);
    A(y, v);
    maybe_project(project, v);
    const double r0v = r0.dot(v);
    if (std::abs(r0v) < 1e-300) {
      omega = 0.0;
      continue;
    }
    alpha = rho / r0v;
    s = r - alpha * v;
    const double sn = s.norm() / bn;
    if (sn <= opt.tol) {
      res.x += alpha * y;
      res.iterations = it;
      mon.step(it, sn);
      break;
    }
    M(s, z);
    maybe_project(project, z);
    A(z, t);
    maybe_project(project, t);
    const double tt = t.squaredNorm();
    omega = tt > 0.0 ? t.dot(s) / tt : 0.0;
    res.x += alpha * y + omega * z;
    r = s - omega * t;
    res.iterations = it;
    if (mon.step(it, r.norm() / bn)) break;
  }
  A(res.x, t);
  Eigen::VectorXd tr = b - t;
  maybe_project(project, tr);
  res.residual = tr.norm() / bn;
  res.history = std::move(mon.history);
  if (res.residual > 10.0 * opt.tol) {
    // recurrence drifted from the true residual; polish with a restart
    KrylovOptions o2 = opt;
    KrylovResult corr = bicgstab(A, M, tr, o2, project);
    res.x += corr.x;
    A(res.x, t);
    tr = b - t;
    maybe_project(project, tr);
    res.residual = tr.norm() / bn;
    res.iterations += corr.iterations;
    res.history.insert(res.history.end(), corr.history.begin(), corr.history.end());
  }
  return res;
}

}  // namespace homog2d
