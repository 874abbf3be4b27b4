#include "homog2d/effective.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include "homog2d/error.hpp"

namespace homog2d {

EffectiveTensors assemble_homogenized(const GridCoefficients& grid, const std::array<MatrixField, 3>& chi) {
  const int N = grid.N(), m = grid.m();
  for (const auto& c : chi)
    if (c.N != N || c.rows != m || c.cols != m) throw Error("corrector fields do not match the grid");
  const TensorLayout l{m};
  EffectiveTensors e;
  e.m = m;
  e.lambda = grid.lambda();
  e.quadrature_N = N;
  e.A_hat.assign(l.a_count(), 0.0);
  e.V_hat.assign(l.vec_count(), 0.0);
  e.B_hat.assign(l.vec_count(), 0.0);
  e.c_hat.assign(l.mat_count(), 0.0);
  std::array<std::array<MatrixField, 2>, 3> d;
  for (int k = 0; k < 3; ++k) {
    auto g = centered_gradient(chi[k]);
    d[k][0] = std::move(g[0]);
    d[k][1] = std::move(g[1]);
  }
  for (int y = 0; y < N; ++y)
    for (int x = 0; x < N; ++x) {
      const int s = 2 * x + 1, t = 2 * y + 1;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
              double v = grid.a(i, j, a, b, s, t);
              for (int k = 0; k < 2; ++k)
                for (int g = 0; g < m; ++g) v += grid.a(i, k, a, g, s, t) * d[j + 1][k](x, y, g, b);
              e.A_hat[l.a(i, j, a, b)] += v;
            }
            double vv = grid.V(i, a, b, s, t), bb = grid.B(i, a, b, s, t);
            for (int k = 0; k < 2; ++k)
              for (int g = 0; g < m; ++g) {
                vv += grid.a(i, k, a, g, s, t) * d[0][k](x, y, g, b);
                bb += grid.B(k, a, g, s, t) * d[i + 1][k](x, y, g, b);
              }
            e.V_hat[l.vec(i, a, b)] += vv;
            e.B_hat[l.vec(i, a, b)] += bb;
          }
          double cc = grid.c(a, b, s, t);
          for (int k = 0; k < 2; ++k)
            for (int g = 0; g < m; ++g) cc += grid.B(k, a, g, s, t) * d[0][k](x, y, g, b);
          e.c_hat[l.mat(a, b)] += cc;
        }
    }
  const double w = 1.0 / (static_cast<double>(N) * N);
  for (auto* v : {&e.A_hat, &e.V_hat, &e.B_hat, &e.c_hat})
    for (double& x : *v) x *= w;
  return e;
}

namespace {

Eigen::VectorXd effective_eigenvalues(const EffectiveTensors& eff) {
  const int m = eff.m;
  Eigen::MatrixXd S(2 * m, 2 * m);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) S(i * m + a, j * m + b) = 0.5 * (eff.a(i, j, a, b) + eff.a(j, i, b, a));
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly).eigenvalues();
}

}  // namespace

double check_effective_ellipticity(const EffectiveTensors& eff) {
  const Eigen::VectorXd ev = effective_eigenvalues(eff);
  if (!(ev(0) > 0.0))
    throw Error(fmt::format("effective tensor is not elliptic: smallest eigenvalue {:.6g}", ev(0)));
  return ev(0);
}

CoefficientSet to_coefficient_set(const EffectiveTensors& eff, const std::string& name) {
  CoefficientSet s = CoefficientSet::zeros(eff.m);
  s.name = name;
  s.lambda = eff.lambda;
  for (std::size_t k = 0; k < eff.A_hat.size(); ++k) s.A[k] = FourierEntry(eff.A_hat[k]);
  for (std::size_t k = 0; k < eff.V_hat.size(); ++k) s.V[k] = FourierEntry(eff.V_hat[k]);
  for (std::size_t k = 0; k < eff.B_hat.size(); ++k) s.B[k] = FourierEntry(eff.B_hat[k]);
  for (std::size_t k = 0; k < eff.c_hat.size(); ++k) s.c[k] = FourierEntry(eff.c_hat[k]);
  const Eigen::VectorXd ev = effective_eigenvalues(eff);
  s.mu = std::min(ev(0), 1.0 / ev(ev.size() - 1));
  double kappa = 0.0;
  for (const auto* v : {&eff.V_hat, &eff.B_hat, &eff.c_hat})
    for (double x : *v) kappa = std::max(kappa, std::abs(x));
  s.kappa = kappa;
  return s;
}

EffectiveTensors from_coefficient_set(const CoefficientSet& set) {
  validate_shape(set);
  if (!set.is_constant()) throw Error("effective tensors require a constant coefficient set");
  EffectiveTensors e;
  e.m = set.m;
  e.lambda = set.lambda;
  auto value = [](const FourierEntry& f) { return f(0.0, 0.0); };
  for (const auto& f : set.A) e.A_hat.push_back(value(f));
  for (const auto& f : set.V) e.V_hat.push_back(value(f));
  for (const auto& f : set.B) e.B_hat.push_back(value(f));
  for (const auto& f : set.c) e.c_hat.push_back(value(f));
  return e;
}

std::string effective_csv(const EffectiveTensors& eff) {
  const int m = eff.m;
  std::string out = "i,j,alpha,beta,value,tensor\n";
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          out += fmt::format("{},{},{},{},{:.17g},A\n", i + 1, j + 1, a + 1, b + 1, eff.a(i, j, a, b));
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) out += fmt::format("{},,{},{},{:.17g},V\n", i + 1, a + 1, b + 1, eff.V(i, a, b));
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) out += fmt::format("{},,{},{},{:.17g},B\n", i + 1, a + 1, b + 1, eff.B(i, a, b));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) out += fmt::format(",,{},{},{:.17g},c\n", a + 1, b + 1, eff.c(a, b));
  return out;
}

}  // namespace homog2d
