#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "homog2d/cell.hpp"
#include "homog2d/effective.hpp"
#include "homog2d/error.hpp"
#include "homog2d/krylov.hpp"
#include "homog2d/solver.hpp"

using namespace homog2d;

namespace {

constexpr double kPi = std::numbers::pi;

Field zero(const DomainMesh& mesh, int m) { return Field(mesh, m); }

Field solve(const DiscreteOperator& op, const Field& F, const Field& g, double tol = 1e-12) {
  return solve_dirichlet(op, EdgeFlux{}, F, g, tol);
}

EffectiveTensors effective_of(const std::string& name, int N) {
  EffectiveTensors eff;
  solve_cell_problems(sample_grid(preset(name), N), 1e-10, &eff);
  return eff;
}

}  // namespace

TEST(Solver, IdentityOperatorIsFivePointLaplacianPlusShift) {
  const DomainMesh mesh{15};
  AssembleOptions opt;
  opt.lambda = 1.0;
  const auto op = assemble_Leps(preset("identity"), 0.25, mesh, opt);
  const int M = mesh.M;
  const double ih2 = 1.0 / (mesh.h() * mesh.h());
  Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(M * M, M * M);
  for (int j = 0; j < M; ++j)
    for (int i = 0; i < M; ++i) {
      const int r = j * M + i;
      ref(r, r) = 4.0 * ih2 + 1.0;
      if (i > 0) ref(r, r - 1) = -ih2;
      if (i + 1 < M) ref(r, r + 1) = -ih2;
      if (j > 0) ref(r, r - M) = -ih2;
      if (j + 1 < M) ref(r, r + M) = -ih2;
    }
  const Eigen::MatrixXd A(op.A);
  EXPECT_LE((A - ref).cwiseAbs().maxCoeff(), 1e-9 * ih2);
  EXPECT_LE((A - A.transpose()).cwiseAbs().maxCoeff(), 1e-12 * ih2);
}

TEST(Solver, HomogenizedLaminateIsAnisotropicLaplacian) {
  const auto eff = effective_of("laminate", 64);
  const DomainMesh mesh{7};
  const auto op = assemble_L0(eff, mesh);
  const double ih2 = 1.0 / (mesh.h() * mesh.h());
  const Eigen::MatrixXd A(op.A);
  const int r = 3 * 7 + 3;
  EXPECT_NEAR(A(r, r), 2.0 * (eff.a(0, 0, 0, 0) + eff.a(1, 1, 0, 0)) * ih2, 1e-9 * ih2);
  EXPECT_NEAR(A(r, r - 1), -eff.a(0, 0, 0, 0) * ih2, 1e-9 * ih2);
  EXPECT_NEAR(A(r, r - 7), -eff.a(1, 1, 0, 0) * ih2, 1e-9 * ih2);
}

TEST(Solver, ConstantSetGivesSameOperatorAtEveryScale) {
  auto s = preset("identity");
  s.a(0, 1, 0, 0) = 0.2;
  s.a(1, 0, 0, 0) = 0.2;
  s.c[0] = 0.5;
  s.kappa = 1.0;
  s.mu = 0.5;
  const DomainMesh mesh{31};
  const Eigen::MatrixXd a(assemble_Leps(s, 0.25, mesh).A);
  const Eigen::MatrixXd b(assemble_Leps(s, 0.125, mesh).A);
  EffectiveTensors eff;
  solve_cell_problems(sample_grid(s, 8), 1e-10, &eff);
  const Eigen::MatrixXd c(assemble_L0(eff, mesh).A);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12 * a.cwiseAbs().maxCoeff());
  EXPECT_LE((a - c).cwiseAbs().maxCoeff(), 1e-12 * a.cwiseAbs().maxCoeff());
}

TEST(Solver, ManufacturedSolutionSecondOrder) {
  std::vector<double> h, err;
  for (int n : {32, 64, 128, 256}) {
    const DomainMesh mesh{n - 1};
    AssembleOptions opt;
    opt.lambda = 1.0;
    const auto op = assemble_Leps(preset("identity"), 1.0 / n, mesh, opt);
    const auto exact = Field::from_function(mesh, 1, [](double x, double y, int) {
      return std::sin(kPi * x) * std::sin(kPi * y);
    });
    const auto F = Field::from_function(mesh, 1, [](double x, double y, int) {
      return (2.0 * kPi * kPi + 1.0) * std::sin(kPi * x) * std::sin(kPi * y);
    });
    const auto u = solve(op, F, zero(mesh, 1));
    h.push_back(mesh.h());
    err.push_back(norm(u - exact, NormKind::L2));
  }
  for (std::size_t k = 0; k + 1 < h.size(); ++k)
    EXPECT_NEAR(std::log(err[k] / err[k + 1]) / std::log(h[k] / h[k + 1]), 2.0, 0.2);
}

TEST(Solver, ConstantStateReproduced) {
  // F = lambda J, g = J => u = J for any divergence-form A with no lower order
  const DomainMesh mesh{31};
  AssembleOptions opt;
  opt.lambda = 1.5;
  const auto op = assemble_Leps(preset("laminate"), 0.25, mesh, opt);
  const auto J = Field::from_function(mesh, 1, [](double, double, int) { return 1.0; });
  const auto u = solve(op, 1.5 * J, J);
  EXPECT_LE(norm(u - J, NormKind::Linf), 1e-9);
}

TEST(Solver, ZeroDataZeroSolution) {
  const DomainMesh mesh{31};
  const auto op = assemble_Leps(preset("full-lower-order"), 0.25, mesh);
  const auto u = solve(op, zero(mesh, 2), zero(mesh, 2));
  EXPECT_EQ(norm(u, NormKind::Linf), 0.0);
}

TEST(Solver, CoercivityMatchesDiscreteEigenvalue) {
  const DomainMesh mesh{63};
  AssembleOptions opt;
  opt.lambda = 0.0;
  const auto op = assemble_Leps(preset("identity"), 0.25, mesh, opt);
  // smallest Dirichlet eigenvalue of the 5-point Laplacian
  const double h = mesh.h();
  const double lam1 = 8.0 * std::pow(std::sin(kPi * h / 2.0), 2) / (h * h);
  const double c0 = coercivity_probe(op, 32, 1);
  EXPECT_GE(c0, 0.5);
  EXPECT_NEAR(c0, lam1 / (1.0 + lam1), 0.03);
}

TEST(Solver, LargeShiftGivesUnitCoercivity) {
  const DomainMesh mesh{31};
  AssembleOptions opt;
  opt.lambda = 1e6;
  EXPECT_GE(coercivity_probe(assemble_Leps(preset("identity"), 0.25, mesh, opt), 32, 1), 1.0 - 1e-6);
}

TEST(Solver, FullLowerOrderCoerciveWithShift) {
  const DomainMesh mesh{63};
  AssembleOptions opt;
  opt.lambda = 20.0;
  EXPECT_GT(assemble_Leps(preset("full-lower-order"), 0.25, mesh, opt).coercivity, 0.0);
}

TEST(Solver, CoercivityMonotoneInLambda) {
  const DomainMesh mesh{31};
  const auto probes = coercivity_probes(assemble_Leps(preset("full-lower-order"), 0.25, mesh), 32, 3);
  double last = -1e300;
  for (double lam : {0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
    const double q = probes.min_quotient(lam);
    EXPECT_GE(q, last - 1e-12);
    last = q;
  }
}

TEST(Solver, SelectLambdaFailsWhenNothingCoercive) {
  auto s = preset("identity");
  s.c[0] = -1000.0;
  s.kappa = 1000.0;
  EXPECT_THROW(select_lambda(s, 0.25, DomainMesh{31}, 32, 1), Error);
  EXPECT_EQ(select_lambda(preset("identity"), 0.25, DomainMesh{31}, 32, 1), 0.0);
}

TEST(Solver, NonCommensurateScaleRejected) {
  EXPECT_THROW(assemble_Leps(preset("laminate"), 1.0 / 3.0, DomainMesh{63}), Error);
  EXPECT_THROW(DomainMesh::for_period(0.3, 16), Error);
  EXPECT_EQ(DomainMesh::for_period(0.125, 16).M, 127);
}

TEST(Solver, NegativeCertificateRefusesToSolve) {
  auto s = preset("identity");
  s.c[0] = -1000.0;
  s.kappa = 1000.0;
  const DomainMesh mesh{15};
  const auto op = assemble_Leps(s, 0.25, mesh);
  EXPECT_THROW(solve(op, zero(mesh, 1), zero(mesh, 1)), Error);
}

TEST(Solver, NormsOfSimpleFields) {
  const DomainMesh mesh{127};
  const auto one = Field::from_function(mesh, 1, [](double, double, int) { return 1.0; });
  EXPECT_NEAR(norm(one, NormKind::L2), 1.0, 1e-12);
  EXPECT_NEAR(norm(one, NormKind::H1Semi), 0.0, 1e-12);
  const auto s = Field::from_function(mesh, 1, [](double x, double y, int) {
    return std::sin(kPi * x) * std::sin(kPi * y);
  });
  EXPECT_NEAR(norm(s, NormKind::L2), 0.5, 1e-4);
  // |grad|^2 integrates to pi^2 / 2
  EXPECT_NEAR(norm(s, NormKind::H1Semi), kPi / std::sqrt(2.0), 1e-2);
  EXPECT_EQ(norm(-1.0 * s, NormKind::Linf), norm(s, NormKind::Linf));
  EXPECT_NEAR(norm(s, NormKind::L1), 4.0 / (kPi * kPi), 1e-4);
}

TEST(Solver, HoelderSeminormBasics) {
  const DomainMesh mesh{63};
  const auto c = Field::from_function(mesh, 1, [](double, double, int) { return 2.0; });
  EXPECT_EQ(holder_seminorm(c, 0.5, 512, 7), 0.0);
  const auto x = Field::from_function(mesh, 1, [](double x, double, int) { return x; });
  const double hx = holder_seminorm(x, 0.5, 512, 7);
  // |x1 - y1| / |x - y|^(1/2) <= |x1 - y1|^(1/2) <= 1
  EXPECT_LE(hx, 1.0 + 1e-12);
  EXPECT_GE(hx, std::sqrt(mesh.h()));
  auto shifted = x;
  shifted.interior.array() += 3.0;
  shifted.boundary.array() += 3.0;
  EXPECT_NEAR(holder_seminorm(shifted, 0.5, 512, 7), hx, 1e-12);
}

TEST(Krylov, IterationCapRaisesWithHistory) {
  const int n = 400;
  Eigen::SparseMatrix<double> A(n, n);
  for (int i = 0; i < n; ++i) {
    A.insert(i, i) = 2.0;
    if (i > 0) A.insert(i, i - 1) = -1.0;
    if (i + 1 < n) A.insert(i, i + 1) = -1.0;
  }
  const LinearMap op = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = A * x; };
  const LinearMap id = [](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = x; };
  KrylovOptions opt;
  opt.max_iter = 3;
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(n);
  try {
    pcg(op, id, b, opt);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.history().size(), 3u);
  }
  opt.max_iter = 10000;
  const auto r = pcg(op, id, b, opt);
  EXPECT_LE((A * r.x - b).norm() / b.norm(), 1e-10);
  const auto q = bicgstab(op, id, b, opt);
  EXPECT_LE((A * q.x - b).norm() / b.norm(), 1e-10);
}
