#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "homog2d/cell.hpp"
#include "homog2d/effective.hpp"
#include "homog2d/error.hpp"
#include "homog2d/rates.hpp"

using namespace homog2d;

namespace {

constexpr double kPi = std::numbers::pi;

struct Cell {
  CorrectorBundle cb;
  EffectiveTensors eff;
};

Cell cell_of(const CoefficientSet& set, int N) {
  Cell c;
  c.cb = solve_cell_problems(sample_grid(set, N), 1e-10, &c.eff);
  return c;
}

Field sine(const DomainMesh& mesh) {
  return Field::from_function(mesh, 1, [](double x, double y, int) { return std::sin(kPi * x) * std::sin(kPi * y); });
}

double l2_of_difference(const std::vector<Field>& phi, int k, const DomainMesh& mesh) {
  const auto P = Field::from_function(mesh, 1, [k](double x, double y, int) { return k == 1 ? x : y; });
  return norm(phi[0] - P, NormKind::L2);
}

}  // namespace

TEST(FitRate, ExactPowerLaws) {
  std::vector<std::pair<double, double>> p1, p2;
  for (double e : {0.25, 0.125, 0.0625, 0.03125}) {
    p1.emplace_back(e, e);
    p2.emplace_back(e, e * e);
  }
  const auto f1 = fit_rate(p1);
  EXPECT_FALSE(f1.exact);
  EXPECT_NEAR(f1.slope, 1.0, 1e-12);
  EXPECT_NEAR(f1.residual, 0.0, 1e-12);
  EXPECT_NEAR(fit_rate(p2).slope, 2.0, 1e-12);
}

TEST(FitRate, NoisySyntheticData) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<std::pair<double, double>> p;
  for (double e : {0.25, 0.125, 0.0625, 0.03125, 0.015625}) p.emplace_back(e, 3.0 * std::pow(e, 1.1) * (1.0 + noise(rng)));
  const auto f = fit_rate(p);
  EXPECT_GE(f.slope, 1.0);
  EXPECT_LE(f.slope, 1.2);
  EXPECT_GT(f.residual, 0.0);
}

TEST(FitRate, EdgeCases) {
  EXPECT_TRUE(fit_rate({{0.25, 0.1}, {0.125, 0.0}, {0.0625, 0.01}}).exact);
  EXPECT_THROW(fit_rate({{0.25, 0.1}, {0.125, 0.05}}), Error);
}

TEST(TwoScale, ConstantCoefficientsLeaveU0) {
  const auto c = cell_of(preset("identity"), 16);
  const DomainMesh mesh{63};
  const auto u0 = sine(mesh);
  EXPECT_EQ(norm(two_scale_expansion(u0, c.cb, 0.25) - u0, NormKind::Linf), 0.0);
}

TEST(TwoScale, CorrectionIsLinearInEps) {
  const auto c = cell_of(preset("laminate"), 64);
  std::vector<double> n;
  for (double eps : {0.125, 0.0625}) {
    const auto mesh = DomainMesh::for_period(eps, 16);
    const auto u0 = sine(mesh);
    n.push_back(norm(two_scale_expansion(u0, c.cb, eps) - u0, NormKind::L2));
  }
  EXPECT_NEAR(n[0] / n[1], 2.0, 0.2);
}

TEST(TwoScale, LaminateCorrectionMatchesDirectEvaluation) {
  const auto c = cell_of(preset("laminate"), 64);
  const double eps = 0.125;
  const auto mesh = DomainMesh::for_period(eps, 16);
  const auto u0 = sine(mesh);
  const Field corr = two_scale_expansion(u0, c.cb, eps) - u0;
  // eps chi_1(x/eps) d1 u0 with the exact derivative; chi_0 = chi_2 = 0
  const auto direct = Field::from_function(mesh, 1, [&](double x, double y, int) {
    return eps * c.cb.chi[1].interpolate(x / eps, y / eps, 0, 0) * kPi * std::cos(kPi * x) * std::sin(kPi * y);
  });
  const double sup = norm(corr, NormKind::Linf);
  EXPECT_LE(norm(corr - direct, NormKind::Linf), 1e-2 * sup);
  EXPECT_LE(sup, 1.1 * eps * c.cb.chi[1].sup() * kPi);
}

TEST(DirichletCorrector, ConstantCoefficientsReproduceTrace) {
  const DomainMesh mesh{31};
  const auto set = preset("identity");
  for (int k = 1; k <= 2; ++k) {
    const auto phi = dirichlet_corrector(set, 0.25, mesh, k, 1e-12);
    ASSERT_EQ(phi.size(), 1u);
    EXPECT_LE(l2_of_difference(phi, k, mesh), 1e-10);
  }
  const auto phi0 = dirichlet_corrector(set, 0.25, mesh, 0, 1e-12);
  EXPECT_LE((phi0[0].interior.array() - 1.0).abs().maxCoeff(), 1e-10);
  EXPECT_EQ((phi0[0].boundary.array() - 1.0).abs().maxCoeff(), 0.0);
}

TEST(DirichletCorrector, BoundaryTraceImposedExactly) {
  const auto mesh = DomainMesh::for_period(0.125, 16);
  const auto phi = dirichlet_corrector(preset("full-lower-order"), 0.125, mesh, 1);
  ASSERT_EQ(phi.size(), 2u);
  for (int g = 0; g < 2; ++g)
    for (int j = 0; j <= mesh.M + 1; ++j)
      for (int i = 0; i <= mesh.M + 1; ++i) {
        if (!mesh.on_boundary(i, j)) continue;
        for (int a = 0; a < 2; ++a) EXPECT_EQ(phi[g].value(i, j, a), a == g ? mesh.x(i) : 0.0);
      }
}

TEST(DirichletCorrector, LaminateDeviationIsFirstOrder) {
  std::vector<std::pair<double, double>> pts;
  for (double eps : {0.25, 0.125, 0.0625}) {
    const auto mesh = DomainMesh::for_period(eps, 16);
    pts.emplace_back(eps, l2_of_difference(dirichlet_corrector(preset("laminate"), eps, mesh, 1), 1, mesh));
  }
  EXPECT_GE(fit_rate(pts).slope, 0.9);
}

TEST(RateExperiment, ConstantCoefficientsAreExact) {
  const auto set = preset("identity");
  const auto c = cell_of(set, 16);
  RateExperiment exp;
  exp.set = set;
  exp.eps = {0.25, 0.125, 0.0625};
  exp.P = 8;
  const auto rep = run_rate_experiment(exp, c.eff, &c.cb);
  for (const auto& s : rep.series) {
    EXPECT_TRUE(s.fit.exact) << s.norm_id;
    for (double e : s.error) EXPECT_LE(e, 1e-8) << s.norm_id;
  }
}

TEST(RateExperiment, RefiningThePeriodMeshChangesLittle) {
  const auto set = preset("laminate");
  const auto c = cell_of(set, 128);
  std::vector<double> finest;
  for (int P : {8, 16, 32}) {
    RateExperiment exp;
    exp.set = set;
    exp.eps = {0.25, 0.125, 0.0625};
    exp.P = P;
    finest.push_back(run_rate_experiment(exp, c.eff).get("L2").error.back());
  }
  EXPECT_LT(std::abs(finest[0] - finest[1]) / finest[1], 0.2);
  EXPECT_LT(std::abs(finest[1] - finest[2]) / finest[2], 0.2);
}

TEST(RateExperiment, SlopesHoldOnTheFinestPoints) {
  const auto set = preset("laminate");
  const auto c = cell_of(set, 64);
  RateExperiment exp;
  exp.set = set;
  exp.eps = {0.25, 0.125, 0.0625, 0.03125};
  exp.P = 8;
  const auto rep = run_rate_experiment(exp, c.eff, &c.cb);
  for (const auto* id : {"L2", "H1_corrected"}) {
    const auto& s = rep.get(id);
    std::vector<std::pair<double, double>> tail;
    for (std::size_t k = 1; k < s.eps.size(); ++k) tail.emplace_back(s.eps[k], s.error[k]);
    EXPECT_GE(fit_rate(tail).slope, s.fit.slope - s.fit.residual) << id;
  }
}

TEST(GreenConvergence, ConstantCoefficientsAgree) {
  const auto set = preset("identity");
  const auto c = cell_of(set, 16);
  const auto rep = green_convergence(set, c.eff, {{{0.3, 0.5}, {0.7, 0.5}}}, {0.25, 0.125, 0.0625}, 8);
  for (const auto& s : rep.series)
    for (double e : s.error) EXPECT_LE(e, 1e-8) << s.norm_id;
}

TEST(GreenConvergence, SeparationEnforced) {
  const auto set = preset("laminate");
  const auto c = cell_of(set, 16);
  EXPECT_THROW(green_convergence(set, c.eff, {{{0.3, 0.5}, {0.45, 0.5}}}, {0.25, 0.125, 0.0625}, 8), Error);
  EXPECT_THROW(green_convergence(set, c.eff, {{{0.1, 0.5}, {0.7, 0.5}}}, {0.25, 0.125, 0.0625}, 8), Error);
}

TEST(GreenConvergence, BoundScalesInverselyWithDistance) {
  EXPECT_DOUBLE_EQ(green_convergence_bound(0.0625, 0.2), 2.0 * green_convergence_bound(0.0625, 0.4));
  EXPECT_DOUBLE_EQ(green_convergence_bound(0.0625, 0.4), 0.0625 / 0.4);
}

TEST(TwoScaleIdentity, ResidualShrinksAtSecondOrder) {
  for (const auto* name : {"laminate", "full-lower-order"}) {
    const auto chk = two_scale_identity_check(preset(name), 0.25, {16, 32});
    ASSERT_EQ(chk.residual.size(), 2u);
    EXPECT_GE(chk.order, 1.5) << name;
  }
}
