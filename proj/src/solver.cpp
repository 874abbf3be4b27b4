#include "homog2d/solver.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "homog2d/error.hpp"
#include "homog2d/krylov.hpp"

namespace homog2d {

int DomainMesh::boundary_index(int i, int j) const {
  const int s = M + 2;
  if (j == 0) return i;
  if (j == M + 1) return s + 2 * M + i;
  if (i == 0) return s + 2 * (j - 1);
  if (i == M + 1) return s + 2 * (j - 1) + 1;
  return -1;
}

DomainMesh DomainMesh::for_period(double eps, int P) {
  if (!(eps > 0.0) || P < 1) throw Error("mesh rule needs eps > 0 and P >= 1");
  const double n = P / eps;
  const long long r = std::llround(n);
  if (std::abs(n - static_cast<double>(r)) > 1e-9 * n || r < 3)
    throw Error(fmt::format("eps = {} is not commensurate with P = {} nodes per period (P/eps = {:.6g})", eps, P, n));
  return DomainMesh{static_cast<int>(r - 1)};
}

Field::Field(DomainMesh mesh_, int m_)
    : mesh(mesh_),
      m(m_),
      interior(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh_.M) * mesh_.M * m_)),
      boundary(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh_.boundary_count()) * m_)) {}

double Field::value(int i, int j, int alpha) const {
  const int b = mesh.boundary_index(i, j);
  if (b >= 0) return boundary[static_cast<Eigen::Index>(b) * m + alpha];
  return interior[(static_cast<Eigen::Index>(j - 1) * mesh.M + (i - 1)) * m + alpha];
}

void Field::set(int i, int j, int alpha, double v) {
  const int b = mesh.boundary_index(i, j);
  if (b >= 0)
    boundary[static_cast<Eigen::Index>(b) * m + alpha] = v;
  else
    interior[(static_cast<Eigen::Index>(j - 1) * mesh.M + (i - 1)) * m + alpha] = v;
}

Eigen::VectorXd Field::full() const {
  const int s = mesh.side();
  Eigen::VectorXd v(static_cast<Eigen::Index>(s) * s * m);
  for (int j = 0; j < s; ++j)
    for (int i = 0; i < s; ++i)
      for (int a = 0; a < m; ++a) v[(static_cast<Eigen::Index>(j) * s + i) * m + a] = value(i, j, a);
  return v;
}

Field Field::from_full(const DomainMesh& mesh, int m, const Eigen::VectorXd& v) {
  Field f(mesh, m);
  const int s = mesh.side();
  for (int j = 0; j < s; ++j)
    for (int i = 0; i < s; ++i)
      for (int a = 0; a < m; ++a) f.set(i, j, a, v[(static_cast<Eigen::Index>(j) * s + i) * m + a]);
  return f;
}

Field Field::from_function(const DomainMesh& mesh, int m, const std::function<double(double, double, int)>& fn) {
  Field f(mesh, m);
  const int s = mesh.side();
  for (int j = 0; j < s; ++j)
    for (int i = 0; i < s; ++i)
      for (int a = 0; a < m; ++a) f.set(i, j, a, fn(mesh.x(i), mesh.x(j), a));
  return f;
}

namespace {

void check_compatible(const Field& a, const Field& b) {
  if (a.mesh.M != b.mesh.M || a.m != b.m) throw Error("fields live on different meshes");
}

}  // namespace

Field& Field::operator+=(const Field& o) {
  check_compatible(*this, o);
  interior += o.interior;
  boundary += o.boundary;
  return *this;
}

Field& Field::operator-=(const Field& o) {
  check_compatible(*this, o);
  interior -= o.interior;
  boundary -= o.boundary;
  return *this;
}

Field& Field::operator*=(double s) {
  interior *= s;
  boundary *= s;
  return *this;
}

EdgeFlux EdgeFlux::from_function(const DomainMesh& mesh, int m,
                                 const std::function<double(int, double, double, int)>& f) {
  EdgeFlux e;
  e.mesh = mesh;
  e.m = m;
  const int s = mesh.side();
  const double h = mesh.h();
  e.fx.assign(static_cast<std::size_t>(s) * (s - 1) * m, 0.0);
  e.fy.assign(static_cast<std::size_t>(s) * (s - 1) * m, 0.0);
  for (int j = 0; j < s; ++j)
    for (int i = 0; i + 1 < s; ++i)
      for (int a = 0; a < m; ++a) e.fx[(static_cast<std::size_t>(j) * (s - 1) + i) * m + a] = f(0, (i + 0.5) * h, j * h, a);
  for (int j = 0; j + 1 < s; ++j)
    for (int i = 0; i < s; ++i)
      for (int a = 0; a < m; ++a) e.fy[(static_cast<std::size_t>(j) * s + i) * m + a] = f(1, i * h, (j + 0.5) * h, a);
  return e;
}

std::string DiscreteOperator::tag() const {
  if (homogenized) return fmt::format("L0[M={},lambda={}]", mesh.M, lambda);
  return fmt::format("Leps[eps={},M={},lambda={}]", eps, mesh.M, lambda);
}

namespace {

Eigen::MatrixXd lattice_mean_block(const GridCoefficients& g, int d) {
  const int m = g.m();
  Eigen::MatrixXd M(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) M(a, b) = g.mean(g.layout().a(d, d, a, b));
  return M;
}

bool matrix_symmetric(const SparseMatrix& A) {
  const SparseMatrix T = A.transpose();
  const double scale = A.norm();
  return (A - T).norm() <= 1e-14 * scale;
}

DiscreteOperator finish_operator(const GridCoefficients& g, const DomainMesh& mesh, double lambda, bool leading_only,
                                 const AssembleOptions& opt) {
  if (mesh.M < 1) throw Error("mesh needs at least one interior node");
  DiscreteOperator op;
  op.mesh = mesh;
  op.m = g.m();
  op.lambda = leading_only ? 0.0 : lambda;
  op.hash = g.source_hash();
  FormParts parts;
  if (leading_only) parts.drift = parts.convection = parts.zeroth = false;
  parts.shift = op.lambda;
  op.stencil = assemble_form(mesh.side(), false, mesh.h(), g, 0, parts);
  op.A = op.stencil.interior_matrix();
  op.symmetric = matrix_symmetric(op.A);
  const Eigen::MatrixXd shift = op.lambda * Eigen::MatrixXd::Identity(op.m, op.m);
  op.pre = std::make_shared<BlockSpectralPreconditioner>(BlockSpectralPreconditioner::dirichlet(
      mesh.M, mesh.h(), lattice_mean_block(g, 0), lattice_mean_block(g, 1), shift));
  op.coercivity = coercivity_probe(op, opt.probe_trials, opt.probe_seed);
  return op;
}

}  // namespace

DiscreteOperator assemble_Leps(const CoefficientSet& set, double eps, const DomainMesh& mesh,
                               const AssembleOptions& opt) {
  validate(set);
  if (!(eps > 0.0)) throw Error("eps must be positive");
  const double P = (mesh.M + 1) * eps;
  const long long Pi = std::llround(P);
  if (Pi < 1 || std::abs(P - static_cast<double>(Pi)) > 1e-9 * std::max(1.0, P))
    throw Error(fmt::format("eps = {} is not commensurate with the mesh: (M+1) eps = {:.6g} is not an integer", eps, P));
  const GridCoefficients g = sample_lattice(set, static_cast<int>(Pi));
  DiscreteOperator op = finish_operator(g, mesh, opt.lambda.value_or(set.lambda), opt.leading_only, opt);
  op.eps = eps;
  return op;
}

DiscreteOperator assemble_L0(const EffectiveTensors& eff, const DomainMesh& mesh, const AssembleOptions& opt) {
  check_effective_ellipticity(eff);
  const GridCoefficients g = sample_lattice(to_coefficient_set(eff), 1);
  DiscreteOperator op = finish_operator(g, mesh, opt.lambda.value_or(eff.lambda), opt.leading_only, opt);
  op.homogenized = true;
  return op;
}

namespace {

Eigen::VectorXd interior_rows(const DomainMesh& mesh, int m, const Eigen::VectorXd& full) {
  const int M = mesh.M, s = mesh.side();
  Eigen::VectorXd out(static_cast<Eigen::Index>(M) * M * m);
  for (int j = 1; j <= M; ++j)
    for (int i = 1; i <= M; ++i)
      for (int a = 0; a < m; ++a)
        out[(static_cast<Eigen::Index>(j - 1) * M + (i - 1)) * m + a] = full[(static_cast<Eigen::Index>(j) * s + i) * m + a];
  return out;
}

}  // namespace

Eigen::VectorXd apply_operator(const DiscreteOperator& op, const Field& u) {
  if (u.mesh.M != op.mesh.M || u.m != op.m) throw Error("field does not match the operator mesh");
  Eigen::VectorXd out;
  op.stencil.apply(u.full(), out);
  return interior_rows(op.mesh, op.m, out);
}

Field solve_dirichlet(const DiscreteOperator& op, const EdgeFlux& f, const Field& F, const Field& g, double tol,
                      SolveInfo* info) {
  if (!(op.coercivity > 0.0))
    throw Error(fmt::format("{} has no positive coercivity certificate (probe value {:.4g}); raise lambda", op.tag(),
                            op.coercivity));
  const int M = op.mesh.M, m = op.m;
  if (F.mesh.M != M || g.mesh.M != M || F.m != m || g.m != m) throw Error("data does not match the operator mesh");
  Eigen::VectorXd rhs = F.interior;
  if (!f.empty()) {
    if (f.mesh.M != M || f.m != m) throw Error("flux data does not match the operator mesh");
    const int s = op.mesh.side();
    const double ih = 1.0 / op.mesh.h();
    for (int j = 1; j <= M; ++j)
      for (int i = 1; i <= M; ++i)
        for (int a = 0; a < m; ++a) {
          const double right = f.fx[(static_cast<std::size_t>(j) * (s - 1) + i) * m + a];
          const double left = f.fx[(static_cast<std::size_t>(j) * (s - 1) + i - 1) * m + a];
          const double up = f.fy[(static_cast<std::size_t>(j) * s + i) * m + a];
          const double down = f.fy[(static_cast<std::size_t>(j - 1) * s + i) * m + a];
          rhs[(static_cast<Eigen::Index>(j - 1) * M + (i - 1)) * m + a] += (right - left + up - down) * ih;
        }
  }
  if (g.boundary.size() && g.boundary.cwiseAbs().maxCoeff() > 0.0) {
    Field trace(op.mesh, m);
    trace.boundary = g.boundary;
    rhs -= apply_operator(op, trace);
  }
  const LinearMap A = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = op.A * x; };
  const LinearMap P = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { op.pre->apply(x, y); };
  KrylovOptions kopt;
  kopt.tol = tol;
  KrylovResult r = op.symmetric ? pcg(A, P, rhs, kopt) : bicgstab(A, P, rhs, kopt);
  Field u(op.mesh, m);
  u.interior = std::move(r.x);
  u.boundary = g.boundary;
  if (info) {
    info->iterations = r.iterations;
    info->residual = r.residual;
    info->history = std::move(r.history);
  }
  return u;
}

namespace {

// Interior probe vector with zero boundary values.
using ProbeFn = std::function<double(int i, int j, int a)>;

Eigen::VectorXd probe_vector(const DomainMesh& mesh, int m, const ProbeFn& fn) {
  const int M = mesh.M;
  Eigen::VectorXd v(static_cast<Eigen::Index>(M) * M * m);
  for (int j = 1; j <= M; ++j)
    for (int i = 1; i <= M; ++i)
      for (int a = 0; a < m; ++a) v[(static_cast<Eigen::Index>(j - 1) * M + (i - 1)) * m + a] = fn(i, j, a);
  return v;
}

// Face-difference H1 seminorm squared (boundary values zero).
double face_energy(const DomainMesh& mesh, int m, const Eigen::VectorXd& v) {
  const int M = mesh.M;
  auto at = [&](int i, int j, int a) -> double {
    if (i < 1 || j < 1 || i > M || j > M) return 0.0;
    return v[(static_cast<Eigen::Index>(j - 1) * M + (i - 1)) * m + a];
  };
  double s = 0.0;
  for (int j = 0; j <= M + 1; ++j)
    for (int i = 0; i <= M; ++i)
      for (int a = 0; a < m; ++a) {
        const double dx = at(i + 1, j, a) - at(i, j, a);
        const double dy = at(j, i + 1, a) - at(j, i, a);
        s += dx * dx + dy * dy;
      }
  return s;
}

}  // namespace

double ProbeSet::min_quotient(double lam) const {
  double q = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < form.size(); ++k) q = std::min(q, (form[k] + (lam - lambda) * l2[k]) / h1[k]);
  return q;
}

ProbeSet coercivity_probes(const DiscreteOperator& op, int trials, std::uint64_t seed) {
  if (trials < 32) throw Error(fmt::format("coercivity probe needs at least 32 trials (got {})", trials));
  const DomainMesh& mesh = op.mesh;
  const int m = op.m, M = mesh.M;
  const double h = mesh.h();
  const double pi = std::numbers::pi;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_int_distribution<int> freq(1, 8);

  std::vector<ProbeFn> probes;
  auto component_mix = [&]() {
    std::vector<double> c(m);
    for (auto& x : c) x = uni(rng);
    return c;
  };
  for (int a = 0; a < m; ++a) {
    probes.push_back([=](int i, int j, int b) { return b == a ? std::sin(pi * i * h) * std::sin(pi * j * h) : 0.0; });
    probes.push_back([=](int i, int j, int b) {
      const double d = std::min({i, j, M + 1 - i, M + 1 - j}) * h;
      return b == a ? std::min(1.0, d / (4.0 * h)) : 0.0;
    });
    probes.push_back([=](int i, int j, int b) { return b == a ? ((i + j) % 2 ? -1.0 : 1.0) : 0.0; });
  }
  int kind = 0;
  while (static_cast<int>(probes.size()) < trials) {
    const auto mix = component_mix();
    switch (kind++ % 3) {
      case 0: {  // smooth random sine sum
        struct Mode {
          int k1, k2;
          double amp;
        };
        std::vector<Mode> modes;
        for (int t = 0; t < 6; ++t) modes.push_back({freq(rng), freq(rng), uni(rng)});
        probes.push_back([=](int i, int j, int b) {
          double s = 0.0;
          for (const auto& md : modes) s += md.amp * std::sin(pi * md.k1 * i * h) * std::sin(pi * md.k2 * j * h);
          return mix[b] * s;
        });
        break;
      }
      case 1: {  // tapered constant with a random component direction
        probes.push_back([=](int i, int j, int b) {
          const double d = std::min({i, j, M + 1 - i, M + 1 - j}) * h;
          return mix[b] * std::min(1.0, d / (4.0 * h));
        });
        break;
      }
      default: {  // white noise
        std::vector<double> noise(static_cast<std::size_t>(M) * M * m);
        for (auto& x : noise) x = uni(rng);
        probes.push_back([noise = std::move(noise), M, m](int i, int j, int b) {
          return noise[(static_cast<std::size_t>(j - 1) * M + (i - 1)) * m + b];
        });
        break;
      }
    }
  }
  ProbeSet out;
  out.lambda = op.lambda;
  Eigen::VectorXd Lu;
  for (const auto& fn : probes) {
    const Eigen::VectorXd u = probe_vector(mesh, m, fn);
    Lu.noalias() = op.A * u;
    const double l2 = h * h * u.squaredNorm();
    out.form.push_back(h * h * u.dot(Lu));
    out.l2.push_back(l2);
    out.h1.push_back(l2 + face_energy(mesh, m, u));
  }
  return out;
}

double coercivity_probe(const DiscreteOperator& op, int trials, std::uint64_t seed) {
  return coercivity_probes(op, trials, seed).min_quotient(op.lambda);
}

double select_lambda(const CoefficientSet& set, double eps, const DomainMesh& mesh, int trials, std::uint64_t seed) {
  AssembleOptions opt;
  opt.lambda = 0.0;
  opt.probe_trials = trials;
  opt.probe_seed = seed;
  const DiscreteOperator op = assemble_Leps(set, eps, mesh, opt);
  const ProbeSet probes = coercivity_probes(op, trials, seed);
  std::vector<double> candidates{0.0};
  for (double l = 1.0; l <= 64.0; l *= 2.0) candidates.push_back(l);
  for (double l : candidates)
    if (probes.min_quotient(l) >= 0.05) return l;
  throw Error(fmt::format("no lambda in {{0, 1, ..., 64}} passes the coercivity probe (value at 64: {:.4g})",
                          probes.min_quotient(64.0)));
}

namespace {

double overlap(double a, double b, double lo, double hi) { return std::max(0.0, std::min(b, hi) - std::max(a, lo)); }

std::vector<double> axis_weights(const DomainMesh& mesh, Region r) {
  const int s = mesh.side();
  const double h = mesh.h();
  std::vector<double> w(s);
  for (int i = 0; i < s; ++i) {
    const double x = mesh.x(i);
    w[i] = overlap(std::max(0.0, x - h / 2), std::min(1.0, x + h / 2), r.lo, r.hi);
  }
  return w;
}

}  // namespace

std::array<Eigen::VectorXd, 2> nodal_gradient(const Field& u, int alpha) {
  const int s = u.mesh.side();
  const double h = u.mesh.h();
  std::array<Eigen::VectorXd, 2> g{Eigen::VectorXd(s * s), Eigen::VectorXd(s * s)};
  auto d = [&](int i0, int j0, int i1, int j1, double w) { return (u.value(i1, j1, alpha) - u.value(i0, j0, alpha)) / w; };
  for (int j = 0; j < s; ++j)
    for (int i = 0; i < s; ++i) {
      const int k = j * s + i;
      g[0][k] = i == 0 ? d(0, j, 1, j, h) : i == s - 1 ? d(s - 2, j, s - 1, j, h) : d(i - 1, j, i + 1, j, 2 * h);
      g[1][k] = j == 0 ? d(i, 0, i, 1, h) : j == s - 1 ? d(i, s - 2, i, s - 1, h) : d(i, j - 1, i, j + 1, 2 * h);
    }
  return g;
}

double norm(const Field& u, NormKind kind, double p, Region region) {
  if ((kind == NormKind::Lp || kind == NormKind::W1p || kind == NormKind::W1pSemi) && !(p >= 1.0))
    throw Error("norm exponent p must be at least 1");
  if (kind == NormKind::L1) p = 1.0;
  if (kind == NormKind::L2 || kind == NormKind::H1 || kind == NormKind::H1Semi) p = 2.0;
  const int s = u.mesh.side(), m = u.m;
  const auto w = axis_weights(u.mesh, region);
  const double tol = 1e-12;

  if (kind == NormKind::Linf) {
    double mx = 0.0;
    for (int j = 0; j < s; ++j)
      for (int i = 0; i < s; ++i) {
        const double x = u.mesh.x(i), y = u.mesh.x(j);
        if (x < region.lo - tol || x > region.hi + tol || y < region.lo - tol || y > region.hi + tol) continue;
        double v = 0.0;
        for (int a = 0; a < m; ++a) v += u.value(i, j, a) * u.value(i, j, a);
        mx = std::max(mx, std::sqrt(v));
      }
    return mx;
  }

  const bool need_value = kind != NormKind::H1Semi && kind != NormKind::W1pSemi;
  const bool need_grad = kind == NormKind::H1 || kind == NormKind::H1Semi || kind == NormKind::W1p ||
                         kind == NormKind::W1pSemi;
  std::vector<std::array<Eigen::VectorXd, 2>> grads;
  if (need_grad)
    for (int a = 0; a < m; ++a) grads.push_back(nodal_gradient(u, a));
  double sv = 0.0, sg = 0.0;
  for (int j = 0; j < s; ++j)
    for (int i = 0; i < s; ++i) {
      const double wt = w[i] * w[j];
      if (wt == 0.0) continue;
      if (need_value) {
        double v = 0.0;
        for (int a = 0; a < m; ++a) v += u.value(i, j, a) * u.value(i, j, a);
        sv += wt * std::pow(std::sqrt(v), p);
      }
      if (need_grad) {
        double g2 = 0.0;
        for (int a = 0; a < m; ++a)
          for (int d = 0; d < 2; ++d) g2 += grads[a][d][j * s + i] * grads[a][d][j * s + i];
        sg += wt * std::pow(std::sqrt(g2), p);
      }
    }
  return std::pow(sv + sg, 1.0 / p);
}

double holder_seminorm(const Field& u, double sigma, int pairs, std::uint64_t seed) {
  if (!(sigma > 0.0 && sigma < 1.0)) throw Error("Hoelder exponent must lie in (0, 1)");
  const int s = u.mesh.side(), m = u.m;
  const double h = u.mesh.h();
  auto diff = [&](int i0, int j0, int i1, int j1) {
    double v = 0.0;
    for (int a = 0; a < m; ++a) {
      const double d = u.value(i0, j0, a) - u.value(i1, j1, a);
      v += d * d;
    }
    return std::sqrt(v);
  };
  double best = 0.0;
  const double adj = std::pow(h, sigma);
  for (int j = 0; j < s; ++j)
    for (int i = 0; i < s; ++i) {
      if (i + 1 < s) best = std::max(best, diff(i, j, i + 1, j) / adj);
      if (j + 1 < s) best = std::max(best, diff(i, j, i, j + 1) / adj);
    }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, s - 1);
  for (int k = 0; k < pairs; ++k) {
    const int i0 = pick(rng), j0 = pick(rng), i1 = pick(rng), j1 = pick(rng);
    if (i0 == i1 && j0 == j1) continue;
    const double dist = h * std::hypot(i0 - i1, j0 - j1);
    best = std::max(best, diff(i0, j0, i1, j1) / std::pow(dist, sigma));
  }
  return best;
}

std::string field_csv(const Field& u) {
  std::string out = "x,y,component,value\n";
  const int s = u.mesh.side();
  for (int j = 0; j < s; ++j)
    for (int i = 0; i < s; ++i)
      for (int a = 0; a < u.m; ++a)
        out += fmt::format("{:.17g},{:.17g},{},{:.17g}\n", u.mesh.x(i), u.mesh.x(j), a + 1, u.value(i, j, a));
  return out;
}

}  // namespace homog2d
