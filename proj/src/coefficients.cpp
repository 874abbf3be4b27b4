#include "homog2d/coefficients.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>
#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "homog2d/error.hpp"

namespace homog2d {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_unit(double y) { return y - std::floor(y); }

bool all_zero(const std::vector<FourierEntry>& entries) {
  return std::all_of(entries.begin(), entries.end(), [](const FourierEntry& e) { return e.is_zero(); });
}

FourierEntry mode(double constant, int k1, int k2, double ca, double sa) {
  return FourierEntry(constant, {FourierMode{k1, k2, ca, sa}});
}

}  // namespace

double FourierEntry::operator()(double y1, double y2) const {
  double v = constant;
  y1 = wrap_unit(y1);
  y2 = wrap_unit(y2);
  for (const auto& md : modes) {
    const double phase = wrap_unit(md.k1 * y1 + md.k2 * y2);
    const double arg = kTwoPi * phase;
    v += md.cos_amp * std::cos(arg) + md.sin_amp * std::sin(arg);
  }
  return v;
}

int FourierEntry::max_index() const {
  int k = 0;
  for (const auto& md : modes) k = std::max({k, std::abs(md.k1), std::abs(md.k2)});
  return k;
}

bool FourierEntry::is_constant() const {
  return std::all_of(modes.begin(), modes.end(), [](const FourierMode& md) {
    return (md.k1 == 0 && md.k2 == 0) || (md.cos_amp == 0.0 && md.sin_amp == 0.0);
  });
}

bool FourierEntry::is_zero() const {
  double c0 = constant;
  for (const auto& md : modes) {
    if (md.k1 == 0 && md.k2 == 0)
      c0 += md.cos_amp;
    else if (md.cos_amp != 0.0 || md.sin_amp != 0.0)
      return false;
  }
  return c0 == 0.0;
}

CoefficientSet CoefficientSet::zeros(int m) {
  if (m < 1) throw Error("system size m must be positive");
  CoefficientSet s;
  s.m = m;
  const TensorLayout l{m};
  s.A.assign(l.a_count(), FourierEntry{});
  s.V.assign(l.vec_count(), FourierEntry{});
  s.B.assign(l.vec_count(), FourierEntry{});
  s.c.assign(l.mat_count(), FourierEntry{});
  return s;
}

int CoefficientSet::max_mode_index() const {
  int k = 0;
  for (const auto* group : {&A, &V, &B, &c})
    for (const auto& e : *group) k = std::max(k, e.max_index());
  return k;
}

bool CoefficientSet::has_lower_order() const { return !(all_zero(V) && all_zero(B) && all_zero(c)); }

bool CoefficientSet::is_self_adjoint() const {
  if (!all_zero(V) || !all_zero(B)) return false;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int al = 0; al < m; ++al)
        for (int be = 0; be < m; ++be)
          if (!(a(i, j, al, be) == a(j, i, be, al))) return false;
  const TensorLayout l{m};
  for (int al = 0; al < m; ++al)
    for (int be = 0; be < m; ++be)
      if (!(c[l.mat(al, be)] == c[l.mat(be, al)])) return false;
  return true;
}

bool CoefficientSet::is_constant() const {
  for (const auto* group : {&A, &V, &B, &c})
    for (const auto& e : *group)
      if (!e.is_constant()) return false;
  return true;
}

CoefficientSet CoefficientSet::adjoint() const {
  CoefficientSet out = zeros(m);
  out.name = name + "*";
  out.lambda = lambda;
  out.mu = mu;
  out.kappa = kappa;
  const TensorLayout l{m};
  for (int al = 0; al < m; ++al) {
    for (int be = 0; be < m; ++be) {
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) out.a(i, j, al, be) = a(j, i, be, al);
        out.V[l.vec(i, al, be)] = B[l.vec(i, be, al)];
        out.B[l.vec(i, al, be)] = V[l.vec(i, be, al)];
      }
      out.c[l.mat(al, be)] = c[l.mat(be, al)];
    }
  }
  return out;
}

CoefficientSet CoefficientSet::leading_part() const {
  CoefficientSet out = zeros(m);
  out.name = name;
  out.A = A;
  out.mu = mu;
  return out;
}

void validate_shape(const CoefficientSet& set) {
  if (set.m < 1) throw Error("system size m must be positive");
  const TensorLayout l{set.m};
  if (static_cast<int>(set.A.size()) != l.a_count() || static_cast<int>(set.V.size()) != l.vec_count() ||
      static_cast<int>(set.B.size()) != l.vec_count() || static_cast<int>(set.c.size()) != l.mat_count())
    throw Error(fmt::format("coefficient tensors have the wrong size for m={}", set.m));
  for (const auto* group : {&set.A, &set.V, &set.B, &set.c})
    for (const auto& e : *group)
      if (e.modes.size() > FourierEntry::kMaxModes)
        throw Error(fmt::format("a coefficient entry has {} modes (limit {})", e.modes.size(),
                                FourierEntry::kMaxModes));
  if (!(set.lambda >= 0.0)) throw Error("lambda must be non-negative");
  if (!(set.mu > 0.0)) throw Error("declared mu must be positive");
  if (!(set.kappa >= 0.0)) throw Error("declared kappa must be non-negative");
}

std::vector<std::string> preset_names() {
  return {"identity", "laminate", "smooth-checkerboard", "full-lower-order"};
}

CoefficientSet preset(const std::string& name) {
  if (name == "identity") {
    CoefficientSet s = CoefficientSet::zeros(1);
    s.name = name;
    s.a(0, 0, 0, 0) = FourierEntry(1.0);
    s.a(1, 1, 0, 0) = FourierEntry(1.0);
    s.mu = 1.0;
    return s;
  }
  if (name == "laminate") {
    CoefficientSet s = CoefficientSet::zeros(1);
    s.name = name;
    s.a(0, 0, 0, 0) = mode(2.0, 1, 0, 0.0, 1.0);
    s.a(1, 1, 0, 0) = mode(2.0, 1, 0, 0.0, 1.0);
    s.mu = 1.0 / 3.0;
    return s;
  }
  if (name == "smooth-checkerboard") {
    // 2 + 0.8 sin(2pi y1) sin(2pi y2) = 2 + 0.4 cos(2pi(y1-y2)) - 0.4 cos(2pi(y1+y2))
    CoefficientSet s = CoefficientSet::zeros(1);
    s.name = name;
    const FourierEntry a(2.0, {FourierMode{1, -1, 0.4, 0.0}, FourierMode{1, 1, -0.4, 0.0}});
    s.a(0, 0, 0, 0) = a;
    s.a(1, 1, 0, 0) = a;
    s.mu = 0.35;
    return s;
  }
  if (name == "full-lower-order") {
    CoefficientSet s = CoefficientSet::zeros(2);
    s.name = name;
    const TensorLayout l{2};
    // leading part: diagonal blocks, cross terms i != j and alpha != beta couplings
    s.a(0, 0, 0, 0) = mode(2.0, 1, 0, 0.0, 0.5);
    s.a(1, 1, 0, 0) = mode(2.0, 0, 1, 0.4, 0.0);
    s.a(0, 0, 1, 1) = mode(1.8, 1, 1, 0.4, 0.0);
    s.a(1, 1, 1, 1) = mode(2.2, 0, 1, 0.0, 0.5);
    s.a(0, 1, 0, 0) = mode(0.0, 1, 0, 0.3, 0.0);
    s.a(1, 0, 0, 0) = mode(0.0, 1, 0, 0.3, 0.0);
    s.a(0, 1, 1, 1) = mode(0.0, 0, 1, 0.0, 0.2);
    s.a(1, 0, 1, 1) = mode(0.1, 0, 1, 0.0, 0.2);
    s.a(0, 0, 0, 1) = mode(0.0, 0, 1, 0.0, 0.25);
    s.a(0, 0, 1, 0) = mode(0.0, 0, 1, 0.0, 0.25);
    s.a(1, 1, 0, 1) = FourierEntry(0.2);
    s.a(1, 1, 1, 0) = mode(0.0, 1, 0, 0.1, 0.0);

    s.V[l.vec(0, 0, 0)] = mode(0.0, 1, 0, 0.5, 0.0);
    s.V[l.vec(1, 0, 0)] = mode(0.0, 1, 0, 0.0, 0.4);
    s.V[l.vec(0, 0, 1)] = mode(0.0, 0, 1, 0.0, 0.3);
    s.V[l.vec(1, 1, 0)] = mode(0.0, 1, 0, 0.3, 0.0);
    s.V[l.vec(1, 1, 1)] = mode(0.2, 0, 1, 0.0, 0.5);
    s.V[l.vec(0, 1, 1)] = FourierEntry(0.2);

    s.B[l.vec(0, 0, 0)] = mode(0.0, 0, 1, 0.0, 0.5);
    s.B[l.vec(1, 0, 0)] = mode(0.3, 1, 0, 0.3, 0.0);
    s.B[l.vec(0, 1, 0)] = mode(0.0, 1, 0, 0.4, 0.0);
    s.B[l.vec(1, 0, 1)] = mode(0.0, 1, 1, 0.0, 0.3);
    s.B[l.vec(0, 1, 1)] = FourierEntry(0.2);
    s.B[l.vec(1, 1, 1)] = mode(0.0, 0, 1, 0.5, 0.0);

    s.c[l.mat(0, 0)] = mode(0.0, 1, 0, 0.0, 0.5);
    s.c[l.mat(0, 1)] = mode(0.0, 0, 1, 0.3, 0.0);
    s.c[l.mat(1, 0)] = FourierEntry(-0.3);
    s.c[l.mat(1, 1)] = mode(0.0, 1, -1, 0.4, 0.0);

    s.lambda = 2.0;
    s.mu = 0.3;
    s.kappa = 1.0;
    return s;
  }
  std::string list;
  for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
  throw Error(fmt::format("unknown preset '{}' (available: {})", name, list));
}

double verify_ellipticity(const CoefficientSet& set, int density) {
  validate_shape(set);
  if (density < 16) throw Error("ellipticity density must be at least 16");
  const int m = set.m;
  const int n = 2 * m;
  double min_eig = std::numeric_limits<double>::infinity();
  double max_eig = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd S(n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  for (int t = 0; t < density; ++t) {
    for (int s = 0; s < density; ++s) {
      const double y1 = static_cast<double>(s) / density;
      const double y2 = static_cast<double>(t) / density;
      // xi is indexed (i, alpha) -> i*m + alpha
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int al = 0; al < m; ++al)
            for (int be = 0; be < m; ++be) {
              const double v = 0.5 * (set.a(i, j, al, be)(y1, y2) + set.a(j, i, be, al)(y1, y2));
              S(i * m + al, j * m + be) = v;
            }
      es.compute(S, Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues()(0);
      const double hi = es.eigenvalues()(n - 1);
      if (!(lo > 0.0))
        throw Error(fmt::format("coefficients are not elliptic: smallest eigenvalue {:.6g} at y=({:.6g}, {:.6g})",
                                lo, y1, y2));
      min_eig = std::min(min_eig, lo);
      max_eig = std::max(max_eig, hi);
    }
  }
  if (max_eig > (1.0 / set.mu) * (1.0 + 1e-12))
    throw Error(fmt::format("upper ellipticity bound violated: largest eigenvalue {:.6g} exceeds 1/mu = {:.6g}",
                            max_eig, 1.0 / set.mu));
  return min_eig;
}

double sup_lower_order(const CoefficientSet& set, int density) {
  double sup = 0.0;
  for (const auto* group : {&set.V, &set.B, &set.c})
    for (const auto& e : *group) {
      if (e.is_zero()) continue;
      for (int t = 0; t < density; ++t)
        for (int s = 0; s < density; ++s)
          sup = std::max(sup, std::abs(e(static_cast<double>(s) / density, static_cast<double>(t) / density)));
    }
  return sup;
}

void validate(const CoefficientSet& set) {
  validate_shape(set);
  const double mu = verify_ellipticity(set, 64);
  if (mu < set.mu - 1e-12)
    throw Error(fmt::format("certified ellipticity {:.6g} is below the declared mu {:.6g}", mu, set.mu));
  const double sup = sup_lower_order(set, 64);
  if (sup > set.kappa * (1.0 + 1e-12) + 1e-15)
    throw Error(fmt::format("lower-order coefficients reach {:.6g}, above the declared kappa {:.6g}", sup, set.kappa));
}

double GridCoefficients::mean(int entry) const {
  const int w = 2 * n_;
  double sum = 0.0;
  const std::size_t off = static_cast<std::size_t>(entry) * w * w;
  for (std::size_t k = 0; k < static_cast<std::size_t>(w) * w; ++k) sum += data_[off + k];
  return sum / (static_cast<double>(w) * w);
}

GridCoefficients sample_lattice(const CoefficientSet& set, int N) {
  validate_shape(set);
  if (N < 1) throw Error("lattice resolution must be positive");
  GridCoefficients g;
  g.n_ = N;
  g.layout_ = set.layout();
  g.lower_order_ = set.has_lower_order();
  g.self_adjoint_ = set.is_self_adjoint();
  g.lambda_ = set.lambda;
  g.hash_ = coefficient_hash(set);
  const int w = 2 * N;
  const std::size_t plane = static_cast<std::size_t>(w) * w;
  g.data_.assign(plane * g.layout_.total(), 0.0);

  // Phases are reduced exactly in integer arithmetic, so lattice samples are
  // bit-identical under integer shifts of the mode phases.
  std::vector<double> cos_tab(w), sin_tab(w);
  for (int k = 0; k < w; ++k) {
    cos_tab[k] = std::cos(kTwoPi * k / w);
    sin_tab[k] = std::sin(kTwoPi * k / w);
  }
  int entry = 0;
  for (const auto* group : {&set.A, &set.V, &set.B, &set.c}) {
    for (const auto& e : *group) {
      double* out = g.data_.data() + plane * entry;
      for (int t = 0; t < w; ++t)
        for (int s = 0; s < w; ++s) {
          double v = e.constant;
          for (const auto& md : e.modes) {
            long long idx = (static_cast<long long>(md.k1) * s + static_cast<long long>(md.k2) * t) % w;
            if (idx < 0) idx += w;
            v += md.cos_amp * cos_tab[idx] + md.sin_amp * sin_tab[idx];
          }
          out[static_cast<std::size_t>(t) * w + s] = v;
        }
      ++entry;
    }
  }
  return g;
}

GridCoefficients sample_grid(const CoefficientSet& set, int N) {
  if (N < 4 || (N & (N - 1)) != 0) throw Error(fmt::format("torus size N={} must be a power of two >= 4", N));
  const int kmax = set.max_mode_index();
  if (N < 4 * kmax)
    throw Error(fmt::format("aliasing: torus size N={} is below 4 * max mode index = {}", N, 4 * kmax));
  return sample_lattice(set, N);
}

namespace {

std::string entry_text(const FourierEntry& e) {
  std::string s = fmt::format("{{ constant = {:.17g}, modes = [", e.constant);
  for (std::size_t k = 0; k < e.modes.size(); ++k) {
    const auto& md = e.modes[k];
    s += fmt::format("{}[{}, {}, {:.17g}, {:.17g}]", k ? ", " : "", md.k1, md.k2, md.cos_amp, md.sin_amp);
  }
  return s + "] }";
}

}  // namespace

std::string serialize(const CoefficientSet& set) {
  const TensorLayout l{set.m};
  std::string out = "[coefficients]\n";
  out += fmt::format("name = \"{}\"\nm = {}\nlambda = {:.17g}\nmu = {:.17g}\nkappa = {:.17g}\n", set.name, set.m,
                     set.lambda, set.mu, set.kappa);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int al = 0; al < set.m; ++al)
        for (int be = 0; be < set.m; ++be) {
          const auto& e = set.a(i, j, al, be);
          if (!e.is_zero()) out += fmt::format("A.{}.{}.{}.{} = {}\n", i + 1, j + 1, al + 1, be + 1, entry_text(e));
        }
  for (const auto& [label, group] : {std::pair{"V", &set.V}, std::pair{"B", &set.B}})
    for (int i = 0; i < 2; ++i)
      for (int al = 0; al < set.m; ++al)
        for (int be = 0; be < set.m; ++be) {
          const auto& e = (*group)[l.vec(i, al, be)];
          if (!e.is_zero()) out += fmt::format("{}.{}.{}.{} = {}\n", label, i + 1, al + 1, be + 1, entry_text(e));
        }
  for (int al = 0; al < set.m; ++al)
    for (int be = 0; be < set.m; ++be) {
      const auto& e = set.c[l.mat(al, be)];
      if (!e.is_zero()) out += fmt::format("c.{}.{} = {}\n", al + 1, be + 1, entry_text(e));
    }
  return out;
}

std::uint32_t coefficient_hash(const CoefficientSet& set) {
  const std::string text = serialize(set);
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size())));
}

}  // namespace homog2d
