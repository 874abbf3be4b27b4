#include "homog2d/stencil.hpp"

#include "homog2d/error.hpp"

namespace homog2d {

NineStencil::NineStencil(int n, bool periodic, int m) : n_(n), m_(m), periodic_(periodic) {
  if (n < (periodic ? 2 : 3)) throw Error("stencil lattice is too small");
  w_.assign(static_cast<std::size_t>(n) * n * 9 * m * m, 0.0);
}

void NineStencil::apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
  const int n = n_, m = m_;
  out.setZero(static_cast<Eigen::Index>(n) * n * m);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      double* o = out.data() + (static_cast<std::size_t>(j) * n + i) * m;
      for (int dj = -1; dj <= 1; ++dj) {
        int jj = j + dj;
        if (periodic_)
          jj = (jj + n) % n;
        else if (jj < 0 || jj >= n)
          continue;
        for (int di = -1; di <= 1; ++di) {
          int ii = i + di;
          if (periodic_)
            ii = (ii + n) % n;
          else if (ii < 0 || ii >= n)
            continue;
          const double* src = u.data() + (static_cast<std::size_t>(jj) * n + ii) * m;
          const double* w = w_.data() + idx(i, j, di, dj, 0, 0);
          for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) o[a] += w[a * m + b] * src[b];
        }
      }
    }
}

namespace {

SparseMatrix build(const NineStencil& s, bool interior_only) {
  const int n = s.n(), m = s.m();
  const int lo = interior_only ? 1 : 0;
  const int hi = interior_only ? n - 1 : n;
  const int side = hi - lo;
  const Eigen::Index size = static_cast<Eigen::Index>(side) * side * m;
  SparseMatrix A(size, size);
  A.reserve(Eigen::VectorXi::Constant(size, 9 * m));
  for (int j = lo; j < hi; ++j)
    for (int i = lo; i < hi; ++i)
      for (int a = 0; a < m; ++a) {
        const Eigen::Index row = (static_cast<Eigen::Index>(j - lo) * side + (i - lo)) * m + a;
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di) {
            int ii = i + di, jj = j + dj;
            if (s.periodic()) {
              ii = (ii + n) % n;
              jj = (jj + n) % n;
            } else if (ii < lo || ii >= hi || jj < lo || jj >= hi) {
              continue;
            }
            for (int b = 0; b < m; ++b) {
              const double v = s.at(i, j, di, dj, a, b);
              if (v != 0.0) A.coeffRef(row, (static_cast<Eigen::Index>(jj - lo) * side + (ii - lo)) * m + b) += v;
            }
          }
      }
  A.makeCompressed();
  return A;
}

}  // namespace

SparseMatrix NineStencil::matrix() const { return build(*this, false); }

SparseMatrix NineStencil::interior_matrix() const {
  if (periodic_) throw Error("interior_matrix needs a box lattice");
  return build(*this, true);
}

NineStencil assemble_form(int n, bool periodic, double h, const GridCoefficients& g, int offset,
                          const FormParts& parts) {
  const int m = g.m();
  NineStencil st(n, periodic, m);
  const double ih2 = 1.0 / (h * h);
  const double i2h = 1.0 / (2.0 * h);
  const double i4h2 = 1.0 / (4.0 * h * h);
  const int faces = periodic ? n : n - 1;
  const int o = offset;

  // Face between node p=(i,j) and q=(i+di,j+dj) along direction d.
  auto face = [&](int d, int i, int j) {
    const int di = d == 0 ? 1 : 0, dj = d == 0 ? 0 : 1;
    const int s = 2 * i + o + di, t = 2 * j + o + dj;
    int qi = i + di, qj = j + dj;
    if (periodic) {
      qi %= n;
      qj %= n;
    }
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        if (parts.leading) {
          const double c = g.a(d, d, a, b, s, t) * ih2;
          st.at(i, j, 0, 0, a, b) += c;
          st.at(i, j, di, dj, a, b) -= c;
          st.at(qi, qj, 0, 0, a, b) += c;
          st.at(qi, qj, -di, -dj, a, b) -= c;
        }
        if (parts.drift) {
          const double v = g.V(d, a, b, s, t) * i2h;
          st.at(i, j, 0, 0, a, b) -= v;
          st.at(i, j, di, dj, a, b) -= v;
          st.at(qi, qj, 0, 0, a, b) += v;
          st.at(qi, qj, -di, -dj, a, b) += v;
        }
        if (parts.convection) {
          const double v = g.B(d, a, b, s, t) * i2h;
          st.at(i, j, 0, 0, a, b) -= v;
          st.at(i, j, di, dj, a, b) += v;
          st.at(qi, qj, -di, -dj, a, b) -= v;
          st.at(qi, qj, 0, 0, a, b) += v;
        }
      }
  };

  for (int j = 0; j < n; ++j)
    for (int i = 0; i < faces; ++i) face(0, i, j);
  for (int j = 0; j < faces; ++j)
    for (int i = 0; i < n; ++i) face(1, i, j);

  if (parts.leading) {
    // Cross terms on cells: corners r = (ri, rj), G1 weight w1 = 2ri-1, G2 weight w2 = 2rj-1.
    for (int j = 0; j < faces; ++j)
      for (int i = 0; i < faces; ++i) {
        const int s = 2 * i + 1 + o, t = 2 * j + 1 + o;
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b) {
            const double a12 = g.a(0, 1, a, b, s, t) * i4h2;
            const double a21 = g.a(1, 0, a, b, s, t) * i4h2;
            if (a12 == 0.0 && a21 == 0.0) continue;
            for (int rj = 0; rj < 2; ++rj)
              for (int ri = 0; ri < 2; ++ri) {
                const double w1r = 2 * ri - 1, w2r = 2 * rj - 1;
                int pi = i + ri, pj = j + rj;
                if (periodic) {
                  pi %= n;
                  pj %= n;
                }
                for (int cj = 0; cj < 2; ++cj)
                  for (int ci = 0; ci < 2; ++ci) {
                    const double w1c = 2 * ci - 1, w2c = 2 * cj - 1;
                    st.at(pi, pj, ci - ri, cj - rj, a, b) += a12 * w1r * w2c + a21 * w2r * w1c;
                  }
              }
          }
      }
  }

  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < m; ++a) {
        if (parts.zeroth)
          for (int b = 0; b < m; ++b) st.at(i, j, 0, 0, a, b) += g.c(a, b, 2 * i + o, 2 * j + o);
        st.at(i, j, 0, 0, a, a) += parts.shift;
      }
  return st;
}

}  // namespace homog2d
