#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <vector>

#include "homog2d/coefficients.hpp"

namespace homog2d {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Which parts of the bilinear form to assemble.
struct FormParts {
  bool leading = true;     // a_ij D_j u D_i v
  bool drift = true;       // V_i u D_i v
  bool convection = true;  // B_i D_i u v
  bool zeroth = true;      // c u v
  double shift = 0.0;      // added to the diagonal (lambda)
};

/// A 9-point block stencil on an n x n node lattice, either periodic or a
/// closed box whose first and last rows/columns are boundary nodes.
/// Unknowns are interleaved: index (j*n + i)*m + alpha.
class NineStencil {
 public:
  NineStencil() = default;
  NineStencil(int n, bool periodic, int m);

  int n() const { return n_; }
  int m() const { return m_; }
  bool periodic() const { return periodic_; }

  double& at(int i, int j, int di, int dj, int al, int be) {
    return w_[idx(i, j, di, dj, al, be)];
  }
  double at(int i, int j, int di, int dj, int al, int be) const { return w_[idx(i, j, di, dj, al, be)]; }

  /// Applies the stencil to a full-lattice vector. Box lattices leave the
  /// boundary rows with whatever the partial stencil gives.
  void apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const;

  /// Sparse matrix over every lattice node.
  SparseMatrix matrix() const;
  /// Box lattice: rows and columns of the (n-2)^2 interior nodes.
  SparseMatrix interior_matrix() const;

 private:
  std::size_t idx(int i, int j, int di, int dj, int al, int be) const {
    return (((static_cast<std::size_t>(j) * n_ + i) * 9 + (dj + 1) * 3 + (di + 1)) * m_ + al) * m_ + be;
  }

  int n_ = 0;
  int m_ = 1;
  bool periodic_ = true;
  std::vector<double> w_;
};

/// Assembles the discrete divergence-form operator
///   -div(A grad u + V u) + B grad u + c u + shift u
/// on an n x n lattice of spacing h. Node (i, j) reads coefficients at half
/// lattice index (2i + offset, 2j + offset); faces and cells sit at the odd
/// neighbours. Rows are scaled so that the identity tensor gives the 5-point
/// Laplacian.
NineStencil assemble_form(int n, bool periodic, double h, const GridCoefficients& g, int offset,
                          const FormParts& parts);

}  // namespace homog2d
