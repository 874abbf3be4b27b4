#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace homog2d {

/// One trigonometric term cos_amp*cos(2pi k.y) + sin_amp*sin(2pi k.y).
struct FourierMode {
  int k1 = 0;
  int k2 = 0;
  double cos_amp = 0.0;
  double sin_amp = 0.0;

  bool operator==(const FourierMode&) const = default;
};

/// A truncated Fourier series on the unit torus. Periodic by construction.
struct FourierEntry {
  static constexpr std::size_t kMaxModes = 64;

  double constant = 0.0;
  std::vector<FourierMode> modes;

  FourierEntry() = default;
  FourierEntry(double c, std::vector<FourierMode> m = {}) : constant(c), modes(std::move(m)) {}

  double operator()(double y1, double y2) const;

  /// Largest |k1|, |k2| over all modes (0 for a constant).
  int max_index() const;
  bool is_constant() const;
  bool is_zero() const;

  bool operator==(const FourierEntry&) const = default;
};

/// Flattened index helpers for the tensor entries. Indices are 0-based.
struct TensorLayout {
  int m = 1;

  int a(int i, int j, int alpha, int beta) const { return ((i * 2 + j) * m + alpha) * m + beta; }
  int vec(int i, int alpha, int beta) const { return (i * m + alpha) * m + beta; }
  int mat(int alpha, int beta) const { return alpha * m + beta; }

  int a_count() const { return 4 * m * m; }
  int vec_count() const { return 2 * m * m; }
  int mat_count() const { return m * m; }
  int total() const { return a_count() + 2 * vec_count() + mat_count(); }
};

/// Periodic coefficient data of -div(A(x/eps)grad + V(x/eps)) + B(x/eps)grad + c(x/eps) + lambda.
struct CoefficientSet {
  std::string name = "custom";
  int m = 1;
  std::vector<FourierEntry> A;  // a_ij^{alpha beta}
  std::vector<FourierEntry> V;  // V_i^{alpha beta}
  std::vector<FourierEntry> B;  // B_i^{alpha beta}
  std::vector<FourierEntry> c;  // c^{alpha beta}
  double lambda = 0.0;
  double mu = 1.0;     // claimed ellipticity constant
  double kappa = 0.0;  // claimed sup bound of V, B, c

  /// All-zero set of system size m (not elliptic until A is filled in).
  static CoefficientSet zeros(int m);

  TensorLayout layout() const { return {m}; }
  FourierEntry& a(int i, int j, int alpha, int beta) { return A[layout().a(i, j, alpha, beta)]; }
  const FourierEntry& a(int i, int j, int alpha, int beta) const {
    return A[layout().a(i, j, alpha, beta)];
  }

  int max_mode_index() const;
  bool has_lower_order() const;
  /// a_ij^{ab} == a_ji^{ba} entrywise and V = B = 0.
  bool is_self_adjoint() const;
  bool is_constant() const;

  /// Coefficients of the formal adjoint: A -> A^T blocks, V <-> B^T, c -> c^T.
  CoefficientSet adjoint() const;

  /// Copy with V, B, c zeroed and lambda = 0.
  CoefficientSet leading_part() const;

  bool operator==(const CoefficientSet&) const = default;
};

/// Throws Error when sizes, mode counts or scalar parameters are invalid.
void validate_shape(const CoefficientSet& set);

/// Names accepted by preset().
std::vector<std::string> preset_names();

/// Built-in coefficient sets: identity, laminate, smooth-checkerboard, full-lower-order.
CoefficientSet preset(const std::string& name);

/// Smallest eigenvalue of the symmetrised leading tensor over density^2
/// sample points. Throws if it is not positive or if the largest eigenvalue
/// exceeds 1/mu for the declared mu.
double verify_ellipticity(const CoefficientSet& set, int density = 64);

/// max(|V|, |B|, |c|) over density^2 sample points.
double sup_lower_order(const CoefficientSet& set, int density = 64);

/// Shape checks plus ellipticity and boundedness against the declared mu, kappa.
void validate(const CoefficientSet& set);

/// Coefficient samples on the half lattice {(s/2N, t/2N)} of the unit torus.
///
/// A torus grid with N cells per side puts cell centres at odd (s, t),
/// x-edge midpoints at (even, odd), y-edge midpoints at (odd, even) and cell
/// corners at (even, even). A vertex mesh with N intervals per period puts its
/// nodes on (even, even) instead.
class GridCoefficients {
 public:
  GridCoefficients() = default;

  int N() const { return n_; }
  int m() const { return layout_.m; }
  int side() const { return 2 * n_; }
  const TensorLayout& layout() const { return layout_; }

  /// Entry value at half-lattice point (s, t); indices wrap periodically.
  double value(int entry, int s, int t) const {
    const int w = 2 * n_;
    s %= w;
    t %= w;
    if (s < 0) s += w;
    if (t < 0) t += w;
    return data_[static_cast<std::size_t>(entry) * w * w + static_cast<std::size_t>(t) * w + s];
  }
  double a(int i, int j, int al, int be, int s, int t) const { return value(layout_.a(i, j, al, be), s, t); }
  double V(int i, int al, int be, int s, int t) const { return value(v_off() + layout_.vec(i, al, be), s, t); }
  double B(int i, int al, int be, int s, int t) const { return value(b_off() + layout_.vec(i, al, be), s, t); }
  double c(int al, int be, int s, int t) const { return value(c_off() + layout_.mat(al, be), s, t); }

  /// Cell-centre / edge-midpoint accessors of the N x N torus grid.
  double a_center(int i, int j, int al, int be, int ci, int cj) const { return a(i, j, al, be, 2 * ci + 1, 2 * cj + 1); }

  /// Mean of one entry over all half-lattice points.
  double mean(int entry) const;

  bool has_lower_order() const { return lower_order_; }
  bool self_adjoint() const { return self_adjoint_; }
  double lambda() const { return lambda_; }
  std::uint32_t source_hash() const { return hash_; }

  int v_off() const { return layout_.a_count(); }
  int b_off() const { return layout_.a_count() + layout_.vec_count(); }
  int c_off() const { return layout_.a_count() + 2 * layout_.vec_count(); }

  friend GridCoefficients sample_lattice(const CoefficientSet& set, int N);

 private:
  int n_ = 0;
  TensorLayout layout_{};
  std::vector<double> data_;
  bool lower_order_ = false;
  bool self_adjoint_ = false;
  double lambda_ = 0.0;
  std::uint32_t hash_ = 0;
};

/// Exact evaluation on the half lattice of resolution N (any N >= 1).
GridCoefficients sample_lattice(const CoefficientSet& set, int N);

/// Torus sampling for cell solves: N must be a power of two with
/// N >= 4 * max mode index, otherwise an aliasing error is thrown.
GridCoefficients sample_grid(const CoefficientSet& set, int N);

/// Canonical text form (the [coefficients] config section).
std::string serialize(const CoefficientSet& set);

/// CRC32 of serialize(set); used as cache key.
std::uint32_t coefficient_hash(const CoefficientSet& set);

}  // namespace homog2d
