#pragma once

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace homog2d {

/// Real 2D FFT on an n x n periodic grid (row-major, x fastest).
class PeriodicFFT {
 public:
  explicit PeriodicFFT(int n);
  ~PeriodicFFT();
  PeriodicFFT(const PeriodicFFT&) = delete;
  PeriodicFFT& operator=(const PeriodicFFT&) = delete;

  int n() const { return n_; }
  /// Number of complex coefficients: n * (n/2 + 1).
  int spectrum_size() const { return n_ * (n_ / 2 + 1); }

  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  /// Unnormalised inverse; the input spectrum is overwritten.
  void backward(std::span<std::complex<double>> in, std::span<double> out) const;

 private:
  int n_;
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
};

/// 2D type-I discrete sine transform on an n x n interior grid. Applying it
/// twice multiplies by (2(n+1))^2.
class SineTransform2D {
 public:
  explicit SineTransform2D(int n);
  ~SineTransform2D();
  SineTransform2D(const SineTransform2D&) = delete;
  SineTransform2D& operator=(const SineTransform2D&) = delete;

  int n() const { return n_; }
  void apply(std::span<const double> in, std::span<double> out) const;

 private:
  int n_;
  void* plan_ = nullptr;
};

/// Solves the 5-point periodic Poisson equation lap_h u = rhs on an n x n
/// torus of spacing 1/n. The mean of rhs is discarded; u has zero mean.
void periodic_poisson_solve(const PeriodicFFT& fft, std::span<const double> rhs, std::span<double> u);

/// Applies the 5-point periodic Laplacian (spacing 1/n).
void periodic_laplacian(int n, std::span<const double> u, std::span<double> out);

/// Inverse of the constant-coefficient operator
///   -sum_i D_ii(abar_ii) + shift
/// for m interleaved components, diagonalised by FFT (periodic) or DST
/// (homogeneous Dirichlet). Used as a spectrally equivalent preconditioner.
class BlockSpectralPreconditioner {
 public:
  /// Periodic n x n torus with spacing h; the constant mode is projected out.
  static BlockSpectralPreconditioner periodic(int n, double h, const Eigen::MatrixXd& a11,
                                              const Eigen::MatrixXd& a22);
  /// Dirichlet n x n interior grid with spacing h.
  static BlockSpectralPreconditioner dirichlet(int n, double h, const Eigen::MatrixXd& a11,
                                               const Eigen::MatrixXd& a22, const Eigen::MatrixXd& shift);

  void apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const;
  int size() const { return n_ * n_ * m_; }

 private:
  BlockSpectralPreconditioner() = default;

  bool periodic_ = true;
  int n_ = 0;
  int m_ = 1;
  std::shared_ptr<PeriodicFFT> fft_;
  std::shared_ptr<SineTransform2D> dst_;
  // Inverse symbols, one m x m block per retained mode (row-major blocks).
  std::vector<double> inv_;
};

}  // namespace homog2d
