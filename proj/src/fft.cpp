#include "homog2d/fft.hpp"

#include <fftw3.h>
#include <fmt/format.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "homog2d/error.hpp"

namespace homog2d {

namespace {

// The FFTW planner is not thread safe; execution with the new-array API is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr unsigned kFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

double sin2(double x) {
  const double s = std::sin(x);
  return s * s;
}

}  // namespace

PeriodicFFT::PeriodicFFT(int n) : n_(n) {
  if (n < 2) throw Error(fmt::format("FFT size {} is too small", n));
  std::vector<double> r(static_cast<std::size_t>(n) * n);
  std::vector<std::complex<double>> c(static_cast<std::size_t>(spectrum_size()));
  std::lock_guard lock(planner_mutex());
  fwd_ = fftw_plan_dft_r2c_2d(n, n, r.data(), reinterpret_cast<fftw_complex*>(c.data()), kFlags);
  bwd_ = fftw_plan_dft_c2r_2d(n, n, reinterpret_cast<fftw_complex*>(c.data()), r.data(), kFlags);
  if (!fwd_ || !bwd_) throw Error("FFTW planning failed");
}

PeriodicFFT::~PeriodicFFT() {
  std::lock_guard lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  if (bwd_) fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void PeriodicFFT::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(fwd_), const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void PeriodicFFT::backward(std::span<std::complex<double>> in, std::span<double> out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(bwd_), reinterpret_cast<fftw_complex*>(in.data()), out.data());
}

SineTransform2D::SineTransform2D(int n) : n_(n) {
  if (n < 1) throw Error(fmt::format("sine transform size {} is too small", n));
  std::vector<double> a(static_cast<std::size_t>(n) * n), b(a.size());
  std::lock_guard lock(planner_mutex());
  plan_ = fftw_plan_r2r_2d(n, n, a.data(), b.data(), FFTW_RODFT00, FFTW_RODFT00, kFlags);
  if (!plan_) throw Error("FFTW planning failed");
}

SineTransform2D::~SineTransform2D() {
  std::lock_guard lock(planner_mutex());
  if (plan_) fftw_destroy_plan(static_cast<fftw_plan>(plan_));
}

void SineTransform2D::apply(std::span<const double> in, std::span<double> out) const {
  fftw_execute_r2r(static_cast<fftw_plan>(plan_), const_cast<double*>(in.data()), out.data());
}

void periodic_laplacian(int n, std::span<const double> u, std::span<double> out) {
  const double inv_h2 = static_cast<double>(n) * n;
  for (int j = 0; j < n; ++j) {
    const int jm = (j + n - 1) % n, jp = (j + 1) % n;
    for (int i = 0; i < n; ++i) {
      const int im = (i + n - 1) % n, ip = (i + 1) % n;
      out[j * n + i] =
          (u[j * n + im] + u[j * n + ip] + u[jm * n + i] + u[jp * n + i] - 4.0 * u[j * n + i]) * inv_h2;
    }
  }
}

void periodic_poisson_solve(const PeriodicFFT& fft, std::span<const double> rhs, std::span<double> u) {
  const int n = fft.n();
  const int nh = n / 2 + 1;
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(fft.spectrum_size()));
  fft.forward(rhs, spec);
  const double inv_h2 = static_cast<double>(n) * n;
  const double norm = 1.0 / (static_cast<double>(n) * n);
  for (int j = 0; j < n; ++j) {
    const double sy = 4.0 * sin2(std::numbers::pi * j / n);
    for (int i = 0; i < nh; ++i) {
      const double sx = 4.0 * sin2(std::numbers::pi * i / n);
      auto& z = spec[static_cast<std::size_t>(j) * nh + i];
      if (i == 0 && j == 0)
        z = 0.0;
      else
        z *= -norm / ((sx + sy) * inv_h2);
    }
  }
  fft.backward(spec, u);
}

namespace {

std::vector<double> invert_blocks(const std::vector<Eigen::MatrixXd>& blocks, int m) {
  std::vector<double> out(blocks.size() * m * m);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    Eigen::MatrixXd inv = blocks[b].size() ? Eigen::MatrixXd(blocks[b].inverse()) : Eigen::MatrixXd::Zero(m, m);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) out[(b * m + r) * m + c] = inv(r, c);
  }
  return out;
}

}  // namespace

BlockSpectralPreconditioner BlockSpectralPreconditioner::periodic(int n, double h, const Eigen::MatrixXd& a11,
                                                                  const Eigen::MatrixXd& a22) {
  BlockSpectralPreconditioner p;
  p.periodic_ = true;
  p.n_ = n;
  p.m_ = static_cast<int>(a11.rows());
  const int m = p.m_;
  p.fft_ = std::make_shared<PeriodicFFT>(n);
  const Eigen::MatrixXd s1 = 0.5 * (a11 + a11.transpose());
  const Eigen::MatrixXd s2 = 0.5 * (a22 + a22.transpose());
  const int nh = n / 2 + 1;
  std::vector<Eigen::MatrixXd> blocks(static_cast<std::size_t>(n) * nh);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < nh; ++i) {
      if (i == 0 && j == 0) continue;  // zero block: constants are projected out
      const double sx = 4.0 * sin2(std::numbers::pi * i / n) / (h * h);
      const double sy = 4.0 * sin2(std::numbers::pi * j / n) / (h * h);
      blocks[static_cast<std::size_t>(j) * nh + i] = s1 * sx + s2 * sy;
    }
  p.inv_ = invert_blocks(blocks, m);
  return p;
}

BlockSpectralPreconditioner BlockSpectralPreconditioner::dirichlet(int n, double h, const Eigen::MatrixXd& a11,
                                                                   const Eigen::MatrixXd& a22,
                                                                   const Eigen::MatrixXd& shift) {
  BlockSpectralPreconditioner p;
  p.periodic_ = false;
  p.n_ = n;
  p.m_ = static_cast<int>(a11.rows());
  const int m = p.m_;
  p.dst_ = std::make_shared<SineTransform2D>(n);
  const Eigen::MatrixXd s1 = 0.5 * (a11 + a11.transpose());
  const Eigen::MatrixXd s2 = 0.5 * (a22 + a22.transpose());
  const Eigen::MatrixXd sh = 0.5 * (shift + shift.transpose());
  std::vector<Eigen::MatrixXd> blocks(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double sx = 4.0 * sin2(std::numbers::pi * (i + 1) / (2.0 * (n + 1))) / (h * h);
      const double sy = 4.0 * sin2(std::numbers::pi * (j + 1) / (2.0 * (n + 1))) / (h * h);
      blocks[static_cast<std::size_t>(j) * n + i] = s1 * sx + s2 * sy + sh;
    }
  p.inv_ = invert_blocks(blocks, m);
  return p;
}

void BlockSpectralPreconditioner::apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
  const int m = m_;
  const std::size_t nn = static_cast<std::size_t>(n_) * n_;
  z.resize(r.size());
  std::vector<double> comp(nn), tmp(nn);
  if (periodic_) {
    const int nh = n_ / 2 + 1;
    const std::size_t ns = static_cast<std::size_t>(n_) * nh;
    std::vector<std::vector<std::complex<double>>> spec(m, std::vector<std::complex<double>>(ns));
    for (int a = 0; a < m; ++a) {
      for (std::size_t k = 0; k < nn; ++k) comp[k] = r[k * m + a];
      fft_->forward(comp, spec[a]);
    }
    std::vector<std::complex<double>> out(m);
    for (std::size_t k = 0; k < ns; ++k) {
      const double* blk = inv_.data() + k * m * m;
      for (int a = 0; a < m; ++a) {
        std::complex<double> s = 0.0;
        for (int b = 0; b < m; ++b) s += blk[a * m + b] * spec[b][k];
        out[a] = s;
      }
      for (int a = 0; a < m; ++a) spec[a][k] = out[a];
    }
    const double norm = 1.0 / static_cast<double>(nn);
    for (int a = 0; a < m; ++a) {
      fft_->backward(spec[a], tmp);
      for (std::size_t k = 0; k < nn; ++k) z[k * m + a] = tmp[k] * norm;
    }
  } else {
    std::vector<std::vector<double>> spec(m, std::vector<double>(nn));
    for (int a = 0; a < m; ++a) {
      for (std::size_t k = 0; k < nn; ++k) comp[k] = r[k * m + a];
      dst_->apply(comp, spec[a]);
    }
    std::vector<double> out(m);
    for (std::size_t k = 0; k < nn; ++k) {
      const double* blk = inv_.data() + k * m * m;
      for (int a = 0; a < m; ++a) {
        double s = 0.0;
        for (int b = 0; b < m; ++b) s += blk[a * m + b] * spec[b][k];
        out[a] = s;
      }
      for (int a = 0; a < m; ++a) spec[a][k] = out[a];
    }
    const double norm = 1.0 / (4.0 * (n_ + 1.0) * (n_ + 1.0));
    for (int a = 0; a < m; ++a) {
      dst_->apply(spec[a], tmp);
      for (std::size_t k = 0; k < nn; ++k) z[k * m + a] = tmp[k] * norm;
    }
  }
}

}  // namespace homog2d
