#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ksfno {

using Complex = std::complex<double>;

/// Real n x n samples of u(x, y) on a uniform grid. Row-major: index (i, j)
/// is the point (x = i*h, y = j*h) and lives at values[i*n + j].
class ScalarField2D {
 public:
  /// Zero field. Throws InvalidArgument for n < 4 or h <= 0.
  explicit ScalarField2D(std::size_t n, double h = 1.0);
  /// Throws InvalidArgument unless values.size() == n*n and every value is finite.
  ScalarField2D(std::size_t n, double h, std::vector<double> values);

  std::size_t n() const noexcept { return n_; }
  double h() const noexcept { return h_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double max_abs() const noexcept;

  friend bool operator==(const ScalarField2D&, const ScalarField2D&) = default;

 private:
  std::size_t n_;
  double h_;
  std::vector<double> values_;
};

/// Half spectrum of a real n x n field: n rows (k_x, negative frequencies
/// wrapped into the upper rows) by n/2 + 1 columns (k_y >= 0).
struct SpectralField2D {
  std::size_t n = 0;
  std::vector<Complex> coeffs;

  std::size_t cols() const noexcept { return n / 2 + 1; }
  Complex operator()(std::size_t kx, std::size_t ky) const { return coeffs[kx * cols() + ky]; }
  Complex& operator()(std::size_t kx, std::size_t ky) { return coeffs[kx * cols() + ky]; }
};

/// Two-sided n x n power spectrum, uncentered (DC at (0, 0)) unless it came
/// out of fftshift_center.
struct FullSpectrum2D {
  std::size_t n = 0;
  std::vector<double> power;

  double operator()(std::size_t kx, std::size_t ky) const { return power[kx * n + ky]; }
};

/// Forward DFT, unnormalized.
SpectralField2D fft2_real(const ScalarField2D& field);

/// Inverse DFT with the 1/n^2 factor. Columns k_y = 0 and k_y = n/2 are
/// projected onto their Hermitian-symmetric part first, so any half spectrum
/// maps to the real part of its implied two-sided inverse.
ScalarField2D ifft2_real(const SpectralField2D& spec, double h = 1.0);

/// |F|^2 over the full two-sided grid.
FullSpectrum2D full_power(const ScalarField2D& field);

/// Rolls both axes by n/2 so the DC entry lands at (n/2, n/2). Throws OddSize.
FullSpectrum2D fftshift_center(const FullSpectrum2D& spec);

namespace fft {

/// Raw-buffer transforms used by the operator network. `in` is n*n row-major,
/// `out` is n*(n/2+1).
void rfft2(std::size_t n, std::span<const double> in, std::span<Complex> out);

/// Inverse of rfft2 including the 1/n^2 factor. `spec` is consumed (it is
/// Hermitian-projected and then overwritten by the backend).
void irfft2(std::size_t n, std::span<Complex> spec, std::span<double> out);

}  // namespace fft

}  // namespace ksfno
