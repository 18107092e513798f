#include "ksfno/field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "ksfno/error.hpp"

namespace ksfno {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::OddSize: return "ODD_SIZE";
    case ErrorCode::BlowUp: return "BLOW_UP";
    case ErrorCode::SplitTooLarge: return "SPLIT_TOO_LARGE";
    case ErrorCode::Io: return "IO";
    case ErrorCode::BadMagic: return "BAD_MAGIC";
    case ErrorCode::VersionMismatch: return "VERSION_MISMATCH";
    case ErrorCode::ChecksumMismatch: return "CHECKSUM_MISMATCH";
    case ErrorCode::ModesExceedGrid: return "MODES_EXCEED_GRID";
    case ErrorCode::ZeroTarget: return "ZERO_TARGET";
    case ErrorCode::BinMismatch: return "BIN_MISMATCH";
    case ErrorCode::ShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::MissingReport: return "MISSING_REPORT";
  }
  return "UNKNOWN";
}

ScalarField2D::ScalarField2D(std::size_t n, double h) : ScalarField2D(n, h, std::vector<double>(n * n, 0.0)) {}

ScalarField2D::ScalarField2D(std::size_t n, double h, std::vector<double> values)
    : n_(n), h_(h), values_(std::move(values)) {
  if (n_ < 4) throw Error(ErrorCode::InvalidArgument, "grid size must be >= 4, got " + std::to_string(n_));
  if (!(h_ > 0.0) || !std::isfinite(h_)) throw Error(ErrorCode::InvalidArgument, "grid spacing must be > 0");
  if (values_.size() != n_ * n_) {
    throw Error(ErrorCode::InvalidArgument, "expected " + std::to_string(n_ * n_) + " values, got " +
                                                std::to_string(values_.size()));
  }
  if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::InvalidArgument, "field contains non-finite values");
  }
}

double ScalarField2D::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

namespace fft {
namespace {

struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// Planning is not thread-safe in FFTW; execution through the new-array
// interface is. Plans live for the lifetime of the process.
const Plans& plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, Plans> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  const int ni = static_cast<int>(n);
  double* real = fftw_alloc_real(n * n);
  fftw_complex* cplx = fftw_alloc_complex(n * (n / 2 + 1));
  Plans p;
  p.forward = fftw_plan_dft_r2c_2d(ni, ni, real, cplx, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.inverse = fftw_plan_dft_c2r_2d(ni, ni, cplx, real, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(real);
  fftw_free(cplx);
  return cache.emplace(n, p).first->second;
}

void hermitian_project_column(std::size_t n, std::span<Complex> spec, std::size_t col) {
  const std::size_t cols = n / 2 + 1;
  for (std::size_t kx = 0; kx <= n / 2; ++kx) {
    const std::size_t mirror = (n - kx) % n;
    Complex& a = spec[kx * cols + col];
    Complex& b = spec[mirror * cols + col];
    if (mirror == kx) {
      a = Complex(a.real(), 0.0);
    } else {
      const Complex s = 0.5 * (a + std::conj(b));
      a = s;
      b = std::conj(s);
    }
  }
}

}  // namespace

void rfft2(std::size_t n, std::span<const double> in, std::span<Complex> out) {
  const Plans& p = plans_for(n);
  // FFTW's r2c does not modify its input but the signature is non-const.
  fftw_execute_dft_r2c(p.forward, const_cast<double*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
}

void irfft2(std::size_t n, std::span<Complex> spec, std::span<double> out) {
  hermitian_project_column(n, spec, 0);
  if (n % 2 == 0) hermitian_project_column(n, spec, n / 2);
  const Plans& p = plans_for(n);
  fftw_execute_dft_c2r(p.inverse, reinterpret_cast<fftw_complex*>(spec.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n * n);
  for (double& v : out) v *= scale;
}

}  // namespace fft

SpectralField2D fft2_real(const ScalarField2D& field) {
  SpectralField2D spec;
  spec.n = field.n();
  spec.coeffs.assign(spec.n * spec.cols(), Complex{});
  fft::rfft2(spec.n, field.values(), spec.coeffs);
  return spec;
}

ScalarField2D ifft2_real(const SpectralField2D& spec, double h) {
  if (spec.coeffs.size() != spec.n * spec.cols()) {
    throw Error(ErrorCode::InvalidArgument, "half spectrum has wrong coefficient count");
  }
  std::vector<Complex> scratch = spec.coeffs;
  std::vector<double> out(spec.n * spec.n);
  fft::irfft2(spec.n, scratch, out);
  return ScalarField2D(spec.n, h, std::move(out));
}

FullSpectrum2D full_power(const ScalarField2D& field) {
  const SpectralField2D half = fft2_real(field);
  const std::size_t n = half.n;
  const std::size_t cols = half.cols();
  FullSpectrum2D full{n, std::vector<double>(n * n)};
  for (std::size_t kx = 0; kx < n; ++kx) {
    for (std::size_t ky = 0; ky < n; ++ky) {
      // Upper columns follow from conjugate symmetry F(-k) = conj(F(k)).
      const Complex c = ky < cols ? half(kx, ky) : half((n - kx) % n, n - ky);
      full.power[kx * n + ky] = std::norm(c);
    }
  }
  return full;
}

FullSpectrum2D fftshift_center(const FullSpectrum2D& spec) {
  const std::size_t n = spec.n;
  if (n % 2 != 0) throw Error(ErrorCode::OddSize, "fftshift_center needs an even grid, got " + std::to_string(n));
  const std::size_t half = n / 2;
  FullSpectrum2D out{n, std::vector<double>(n * n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out.power[((i + half) % n) * n + (j + half) % n] = spec.power[i * n + j];
    }
  }
  return out;
}

}  // namespace ksfno
