#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ksfno/field.hpp"

namespace ksfno {

/// Power averaged over annuli of the DC-centered spectrum.
struct RadialSpectrum {
  std::size_t n_bins = 0;
  std::vector<double> bin_edges;  // n_bins + 1 uniform edges from 0 to r_max
  std::vector<double> power;      // mean |F|^2 per bin, 0 for empty bins
  std::vector<std::size_t> counts;

  double bin_center(std::size_t b) const { return 0.5 * (bin_edges[b] + bin_edges[b + 1]); }
};

/// Floor added before taking the log of the power spectrum.
inline constexpr double kLogFloor = 1e-12;

/// log(P + 1e-12), DC at (n/2, n/2). Entries are logarithms, so negative
/// values are expected. Throws OddSize.
FullSpectrum2D log_power_2d(const ScalarField2D& field);

/// Distance of each entry from (n/2, n/2). Throws OddSize.
std::vector<double> radial_wavenumber(std::size_t n);

/// Outer radius of the binning range: the corner distance sqrt(2)*n/2,
/// nudged by a relative 1e-9 so the corner pixel falls inside the last bin.
double radial_max(std::size_t n);

/// Bin b covers [b*w, (b+1)*w) with w = radial_max(n)/n_bins. Throws OddSize,
/// or InvalidArgument for n_bins == 0.
RadialSpectrum radial_power(const ScalarField2D& field, std::size_t n_bins);

/// |pred - gt| per bin. Throws BinMismatch.
std::vector<double> error_power(const RadialSpectrum& pred, const RadialSpectrum& gt);

/// |pred - gt| / gt per bin; nullopt (UNDEFINED) where gt is zero. Throws BinMismatch.
std::vector<std::optional<double>> normalized_error_power(const RadialSpectrum& pred, const RadialSpectrum& gt);

/// True iff at least `threshold_fraction` of the bins carry more than 1e-6
/// of the strongest bin's power.
bool broadband_check(const RadialSpectrum& rs, double threshold_fraction = 0.9);

/// Bin-wise mean of several spectra sharing one binning. Throws BinMismatch.
RadialSpectrum average_spectra(const std::vector<RadialSpectrum>& spectra);

/// First bin whose normalized error exceeds `threshold`, skipping UNDEFINED bins.
std::optional<std::size_t> first_bin_exceeding(const std::vector<std::optional<double>>& normalized,
                                               double threshold = 1.0);

}  // namespace ksfno
