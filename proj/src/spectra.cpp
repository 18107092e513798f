#include "ksfno/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ksfno/error.hpp"

namespace ksfno {
namespace {

void require_even(std::size_t n) {
  if (n % 2 != 0) throw Error(ErrorCode::OddSize, "grid size must be even, got " + std::to_string(n));
}

void require_same_bins(const RadialSpectrum& a, const RadialSpectrum& b) {
  if (a.n_bins != b.n_bins || a.bin_edges != b.bin_edges || a.power.size() != b.power.size()) {
    throw Error(ErrorCode::BinMismatch, "radial spectra use different binnings");
  }
}

}  // namespace

FullSpectrum2D log_power_2d(const ScalarField2D& field) {
  require_even(field.n());
  FullSpectrum2D out = fftshift_center(full_power(field));
  for (double& v : out.power) v = std::log(v + kLogFloor);
  return out;
}

std::vector<double> radial_wavenumber(std::size_t n) {
  require_even(n);
  const auto c = static_cast<double>(n / 2);
  std::vector<double> r(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) r[i * n + j] = std::hypot(static_cast<double>(i) - c, static_cast<double>(j) - c);
  }
  return r;
}

double radial_max(std::size_t n) { return std::sqrt(2.0) * static_cast<double>(n / 2) * (1.0 + 1e-9); }

RadialSpectrum radial_power(const ScalarField2D& field, std::size_t n_bins) {
  const std::size_t n = field.n();
  require_even(n);
  if (n_bins == 0) throw Error(ErrorCode::InvalidArgument, "eval.n_bins must be >= 1");

  const FullSpectrum2D shifted = fftshift_center(full_power(field));
  const std::vector<double> radius = radial_wavenumber(n);
  const double r_max = radial_max(n);
  const double width = r_max / static_cast<double>(n_bins);

  RadialSpectrum rs;
  rs.n_bins = n_bins;
  rs.bin_edges.resize(n_bins + 1);
  for (std::size_t b = 0; b <= n_bins; ++b) rs.bin_edges[b] = static_cast<double>(b) * width;
  rs.power.assign(n_bins, 0.0);
  rs.counts.assign(n_bins, 0);
  for (std::size_t k = 0; k < n * n; ++k) {
    const auto b = std::min(static_cast<std::size_t>(radius[k] / width), n_bins - 1);
    rs.power[b] += shifted.power[k];
    ++rs.counts[b];
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (rs.counts[b] > 0) rs.power[b] /= static_cast<double>(rs.counts[b]);
  }
  return rs;
}

std::vector<double> error_power(const RadialSpectrum& pred, const RadialSpectrum& gt) {
  require_same_bins(pred, gt);
  std::vector<double> out(gt.n_bins);
  for (std::size_t b = 0; b < gt.n_bins; ++b) out[b] = std::abs(pred.power[b] - gt.power[b]);
  return out;
}

std::vector<std::optional<double>> normalized_error_power(const RadialSpectrum& pred, const RadialSpectrum& gt) {
  require_same_bins(pred, gt);
  std::vector<std::optional<double>> out(gt.n_bins);
  for (std::size_t b = 0; b < gt.n_bins; ++b) {
    if (gt.power[b] != 0.0) out[b] = std::abs((pred.power[b] - gt.power[b]) / gt.power[b]);
  }
  return out;
}

bool broadband_check(const RadialSpectrum& rs, double threshold_fraction) {
  if (rs.power.empty()) return false;
  const double peak = *std::max_element(rs.power.begin(), rs.power.end());
  if (!(peak > 0.0)) return false;
  const auto active =
      std::count_if(rs.power.begin(), rs.power.end(), [peak](double p) { return p > 1e-6 * peak; });
  return static_cast<double>(active) >= threshold_fraction * static_cast<double>(rs.power.size());
}

RadialSpectrum average_spectra(const std::vector<RadialSpectrum>& spectra) {
  if (spectra.empty()) throw Error(ErrorCode::InvalidArgument, "no spectra to average");
  RadialSpectrum out = spectra.front();
  for (std::size_t s = 1; s < spectra.size(); ++s) {
    require_same_bins(out, spectra[s]);
    for (std::size_t b = 0; b < out.n_bins; ++b) out.power[b] += spectra[s].power[b];
  }
  for (double& p : out.power) p /= static_cast<double>(spectra.size());
  return out;
}

std::optional<std::size_t> first_bin_exceeding(const std::vector<std::optional<double>>& normalized,
                                               double threshold) {
  for (std::size_t b = 0; b < normalized.size(); ++b) {
    if (normalized[b] && *normalized[b] > threshold) return b;
  }
  return std::nullopt;
}

}  // namespace ksfno
