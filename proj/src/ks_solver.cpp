#include "ksfno/ks_solver.hpp"

#include <cmath>
#include <limits>

#include "ksfno/error.hpp"

namespace ksfno {
namespace {

// Value at (i, j) with zero ghosts outside [0, n).
inline double at(std::span<const double> v, std::ptrdiff_t n, std::ptrdiff_t i, std::ptrdiff_t j) {
  if (i < 0 || j < 0 || i >= n || j >= n) return 0.0;
  return v[static_cast<std::size_t>(i * n + j)];
}

std::vector<double> laplacian_values(std::span<const double> v, std::size_t n, double h) {
  const auto ni = static_cast<std::ptrdiff_t>(n);
  const double inv_h2 = 1.0 / (h * h);
  std::vector<double> out(n * n);
  for (std::ptrdiff_t i = 0; i < ni; ++i) {
    for (std::ptrdiff_t j = 0; j < ni; ++j) {
      const double s = at(v, ni, i + 1, j) + at(v, ni, i - 1, j) + at(v, ni, i, j + 1) + at(v, ni, i, j - 1) -
                       4.0 * v[static_cast<std::size_t>(i * ni + j)];
      out[static_cast<std::size_t>(i * ni + j)] = s * inv_h2;
    }
  }
  return out;
}

void check_finite(std::span<const double> values, std::size_t step) {
  for (double v : values) {
    if (!std::isfinite(v) || std::abs(v) > kBlowUpThreshold) {
      throw BlowUpError("solution left the finite range at step " + std::to_string(step), step);
    }
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (n < 4) throw Error(ErrorCode::InvalidArgument, "solver.n must be >= 4");
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::InvalidArgument, "solver.h must be > 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "solver.dt must be > 0");
  if (!(t_final > 0.0) || !std::isfinite(t_final)) {
    throw Error(ErrorCode::InvalidArgument, "solver.t_final must be > 0");
  }
  if (snapshot_stride == 0) throw Error(ErrorCode::InvalidArgument, "solver.snapshot_stride must be >= 1");
  const double q = t_final / dt;
  const double r = std::round(q);
  const double ulp = std::nextafter(r, std::numeric_limits<double>::infinity()) - r;
  if (r < 1.0 || std::abs(q - r) > ulp) {
    throw Error(ErrorCode::InvalidArgument, "solver.t_final must be an integer multiple of solver.dt");
  }
}

std::size_t SolverConfig::step_count() const {
  validate();
  return static_cast<std::size_t>(std::llround(t_final / dt));
}

std::optional<std::string> SolverConfig::stability_warning() const {
  const double bound = h * h * h * h / 10.0;
  if (dt > bound) {
    return "dt = " + std::to_string(dt) + " exceeds h^4/10 = " + std::to_string(bound) +
           "; explicit Euler may be unstable";
  }
  return std::nullopt;
}

ScalarField2D laplacian(const ScalarField2D& field) {
  return ScalarField2D(field.n(), field.h(), laplacian_values(field.values(), field.n(), field.h()));
}

ScalarField2D biharmonic(const ScalarField2D& field) {
  const auto once = laplacian_values(field.values(), field.n(), field.h());
  return ScalarField2D(field.n(), field.h(), laplacian_values(once, field.n(), field.h()));
}

ScalarField2D grad_sq(const ScalarField2D& field) {
  const std::size_t n = field.n();
  const auto ni = static_cast<std::ptrdiff_t>(n);
  const std::span<const double> v = field.values();
  const double inv_2h = 1.0 / (2.0 * field.h());
  std::vector<double> out(n * n);
  for (std::ptrdiff_t i = 0; i < ni; ++i) {
    for (std::ptrdiff_t j = 0; j < ni; ++j) {
      const double ux = (at(v, ni, i + 1, j) - at(v, ni, i - 1, j)) * inv_2h;
      const double uy = (at(v, ni, i, j + 1) - at(v, ni, i, j - 1)) * inv_2h;
      out[static_cast<std::size_t>(i * ni + j)] = ux * ux + uy * uy;
    }
  }
  return ScalarField2D(n, field.h(), std::move(out));
}

ScalarField2D rhs(const ScalarField2D& field) {
  const ScalarField2D g = grad_sq(field);
  const ScalarField2D l = laplacian(field);
  const ScalarField2D b = biharmonic(field);
  std::vector<double> out(field.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = -0.5 * g.values()[k] - l.values()[k] - b.values()[k];
  }
  return ScalarField2D(field.n(), field.h(), std::move(out));
}

ScalarField2D step_euler(const ScalarField2D& field, double dt) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "dt must be >= 0");
  const ScalarField2D r = rhs(field);
  std::vector<double> out(field.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = field.values()[k] + dt * r.values()[k];
  check_finite(out, 1);
  return ScalarField2D(field.n(), field.h(), std::move(out));
}

Trajectory evolve(const ScalarField2D& u0, const SolverConfig& config) {
  const std::size_t steps = config.step_count();
  if (u0.n() != config.n) {
    throw Error(ErrorCode::ShapeMismatch, "initial field is " + std::to_string(u0.n()) + " but solver.n is " +
                                              std::to_string(config.n));
  }
  Trajectory traj;
  traj.config = config;
  traj.times.push_back(0.0);
  traj.frames.push_back(u0);

  ScalarField2D u = u0;
  for (std::size_t s = 1; s <= steps; ++s) {
    try {
      u = step_euler(u, config.dt);
    } catch (const BlowUpError&) {
      throw BlowUpError("solution left the finite range at step " + std::to_string(s) + " (t = " +
                            std::to_string(static_cast<double>(s) * config.dt) + ")",
                        s);
    }
    if (s % config.snapshot_stride == 0 || s == steps) {
      traj.times.push_back(static_cast<double>(s) * config.dt);
      traj.frames.push_back(u);
    }
  }
  return traj;
}

}  // namespace ksfno
