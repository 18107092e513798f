#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ksfno/field.hpp"

namespace ksfno {

/// Explicit-Euler integration of
///   du/dt = -1/2 |grad u|^2 - lap u - lap^2 u
/// on an n x n grid with u = 0 on every ghost point outside the domain.
struct SolverConfig {
  std::size_t n = 128;
  double h = 1.0;
  double dt = 0.01;
  double t_final = 10.0;
  std::size_t snapshot_stride = 100;

  /// Throws InvalidArgument if dt/t_final/h are non-positive, the stride is
  /// zero, or t_final/dt is not an integer to within one ulp.
  void validate() const;
  std::size_t step_count() const;
  /// Set when dt exceeds h^4/10, the heuristic bound for the explicit scheme.
  std::optional<std::string> stability_warning() const;

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct Trajectory {
  SolverConfig config;
  std::vector<double> times;
  std::vector<ScalarField2D> frames;

  const ScalarField2D& final_frame() const { return frames.back(); }
};

/// Values above this magnitude count as a numerical explosion.
inline constexpr double kBlowUpThreshold = 1e6;

ScalarField2D laplacian(const ScalarField2D& field);
ScalarField2D biharmonic(const ScalarField2D& field);
ScalarField2D grad_sq(const ScalarField2D& field);
ScalarField2D rhs(const ScalarField2D& field);

/// u + dt * rhs(u). Throws BlowUpError (step 1) instead of returning a
/// non-finite or oversized field.
ScalarField2D step_euler(const ScalarField2D& field, double dt);

/// Stores the initial frame, every snapshot_stride-th step, and the final step.
/// Throws BlowUpError carrying the failing step index.
Trajectory evolve(const ScalarField2D& u0, const SolverConfig& config);

}  // namespace ksfno
