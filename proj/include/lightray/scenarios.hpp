#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lightray/fields.hpp"
#include "lightray/inversion.hpp"
#include "lightray/raytransform.hpp"

namespace lightray {

/// Cone:  psi = |x - x0|^2 - c^2 |t - t0|^2 - rho^2
/// Shell: psi = (|x - x0| - R)^2 - c^2 |t - t0|^2 - rho^2
/// The exterior is psi > 0.
struct GammaSurface {
  enum class Kind { Cone, Shell };

  Kind kind = Kind::Cone;
  double t0 = 0.0;
  SpaceVec x0;
  double c = 0.5;
  double rho = 1.0;
  double radius = 1.0;  // shell only

  Eigen::Index dimension() const { return x0.size(); }
  void validate() const;
};

const char* to_string(GammaSurface::Kind kind);

inline constexpr double kOnSurfaceTolerance = 1e-8;
inline constexpr double kExteriorTolerance = 1e-9;

double psi(const GammaSurface& surface, const SpacetimeVec& z);
double psi(const GammaSurface& surface, const Event& z);

/// Half the gradient of psi at a surface point.
Covector conormal(const GammaSurface& surface, const Event& z);

struct RayMinimum {
  double s_star = 0.0;
  double psi_min = 0.0;
};

/// Minimum of psi along s -> (s, x + s theta).
RayMinimum ray_min_psi(const GammaSurface& surface, const LightRay& ray);

/// True for rays that stay in the closed exterior (psi_min >= -1e-9).
RayMask exterior_aperture(const GammaSurface& surface, const AcquisitionSet& acq);

/// Space-time cylinder [0, T] x B(center, radius).
struct Cylinder {
  double height = 1.0;
  SpaceVec center;
  double radius = 1.0;
};

/// True for rays that cross neither the bottom disc {0} x B nor the top {T} x B.
RayMask cylinder_aperture(const Cylinder& cyl, const AcquisitionSet& acq);

/// Fraction of jittered test events inside the cylinder that lie on an
/// aperture ray; for n = 2 the ray with -theta through the event must be an
/// aperture ray too, since both direction branches are needed.
double reachable_fraction(const Cylinder& cyl, const AcquisitionSet& acq, int points_per_axis, std::uint64_t seed);

struct SupportOptions {
  double delta = 0.1;
  int points_per_axis = 16;
  std::uint64_t seed = 0;
  /// Test events need psi > margin (exterior) or psi < -margin (interior).
  double margin = 0.5;
  /// Test events are drawn from this central fraction of the target box.
  double box_fraction = 0.5;
};

struct RegionRow {
  std::string region;
  Eigen::Index points = 0;
  double recovered_max = 0.0;  // from exterior-aperture data
  double reference_max = 0.0;  // from full-aperture data
  double truth_max = 0.0;      // analytic d-form
};

struct RecoveryReport {
  double exterior_residual = 0.0;
  double interior_magnitude = 0.0;
  double noise_floor = 0.0;
  double zero_field_residual = 0.0;
  double recovered_fraction = 0.0;
  Eigen::Index aperture_rays = 0;
  Eigen::Index total_rays = 0;
  bool interior_curl_nontrivial = false;
  bool passed = false;
  std::vector<RegionRow> table;
};

/// Forward-simulates f on the exterior aperture only (other rays withheld),
/// inverts, and compares the recovered d-form on exterior and interior test
/// events against the zero-field noise floor.
RecoveryReport support_experiment(const AnalyticField& f, const GammaSurface& surface, const AcquisitionSet& acq,
                                  const Quadrature& q, const Lattice& target, const SupportOptions& options = {});

}  // namespace lightray
