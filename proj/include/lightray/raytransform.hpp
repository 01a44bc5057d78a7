#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "lightray/fields.hpp"
#include "lightray/grid.hpp"

namespace lightray {

/// Closed s-interval; `empty` marks a ray that misses the envelope.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty = true;

  double length() const { return empty ? 0.0 : hi - lo; }
};

/// Set of s with |x + s theta| <= C|s| + R. It is the union of at most two
/// intervals (one per sign of s); `hull` spans both.
struct RaySupport {
  std::vector<Interval> pieces;
  Interval hull() const;
};

struct Quadrature {
  enum class Rule { Adaptive, CompositeSimpson };

  Rule rule = Rule::Adaptive;
  double abs_tol = 1e-9;
  long max_evals = 100000;
  /// Panel count per interval for CompositeSimpson, initial panels for Adaptive.
  int panels = 16;
  /// Adaptive only: initial panels are also at most this wide, so that narrow
  /// features cannot hide between the first Simpson nodes of a long interval.
  double max_panel_width = 0.25;

  int initial_panels(double length) const;

  void validate() const;
};

struct QuadratureResult {
  Complex value{0.0};
  double error = 0.0;
  long evals = 0;
  Interval interval;
};

RaySupport ray_support(const Envelope& envelope, const LightRay& ray);
Interval ray_interval(const VectorField& f, const LightRay& ray);

QuadratureResult lightray_transform_detailed(const VectorField& f, const LightRay& ray, const Quadrature& q);
/// L f(x, theta) = int f(s, x + s theta) . (1, theta) ds.
Complex lightray_transform(const VectorField& f, const LightRay& ray, const Quadrature& q);

/// (L f(x + h v, theta) - L f(x - h v, theta)) / (2h). Both transforms use one
/// quadrature mesh, refined adaptively on the unshifted ray, so mesh
/// decisions cannot differ between the two shifted rays.
Complex directional_transform_fd(const VectorField& f, const LightRay& ray, const SpaceVec& v, double h,
                                 const Quadrature& q);

/// int f~_v(s, x + s theta) . (1, theta) ds.
Complex directional_transform_exact(const VectorField& f, const LightRay& ray, const SpaceVec& v,
                                    const Quadrature& q);

/// Regular block of directions in spherical parameters: one angle for n = 2
/// (theta = (sin a, cos a)), (a, b) for n = 3. An axis whose half width is at
/// least pi is sampled periodically without the duplicate endpoint.
struct DirectionPatch {
  Eigen::VectorXd center;
  Eigen::VectorXd half_width;
  std::vector<int> samples;

  Eigen::Index parameter_count() const { return center.size(); }
  Eigen::Index size() const;
  bool periodic(Eigen::Index axis) const;
  double step(Eigen::Index axis) const;
  double parameter_value(Eigen::Index axis, int j) const;
  Eigen::VectorXd parameters(Eigen::Index flat) const;
  SpaceVec direction(Eigen::Index flat) const;
  void validate(Eigen::Index n) const;
};

struct AcquisitionSet {
  Lattice x_grid;
  std::vector<DirectionPatch> patches;

  Eigen::Index dimension() const { return x_grid.axes(); }
  Eigen::Index direction_count() const;
  /// Patch-major, then row-major over the patch's sample grid.
  std::vector<SpaceVec> directions() const;
  std::pair<std::size_t, Eigen::Index> locate(Eigen::Index direction) const;
  LightRay ray(Eigen::Index x_index, const SpaceVec& theta) const;
  void validate() const;
};

struct Sinogram {
  AcquisitionSet acquisition;
  Eigen::MatrixXcd values;  // (x index, direction index)
  Eigen::MatrixXd errors;
  std::optional<Envelope> envelope;
  Quadrature quadrature;
};

/// Ray mask with the sinogram's shape; false entries are withheld (left zero).
using RayMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

Sinogram make_sinogram(const VectorField& f, const AcquisitionSet& acq, const Quadrature& q,
                       const RayMask* measured = nullptr);

}  // namespace lightray
