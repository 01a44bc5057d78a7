#include "lightray/scenarios.hpp"

#include <cmath>
#include <random>

#include "lightray/parallel.hpp"

namespace lightray {

namespace {

double shell_psi_along(const GammaSurface& g, const LightRay& ray, double s) {
  const double r = (ray.x + s * ray.theta - g.x0).norm() - g.radius;
  const double dt = s - g.t0;
  return r * r - g.c * g.c * dt * dt - g.rho * g.rho;
}

double magnitude(const Eigen::VectorXcd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

/// d-form entries in the same layout as invert_sinogram's spatial output.
Eigen::VectorXcd truth_components(const VectorField& f, const SpacetimeVec& z) {
  const DForm d = d_form(f, z);
  const Eigen::Index n = f.dimension();
  if (n == 2) {
    const Curl2 c = curl2_from_dform(d);
    Eigen::VectorXcd v(3);
    v << c.c0, c.c1, c.c2;
    return v;
  }
  const auto pairs = dform_pairs(n);
  Eigen::VectorXcd v(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t q = 0; q < pairs.size(); ++q) v(static_cast<Eigen::Index>(q)) = d(pairs[q].first, pairs[q].second);
  return v;
}

/// Jittered uniform test events over the central part of the target box.
std::vector<SpacetimeVec> test_events(const Lattice& target, const SupportOptions& options) {
  const Eigen::Index axes = target.axes();
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  const Eigen::VectorXd lo = target.origin;
  const Eigen::VectorXd hi = target.upper();
  const Eigen::VectorXd mid = 0.5 * (lo + hi);
  const Eigen::VectorXd half = 0.5 * options.box_fraction * (hi - lo);
  const int m = options.points_per_axis;

  Eigen::Index total = 1;
  for (Eigen::Index a = 0; a < axes; ++a) total *= m;
  std::vector<SpacetimeVec> events;
  events.reserve(static_cast<std::size_t>(total));
  for (Eigen::Index p = 0; p < total; ++p) {
    SpacetimeVec z(axes);
    Eigen::Index rest = p;
    for (Eigen::Index a = axes - 1; a >= 0; --a) {
      const Eigen::Index i = rest % m;
      rest /= m;
      const double step = m > 1 ? 2.0 * half(a) / (m - 1) : 0.0;
      z(a) = mid(a) - half(a) + double(i) * step;
    }
    for (Eigen::Index a = 0; a < axes; ++a) {
      const double step = m > 1 ? 2.0 * half(a) / (m - 1) : 0.0;
      z(a) += 0.5 * step * jitter(rng);
    }
    events.push_back(z);
  }
  return events;
}

double max_over(const FieldGrid& grid, const std::vector<SpacetimeVec>& events) {
  double best = 0.0;
  for (const auto& z : events) best = std::max(best, magnitude(interpolate(grid, z)));
  return best;
}

Sinogram perturbation(const Sinogram& like, const RayMask& measured, double amplitude, bool random, std::uint64_t seed) {
  Sinogram s = like;
  s.errors.setZero();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> sign(0, 1);
  for (Eigen::Index k = 0; k < s.values.cols(); ++k) {
    for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
      if (!measured(i, k)) {
        s.values(i, k) = 0.0;
        continue;
      }
      if (!random) {
        s.values(i, k) = amplitude;
      } else {
        const double re = sign(rng) ? amplitude : -amplitude;
        const double im = sign(rng) ? amplitude : -amplitude;
        s.values(i, k) = Complex(re, im) / std::sqrt(2.0);
      }
    }
  }
  return s;
}

}  // namespace

void GammaSurface::validate() const {
  require_space_dim(x0.size());
  if (!(c > 0.0 && c < 1.0)) throw Error(ErrorCode::InvalidArgument, "surface speed c must lie in (0, 1)");
  if (!(rho >= 0.0)) throw Error(ErrorCode::InvalidArgument, "surface rho must be >= 0");
  if (kind == Kind::Shell && !(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "shell radius must be positive");
}

const char* to_string(GammaSurface::Kind kind) { return kind == GammaSurface::Kind::Cone ? "cone" : "shell"; }

double psi(const GammaSurface& g, const SpacetimeVec& z) {
  if (z.size() != g.dimension() + 1) throw Error(ErrorCode::WrongDimension, "event and surface dimensions differ");
  const double dt = z(0) - g.t0;
  const double r = (z.tail(g.dimension()) - g.x0).norm();
  const double spatial = g.kind == GammaSurface::Kind::Cone ? r * r : (r - g.radius) * (r - g.radius);
  return spatial - g.c * g.c * dt * dt - g.rho * g.rho;
}

double psi(const GammaSurface& g, const Event& z) { return psi(g, z.coords()); }

Covector conormal(const GammaSurface& g, const Event& z) {
  const double value = psi(g, z);
  if (std::abs(value) > kOnSurfaceTolerance) {
    throw Error(ErrorCode::NotOnSurface, "event is not on the surface (psi = " + std::to_string(value) + ")");
  }
  const double dt = z.t - g.t0;
  const SpaceVec d = z.x - g.x0;
  const double r = d.norm();
  if (g.kind == GammaSurface::Kind::Cone) {
    if (r <= 1e-12 && std::abs(dt) <= 1e-12) throw Error(ErrorCode::DegenerateGradient, "cone vertex has no conormal");
    return Covector(-g.c * g.c * dt, d);
  }
  if (r <= 1e-12) throw Error(ErrorCode::DegenerateGradient, "shell conormal undefined at the spatial center");
  if (std::abs(r - g.radius) <= 1e-12 && std::abs(dt) <= 1e-12) {
    throw Error(ErrorCode::DegenerateGradient, "no conormal where |x - x0| = R at t = t0");
  }
  return Covector(-g.c * g.c * dt, SpaceVec(d / r * (r - g.radius)));
}

RayMinimum ray_min_psi(const GammaSurface& g, const LightRay& ray) {
  if (ray.dimension() != g.dimension()) throw Error(ErrorCode::WrongDimension, "ray and surface dimensions differ");
  const SpaceVec d = ray.x - g.x0;
  if (g.kind == GammaSurface::Kind::Cone) {
    // psi(s) = (1 - c^2) s^2 + 2 (theta.d + c^2 t0) s + |d|^2 - c^2 t0^2 - rho^2
    const double a = 1.0 - g.c * g.c;
    const double b = ray.theta.dot(d) + g.c * g.c * g.t0;
    const double s = -b / a;
    const SpacetimeVec z = (SpacetimeVec(ray.dimension() + 1) << s, ray.x + s * ray.theta).finished();
    return {s, psi(g, z)};
  }

  // Shell: psi -> +inf as |s| -> inf because c < 1. Dense bracketing, then
  // golden-section refinement around the best sample.
  const double span = 4.0 * (d.norm() + g.radius + g.rho + std::abs(g.t0) + 1.0) / (1.0 - g.c);
  const int samples = 4096;
  const double h = 2.0 * span / samples;
  int best = 0;
  double best_value = shell_psi_along(g, ray, -span);
  for (int i = 1; i <= samples; ++i) {
    const double v = shell_psi_along(g, ray, -span + i * h);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  double lo = -span + std::max(0, best - 1) * h;
  double hi = -span + std::min(samples, best + 1) * h;
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = shell_psi_along(g, ray, x1);
  double f2 = shell_psi_along(g, ray, x2);
  while (hi - lo > 1e-10) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = shell_psi_along(g, ray, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = shell_psi_along(g, ray, x2);
    }
  }
  const double s = 0.5 * (lo + hi);
  const double v = shell_psi_along(g, ray, s);
  if (best_value < v) return {-span + best * h, best_value};
  return {s, v};
}

RayMask exterior_aperture(const GammaSurface& g, const AcquisitionSet& acq) {
  g.validate();
  acq.validate();
  const std::vector<SpaceVec> thetas = acq.directions();
  RayMask mask(acq.x_grid.size(), static_cast<Eigen::Index>(thetas.size()));
  parallel_for(thetas.size(), [&](std::size_t k) {
    for (Eigen::Index i = 0; i < acq.x_grid.size(); ++i) {
      mask(i, static_cast<Eigen::Index>(k)) = ray_min_psi(g, acq.ray(i, thetas[k])).psi_min >= -kExteriorTolerance;
    }
  });
  return mask;
}

RayMask cylinder_aperture(const Cylinder& cyl, const AcquisitionSet& acq) {
  acq.validate();
  if (cyl.center.size() != acq.dimension()) throw Error(ErrorCode::WrongDimension, "cylinder and acquisition differ");
  const std::vector<SpaceVec> thetas = acq.directions();
  RayMask mask(acq.x_grid.size(), static_cast<Eigen::Index>(thetas.size()));
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    for (Eigen::Index i = 0; i < acq.x_grid.size(); ++i) {
      const SpaceVec x = acq.x_grid.point(i);
      const bool bottom = (x - cyl.center).norm() <= cyl.radius;
      const bool top = (x + cyl.height * thetas[k] - cyl.center).norm() <= cyl.radius;
      mask(i, static_cast<Eigen::Index>(k)) = !bottom && !top;
    }
  }
  return mask;
}

double reachable_fraction(const Cylinder& cyl, const AcquisitionSet& acq, int points_per_axis, std::uint64_t seed) {
  const Eigen::Index n = acq.dimension();
  const std::vector<SpaceVec> thetas = acq.directions();
  auto misses_caps = [&](const SpaceVec& x, const SpaceVec& theta) {
    return (x - cyl.center).norm() > cyl.radius && (x + cyl.height * theta - cyl.center).norm() > cyl.radius;
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> time(0.0, cyl.height);
  Eigen::Index inside = 0, reached = 0;
  Eigen::Index total = 1;
  for (Eigen::Index a = 0; a <= n; ++a) total *= points_per_axis;
  for (Eigen::Index p = 0; p < total; ++p) {
    SpaceVec y(n);
    for (Eigen::Index a = 0; a < n; ++a) y(a) = cyl.center(a) + cyl.radius * unit(rng);
    const double t = time(rng);
    if ((y - cyl.center).norm() > cyl.radius) continue;
    ++inside;
    for (const SpaceVec& theta : thetas) {
      // The ray through (t, y) with direction theta crosses t = 0 at y - t theta.
      bool ok = misses_caps(y - t * theta, theta);
      if (ok && n == 2) ok = misses_caps(y + t * theta, SpaceVec(-theta));
      if (ok) {
        ++reached;
        break;
      }
    }
  }
  return inside == 0 ? 0.0 : double(reached) / double(inside);
}

RecoveryReport support_experiment(const AnalyticField& f, const GammaSurface& surface, const AcquisitionSet& acq,
                                  const Quadrature& q, const Lattice& target, const SupportOptions& options) {
  surface.validate();
  if (surface.dimension() != f.dimension()) throw Error(ErrorCode::WrongDimension, "surface and field dimensions differ");
  if (!f.envelope()) throw Error(ErrorCode::NoEnvelope, "support experiment needs a field envelope");

  RecoveryReport report;
  const RayMask measured = exterior_aperture(surface, acq);
  report.aperture_rays = measured.count();
  report.total_rays = measured.size();

  InversionOptions inv;
  inv.delta = options.delta;

  const Sinogram exterior = make_sinogram(f, acq, q, &measured);
  const InversionResult from_exterior = invert_sinogram(exterior, target, inv);
  report.recovered_fraction = from_exterior.spectrum.recovered_fraction();

  const Sinogram full = make_sinogram(f, acq, q);
  const InversionResult reference = invert_sinogram(full, target, inv);

  const AnalyticField zero = builtin::zero(f.dimension(), f.envelope());
  const InversionResult zero_run = invert_sinogram(make_sinogram(zero, acq, q, &measured), target, inv);
  const InversionResult constant_run =
      invert_sinogram(perturbation(exterior, measured, q.abs_tol, false, options.seed), target, inv);
  const InversionResult random_run =
      invert_sinogram(perturbation(exterior, measured, q.abs_tol, true, options.seed), target, inv);

  std::vector<SpacetimeVec> ext_events, int_events;
  for (const auto& z : test_events(target, options)) {
    const double v = psi(surface, z);
    if (v > options.margin) ext_events.push_back(z);
    if (v < -options.margin) int_events.push_back(z);
  }

  report.zero_field_residual = max_over(zero_run.spatial, ext_events);
  report.noise_floor = report.zero_field_residual +
                       std::max(max_over(constant_run.spatial, ext_events), max_over(random_run.spatial, ext_events));

  auto row = [&](const std::string& name, const std::vector<SpacetimeVec>& events) {
    RegionRow r{name, static_cast<Eigen::Index>(events.size()), max_over(from_exterior.spatial, events),
                max_over(reference.spatial, events), 0.0};
    for (const auto& z : events) r.truth_max = std::max(r.truth_max, magnitude(truth_components(f, z)));
    return r;
  };
  report.table.push_back(row("exterior", ext_events));
  report.table.push_back(row("interior", int_events));

  report.exterior_residual = report.table[0].recovered_max;
  report.interior_magnitude = report.table[1].reference_max;
  report.interior_curl_nontrivial = report.table[1].truth_max > 100.0 * report.noise_floor;
  report.passed = report.exterior_residual <= 10.0 * report.noise_floor &&
                  (!report.interior_curl_nontrivial || report.interior_magnitude >= 100.0 * report.noise_floor);
  return report;
}

}  // namespace lightray
