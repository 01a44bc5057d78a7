#include "lightray/raytransform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lightray/parallel.hpp"

namespace lightray {

namespace {

constexpr int kMinDepth = 1;
constexpr int kMaxDepth = 40;

void charge(long& evals, long count, long budget) {
  evals += count;
  if (evals > budget) {
    throw Error(ErrorCode::QuadratureBudgetExceeded,
                "quadrature needed more than " + std::to_string(budget) + " integrand evaluations");
  }
}

/// Adaptive Simpson with one Richardson step per accepted panel.
template <typename F>
class AdaptiveSimpson {
 public:
  AdaptiveSimpson(const F& f, long budget, std::vector<std::pair<double, double>>* leaves)
      : f_(f), budget_(budget), leaves_(leaves) {}

  Complex integrate(double a, double b, double tol, int panels) {
    const double width = (b - a) / panels;
    Complex total(0.0);
    Complex fa = f_(a);
    charge(evals_, 1, budget_);
    for (int p = 0; p < panels; ++p) {
      const double lo = a + p * width;
      const double hi = (p + 1 == panels) ? b : lo + width;
      const double mid = 0.5 * (lo + hi);
      const Complex fm = f_(mid);
      const Complex fb = f_(hi);
      charge(evals_, 2, budget_);
      const Complex whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
      total += recurse(lo, hi, fa, fm, fb, whole, tol / panels, 0);
      fa = fb;
    }
    return total;
  }

  double error() const { return error_; }
  long evals() const { return evals_; }

 private:
  Complex recurse(double a, double b, Complex fa, Complex fm, Complex fb, Complex whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const Complex flm = f_(lm);
    const Complex frm = f_(rm);
    charge(evals_, 2, budget_);
    const Complex left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const Complex right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const Complex delta = left + right - whole;
    if ((depth >= kMinDepth && std::abs(delta) <= 15.0 * tol) || depth >= kMaxDepth) {
      error_ += std::abs(delta) / 15.0;
      if (leaves_) leaves_->emplace_back(a, b);
      return left + right + delta / 15.0;
    }
    return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }

  const F& f_;
  long budget_;
  std::vector<std::pair<double, double>>* leaves_;
  double error_ = 0.0;
  long evals_ = 0;
};

/// Composite Simpson with `panels` (even) panels; the error estimate compares
/// against the rule on every other node.
template <typename F>
Complex composite_simpson(const F& f, double a, double b, int panels, long budget, long& evals, double& error) {
  const int p = std::max(2, panels + (panels % 2));
  const int nodes = 2 * p + 1;
  const double h = (b - a) / (2 * p);
  charge(evals, nodes, budget);
  Complex fine(0.0), coarse(0.0);
  for (int k = 0; k < nodes; ++k) {
    const Complex v = f(k + 1 == nodes ? b : a + k * h);
    const double wf = (k == 0 || k == nodes - 1) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    fine += wf * v;
    if (k % 2 == 0) {
      const int j = k / 2;
      const double wc = (j == 0 || j == p) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
      coarse += wc * v;
    }
  }
  fine *= h / 3.0;
  coarse *= 2.0 * h / 3.0;
  error += std::abs(fine - coarse) / 15.0;
  return fine;
}

template <typename F>
QuadratureResult integrate_support(const F& integrand, const RaySupport& support, const Quadrature& q) {
  QuadratureResult result;
  result.interval = support.hull();
  if (result.interval.empty) return result;
  double total_length = 0.0;
  for (const auto& piece : support.pieces) total_length += piece.length();
  if (!(total_length > 0.0)) return result;

  for (const auto& piece : support.pieces) {
    if (!(piece.length() > 0.0)) continue;
    const double share = q.abs_tol * piece.length() / total_length;
    if (q.rule == Quadrature::Rule::Adaptive) {
      AdaptiveSimpson<F> rule(integrand, q.max_evals - result.evals, nullptr);
      result.value += rule.integrate(piece.lo, piece.hi, share, q.initial_panels(piece.length()));
      result.error += rule.error();
      result.evals += rule.evals();
    } else {
      result.value += composite_simpson(integrand, piece.lo, piece.hi, q.panels, q.max_evals, result.evals,
                                        result.error);
    }
  }
  return result;
}

RaySupport support_of(const VectorField& f, const LightRay& ray) {
  if (!f.envelope()) throw Error(ErrorCode::NoEnvelope, "ray integration needs a declared support envelope");
  if (ray.dimension() != f.dimension()) throw Error(ErrorCode::WrongDimension, "ray and field dimensions differ");
  return ray_support(*f.envelope(), ray);
}

Complex contract(const FieldValue& value, const LightRay& ray) {
  Complex c = value(0);
  for (Eigen::Index a = 0; a < ray.dimension(); ++a) c += value(a + 1) * ray.theta(a);
  return c;
}

SpacetimeVec point_on(const LightRay& ray, double s) {
  SpacetimeVec z(ray.dimension() + 1);
  z(0) = s;
  z.tail(ray.dimension()) = ray.x + s * ray.theta;
  return z;
}

}  // namespace

Interval RaySupport::hull() const {
  Interval h;
  for (const auto& p : pieces) {
    if (p.empty) continue;
    if (h.empty) {
      h = p;
    } else {
      h.lo = std::min(h.lo, p.lo);
      h.hi = std::max(h.hi, p.hi);
    }
  }
  return h;
}

void Quadrature::validate() const {
  if (!(abs_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "quadrature abs_tol must be positive");
  if (max_evals < 16) throw Error(ErrorCode::InvalidArgument, "quadrature max_evals must be at least 16");
  if (panels < 1) throw Error(ErrorCode::InvalidArgument, "quadrature panels must be positive");
  if (!(max_panel_width > 0.0)) throw Error(ErrorCode::InvalidArgument, "quadrature max_panel_width must be positive");
}

int Quadrature::initial_panels(double length) const {
  const double by_width = std::ceil(length / max_panel_width);
  return std::max(panels, static_cast<int>(std::min(by_width, 1e6)));
}

RaySupport ray_support(const Envelope& envelope, const LightRay& ray) {
  const double c = envelope.speed;
  const double r = envelope.radius;
  const double a = 1.0 - c * c;
  const double xt = ray.x.dot(ray.theta);
  const double c0 = ray.x.squaredNorm() - r * r;

  // On each half-line |s| = +-s, so |x + s theta|^2 <= (C|s| + R)^2 becomes
  // a (1 - C^2) s^2 + 2 (x.theta -+ C R) s + |x|^2 - R^2 <= 0.
  RaySupport support;
  for (int sign : {-1, 1}) {
    const double b = 2.0 * (xt - sign * c * r);
    const double disc = b * b - 4.0 * a * c0;
    if (disc < 0.0) continue;
    const double root = std::sqrt(disc);
    // Stable pair of roots.
    const double qv = -0.5 * (b + std::copysign(root, b));
    double r1 = qv / a;
    double r2 = (qv != 0.0) ? c0 / qv : -r1;
    if (r1 > r2) std::swap(r1, r2);
    Interval piece;
    piece.lo = sign > 0 ? std::max(r1, 0.0) : r1;
    piece.hi = sign > 0 ? r2 : std::min(r2, 0.0);
    piece.empty = piece.lo > piece.hi;
    if (!piece.empty) support.pieces.push_back(piece);
  }
  if (support.pieces.size() == 2) {
    Interval& neg = support.pieces[0];
    const Interval& pos = support.pieces[1];
    if (neg.hi >= pos.lo) {
      neg.hi = std::max(neg.hi, pos.hi);
      support.pieces.pop_back();
    }
  }
  return support;
}

Interval ray_interval(const VectorField& f, const LightRay& ray) { return support_of(f, ray).hull(); }

QuadratureResult lightray_transform_detailed(const VectorField& f, const LightRay& ray, const Quadrature& q) {
  const RaySupport support = support_of(f, ray);
  auto integrand = [&](double s) { return contract(f.value(point_on(ray, s)), ray); };
  return integrate_support(integrand, support, q);
}

Complex lightray_transform(const VectorField& f, const LightRay& ray, const Quadrature& q) {
  return lightray_transform_detailed(f, ray, q).value;
}

Complex directional_transform_fd(const VectorField& f, const LightRay& ray, const SpaceVec& v, double h,
                                 const Quadrature& q) {
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
  if (v.size() != ray.dimension()) throw Error(ErrorCode::WrongDimension, "v must have n components");
  const LightRay plus(ray.x + h * v, ray.theta);
  const LightRay minus(ray.x - h * v, ray.theta);

  RaySupport joint;
  for (const LightRay* r : {&ray, &plus, &minus}) {
    const Interval i = support_of(f, *r).hull();
    if (!i.empty) joint.pieces.push_back(i);
  }
  const Interval span = joint.hull();
  if (span.empty || !(span.length() > 0.0)) return 0.0;

  auto central = [&](double s) { return contract(f.value(point_on(ray, s)), ray); };
  auto difference = [&](double s) {
    return contract(f.value(point_on(plus, s)), plus) - contract(f.value(point_on(minus, s)), minus);
  };

  if (q.rule == Quadrature::Rule::CompositeSimpson) {
    long evals = 0;
    double error = 0.0;
    return composite_simpson(difference, span.lo, span.hi, q.panels, q.max_evals, evals, error) / (2.0 * h);
  }

  std::vector<std::pair<double, double>> leaves;
  AdaptiveSimpson<decltype(central)> mesh(central, q.max_evals, &leaves);
  mesh.integrate(span.lo, span.hi, q.abs_tol, q.initial_panels(span.length()));

  Complex total(0.0);
  for (const auto& [a, b] : leaves) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const Complex fa = difference(a), flm = difference(lm), fm = difference(m), frm = difference(rm),
                  fb = difference(b);
    const Complex whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const Complex halves = (m - a) / 6.0 * (fa + 4.0 * flm + fm) + (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    total += halves + (halves - whole) / 15.0;
  }
  return total / (2.0 * h);
}

Complex directional_transform_exact(const VectorField& f, const LightRay& ray, const SpaceVec& v,
                                    const Quadrature& q) {
  if (v.size() != ray.dimension()) throw Error(ErrorCode::WrongDimension, "v must have n components");
  const RaySupport support = support_of(f, ray);
  auto integrand = [&](double s) { return contract(tilde_f(f, point_on(ray, s), v), ray); };
  return integrate_support(integrand, support, q).value;
}

Eigen::Index DirectionPatch::size() const {
  Eigen::Index total = 1;
  for (int s : samples) total *= s;
  return total;
}

bool DirectionPatch::periodic(Eigen::Index axis) const {
  return half_width(axis) >= std::numbers::pi - 1e-12;
}

double DirectionPatch::step(Eigen::Index axis) const {
  const int count = samples[static_cast<std::size_t>(axis)];
  if (periodic(axis)) return 2.0 * std::numbers::pi / count;
  return count > 1 ? 2.0 * half_width(axis) / (count - 1) : 0.0;
}

double DirectionPatch::parameter_value(Eigen::Index axis, int j) const {
  const int count = samples[static_cast<std::size_t>(axis)];
  if (periodic(axis)) return center(axis) - std::numbers::pi + j * step(axis);
  if (count == 1) return center(axis);
  return center(axis) - half_width(axis) + j * step(axis);
}

Eigen::VectorXd DirectionPatch::parameters(Eigen::Index flat) const {
  const Eigen::Index k = parameter_count();
  Eigen::VectorXd p(k);
  for (Eigen::Index a = k - 1; a >= 0; --a) {
    const int count = samples[static_cast<std::size_t>(a)];
    p(a) = parameter_value(a, static_cast<int>(flat % count));
    flat /= count;
  }
  return p;
}

SpaceVec DirectionPatch::direction(Eigen::Index flat) const { return spherical_theta(parameters(flat)); }

void DirectionPatch::validate(Eigen::Index n) const {
  if (center.size() != n - 1 || half_width.size() != n - 1 || static_cast<Eigen::Index>(samples.size()) != n - 1) {
    throw Error(ErrorCode::InvalidArgument, "direction patch needs " + std::to_string(n - 1) + " parameters");
  }
  for (Eigen::Index a = 0; a < n - 1; ++a) {
    if (!(half_width(a) >= 0.0) || samples[static_cast<std::size_t>(a)] < 1) {
      throw Error(ErrorCode::InvalidArgument, "direction patch widths must be >= 0 with >= 1 sample");
    }
  }
}

Eigen::Index AcquisitionSet::direction_count() const {
  Eigen::Index total = 0;
  for (const auto& p : patches) total += p.size();
  return total;
}

std::vector<SpaceVec> AcquisitionSet::directions() const {
  std::vector<SpaceVec> out;
  out.reserve(static_cast<std::size_t>(direction_count()));
  for (const auto& p : patches) {
    for (Eigen::Index j = 0; j < p.size(); ++j) out.push_back(p.direction(j));
  }
  return out;
}

std::pair<std::size_t, Eigen::Index> AcquisitionSet::locate(Eigen::Index direction) const {
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (direction < patches[i].size()) return {i, direction};
    direction -= patches[i].size();
  }
  throw Error(ErrorCode::InvalidArgument, "direction index out of range");
}

LightRay AcquisitionSet::ray(Eigen::Index x_index, const SpaceVec& theta) const {
  return LightRay(x_grid.point(x_index), theta);
}

void AcquisitionSet::validate() const {
  x_grid.validate();
  require_space_dim(dimension());
  if (patches.empty()) throw Error(ErrorCode::InvalidArgument, "acquisition needs at least one direction patch");
  for (const auto& p : patches) p.validate(dimension());
}

Sinogram make_sinogram(const VectorField& f, const AcquisitionSet& acq, const Quadrature& q, const RayMask* measured) {
  acq.validate();
  q.validate();
  if (acq.dimension() != f.dimension()) throw Error(ErrorCode::WrongDimension, "acquisition and field dimensions differ");
  if (!f.envelope()) throw Error(ErrorCode::NoEnvelope, "sinograms need a field with a support envelope");

  const std::vector<SpaceVec> thetas = acq.directions();
  const Eigen::Index nx = acq.x_grid.size();
  const auto nd = static_cast<Eigen::Index>(thetas.size());
  if (measured && (measured->rows() != nx || measured->cols() != nd)) {
    throw Error(ErrorCode::InvalidArgument, "ray mask shape does not match the acquisition");
  }

  // Coincident directions (for example the pole of an (a, b) chart) share one
  // column of work when every ray is measured.
  std::vector<Eigen::Index> representative(static_cast<std::size_t>(nd));
  for (Eigen::Index k = 0; k < nd; ++k) {
    representative[k] = k;
    if (measured) continue;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (representative[j] == j && (thetas[k] - thetas[j]).norm() <= 1e-14) {
        representative[k] = j;
        break;
      }
    }
  }

  Sinogram sino{acq, Eigen::MatrixXcd::Zero(nx, nd), Eigen::MatrixXd::Zero(nx, nd), f.envelope(), q};
  std::vector<std::vector<Eigen::Index>> failures(static_cast<std::size_t>(nd));

  parallel_for(static_cast<std::size_t>(nd), [&](std::size_t kk) {
    const auto k = static_cast<Eigen::Index>(kk);
    if (representative[kk] != k) return;
    for (Eigen::Index i = 0; i < nx; ++i) {
      if (measured && !(*measured)(i, k)) continue;
      try {
        const QuadratureResult r = lightray_transform_detailed(f, acq.ray(i, thetas[kk]), q);
        sino.values(i, k) = r.value;
        sino.errors(i, k) = r.error;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::QuadratureBudgetExceeded) throw;
        failures[kk].push_back(i);
      }
    }
  });

  for (Eigen::Index k = 0; k < nd; ++k) {
    if (representative[k] != k) {
      sino.values.col(k) = sino.values.col(representative[k]);
      sino.errors.col(k) = sino.errors.col(representative[k]);
      failures[k] = failures[representative[k]];
    }
  }

  std::size_t failed = 0;
  std::ostringstream where;
  for (Eigen::Index k = 0; k < nd; ++k) {
    for (Eigen::Index i : failures[k]) {
      if (failed < 8) where << " (" << i << "," << k << ")";
      ++failed;
    }
  }
  if (failed > 0) {
    throw Error(ErrorCode::QuadratureBudgetExceeded,
                std::to_string(failed) + " rays exceeded the evaluation budget; (x, theta) indices:" + where.str());
  }
  return sino;
}

}  // namespace lightray
