#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lightray/gausspoly.hpp"
#include "lightray/grid.hpp"
#include "lightray/minkowski.hpp"

namespace lightray {

using FieldValue = SpacetimeVector<Complex>;
/// jacobian(i, j) = d f_i / d z_j
using FieldJacobian = SpacetimeMatrix<Complex>;
/// Antisymmetric d-form matrix D(i, j) = d_j f_i - d_i f_j.
using DForm = SpacetimeMatrix<Complex>;

/// Support envelope |x| <= speed * |t| + radius with 0 <= speed < 1.
struct Envelope {
  double speed = 0.0;
  double radius = 1.0;

  void validate() const;
  bool contains(const SpacetimeVec& z) const;
  /// Largest |x| reached for |t| <= t_max.
  double spatial_extent(double t_max) const { return speed * t_max + radius; }
};

/// Hull of two envelopes (contains both).
Envelope envelope_hull(const Envelope& a, const Envelope& b);

/// A (1+n)-component complex field on R^{1+n}. value() and jacobian() are
/// zero outside the declared envelope; derived classes supply the raw rules.
class VectorField {
 public:
  VectorField(Eigen::Index n, std::optional<Envelope> envelope);
  virtual ~VectorField() = default;

  Eigen::Index dimension() const { return n_; }
  Eigen::Index components() const { return n_ + 1; }
  const std::optional<Envelope>& envelope() const { return envelope_; }

  FieldValue value(const SpacetimeVec& z) const;
  FieldJacobian jacobian(const SpacetimeVec& z) const;

  /// True when jacobian() is exact rather than a finite-difference estimate.
  virtual bool exact_derivatives() const { return false; }

 protected:
  virtual FieldValue raw_value(const SpacetimeVec& z) const = 0;
  virtual FieldJacobian raw_jacobian(const SpacetimeVec& z) const = 0;

  void check_point(const SpacetimeVec& z) const;

 private:
  Eigen::Index n_;
  std::optional<Envelope> envelope_;
};

/// Field whose components are GaussPoly rules; derivatives and Fourier
/// transform are exact.
class AnalyticField final : public VectorField {
 public:
  AnalyticField(std::vector<GaussPoly> components, std::optional<Envelope> envelope);

  bool exact_derivatives() const override { return true; }
  const std::vector<GaussPoly>& rules() const { return components_; }

  /// Continuous transform of the unclipped rules, componentwise.
  FieldValue fourier(const SpacetimeVec& zeta) const;

  AnalyticField scaled(Complex s) const;
  /// Sum of rules; the envelope is the hull of both envelopes.
  friend AnalyticField operator+(const AnalyticField& a, const AnalyticField& b);

 protected:
  FieldValue raw_value(const SpacetimeVec& z) const override;
  FieldJacobian raw_jacobian(const SpacetimeVec& z) const override;

 private:
  std::vector<GaussPoly> components_;
  std::vector<GaussPoly> partials_;  // row-major (i, j) -> d_j f_i
  FusedRules fused_values_;
  FusedRules fused_partials_;
};

/// Field known only through point values; the Jacobian comes from central
/// differences with step cbrt(eps) * (1 + |z|) unless a fixed step is set.
class SampledField : public VectorField {
 public:
  using VectorField::VectorField;

  void set_fixed_step(std::optional<double> h) { fixed_step_ = h; }
  double step_at(const SpacetimeVec& z) const;

 protected:
  FieldJacobian raw_jacobian(const SpacetimeVec& z) const override;

 private:
  std::optional<double> fixed_step_;
};

class FunctionField final : public SampledField {
 public:
  using Rule = std::function<FieldValue(const SpacetimeVec&)>;
  FunctionField(Eigen::Index n, Rule rule, std::optional<Envelope> envelope);

 protected:
  FieldValue raw_value(const SpacetimeVec& z) const override;

 private:
  Rule rule_;
};

/// Tensor-product four-point Lagrange interpolation of every component of a
/// grid; zero off the grid.
Eigen::VectorXcd interpolate(const FieldGrid& grid, const SpacetimeVec& z);

/// Tensor-product cubic interpolation of grid samples; zero off the grid.
class GridField final : public SampledField {
 public:
  GridField(FieldGrid grid, std::optional<Envelope> envelope);
  const FieldGrid& grid() const { return grid_; }

 protected:
  FieldValue raw_value(const SpacetimeVec& z) const override;

 private:
  FieldGrid grid_;
};

/// Scalar potential phi with exact gradient, for building gauge fields d(phi).
struct ScalarPotential {
  GaussPoly phi;
  std::optional<Envelope> envelope;

  Complex value(const SpacetimeVec& z) const;
  FieldValue gradient(const SpacetimeVec& z) const;
};

FieldValue eval(const VectorField& f, const Event& z);
bool envelope_contains(const VectorField& f, const Event& z);

DForm d_form(const VectorField& f, const Event& z);
DForm d_form(const VectorField& f, const SpacetimeVec& z);

struct Curl2 {
  Complex c0;
  Complex c1;
  Complex c2;
};

/// n = 2 only: c0 = d1 f2 - d2 f1, c1 = d2 f0 - dt f2, c2 = dt f1 - d1 f0.
Curl2 curl2(const VectorField& f, const Event& z);
/// Same convention expressed on a d-form matrix: (-D12, D02, -D01).
Curl2 curl2_from_dform(const DForm& d);

/// f~_v(z) = D(z) (0, v): component i is sum_j f_ij v^j.
FieldValue tilde_f(const VectorField& f, const Event& z, const SpaceVec& v);
FieldValue tilde_f(const VectorField& f, const SpacetimeVec& z, const SpaceVec& v);

AnalyticField gradient_field(const ScalarPotential& phi);

namespace builtin {

AnalyticField zero(Eigen::Index n, std::optional<Envelope> envelope = std::nullopt);

/// amplitude * exp(-|z - center|^2 / (2 sigma^2)) placed in one component.
AnalyticField gaussian_bump(Eigen::Index n, double sigma, Eigen::Index component,
                            std::optional<Envelope> envelope = std::nullopt);

/// (0, -x2, x1, 0...) times a centered Gaussian bump: d-form D12 = -2 at the origin.
AnalyticField rotational(Eigen::Index n, double sigma, std::optional<Envelope> envelope = std::nullopt);

/// Gaussian times low-degree complex polynomials in every component, with
/// nonzero d-form in every (i, j) pair.
AnalyticField poly_gaussian(Eigen::Index n, double sigma, const SpacetimeVec& center,
                            std::optional<Envelope> envelope = std::nullopt);

/// Five fixed potentials of width ~sigma around the origin.
std::vector<ScalarPotential> potentials(Eigen::Index n, double sigma, std::optional<Envelope> envelope);

/// Names accepted by make_field.
std::vector<std::string> names();

struct FieldSpec {
  std::string name = "poly_gaussian";
  Eigen::Index n = 2;
  double sigma = 0.4;
  double amplitude = 1.0;
  SpacetimeVec center;  // empty means origin
  int potential = 0;    // index into potentials() for "gauge" and "poly_gaussian_plus_gauge"
  std::optional<Envelope> envelope;
};

AnalyticField make_field(const FieldSpec& spec);

}  // namespace builtin

}  // namespace lightray
