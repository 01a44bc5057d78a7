#include "lightray/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lightray {

void Envelope::validate() const {
  if (!(speed >= 0.0 && speed < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "envelope speed must satisfy 0 <= C < 1");
  }
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorCode::InvalidArgument, "envelope radius must be positive");
  }
}

bool Envelope::contains(const SpacetimeVec& z) const {
  return z.tail(z.size() - 1).norm() <= speed * std::abs(z(0)) + radius;
}

Envelope envelope_hull(const Envelope& a, const Envelope& b) {
  return Envelope{std::max(a.speed, b.speed), std::max(a.radius, b.radius)};
}

VectorField::VectorField(Eigen::Index n, std::optional<Envelope> envelope) : n_(n), envelope_(envelope) {
  require_space_dim(n);
  if (envelope_) envelope_->validate();
}

void VectorField::check_point(const SpacetimeVec& z) const {
  if (z.size() != n_ + 1) throw Error(ErrorCode::WrongDimension, "event has the wrong number of coordinates");
}

FieldValue VectorField::value(const SpacetimeVec& z) const {
  check_point(z);
  if (envelope_ && !envelope_->contains(z)) return FieldValue::Zero(n_ + 1);
  return raw_value(z);
}

FieldJacobian VectorField::jacobian(const SpacetimeVec& z) const {
  check_point(z);
  if (envelope_ && !envelope_->contains(z)) return FieldJacobian::Zero(n_ + 1, n_ + 1);
  return raw_jacobian(z);
}

AnalyticField::AnalyticField(std::vector<GaussPoly> components, std::optional<Envelope> envelope)
    : VectorField(static_cast<Eigen::Index>(components.size()) - 1, envelope), components_(std::move(components)) {
  const Eigen::Index k = dimension() + 1;
  for (auto& c : components_) {
    if (c.empty()) c = GaussPoly(k);
    if (c.axes() != k) throw Error(ErrorCode::WrongDimension, "component rule has the wrong number of axes");
  }
  partials_.reserve(static_cast<std::size_t>(k * k));
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) partials_.push_back(components_[i].derivative(j));
  }
  fused_values_ = FusedRules(components_);
  fused_partials_ = FusedRules(partials_);
}

FieldValue AnalyticField::raw_value(const SpacetimeVec& z) const {
  FieldValue v(components());
  fused_values_.evaluate(z, v.data());
  return v;
}

FieldJacobian AnalyticField::raw_jacobian(const SpacetimeVec& z) const {
  const Eigen::Index k = components();
  Complex flat[kMaxAxes * kMaxAxes];
  fused_partials_.evaluate(z, flat);
  FieldJacobian jac(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) jac(i, j) = flat[i * k + j];
  }
  return jac;
}

FieldValue AnalyticField::fourier(const SpacetimeVec& zeta) const {
  FieldValue v(components());
  for (Eigen::Index i = 0; i < components(); ++i) v(i) = components_[i].fourier(zeta);
  return v;
}

AnalyticField AnalyticField::scaled(Complex s) const {
  std::vector<GaussPoly> c = components_;
  for (auto& g : c) g *= s;
  return AnalyticField(std::move(c), envelope());
}

AnalyticField operator+(const AnalyticField& a, const AnalyticField& b) {
  if (a.dimension() != b.dimension()) throw Error(ErrorCode::WrongDimension, "cannot add fields of different dimension");
  std::vector<GaussPoly> c = a.components_;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b.components_[i];
  std::optional<Envelope> env;
  if (a.envelope() && b.envelope()) env = envelope_hull(*a.envelope(), *b.envelope());
  return AnalyticField(std::move(c), env);
}

double SampledField::step_at(const SpacetimeVec& z) const {
  if (fixed_step_) return *fixed_step_;
  return std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + z.norm());
}

FieldJacobian SampledField::raw_jacobian(const SpacetimeVec& z) const {
  const Eigen::Index k = components();
  const double h = step_at(z);
  FieldJacobian jac(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    SpacetimeVec plus = z;
    SpacetimeVec minus = z;
    plus(j) += h;
    minus(j) -= h;
    jac.col(j) = (raw_value(plus) - raw_value(minus)) / (2.0 * h);
  }
  return jac;
}

FunctionField::FunctionField(Eigen::Index n, Rule rule, std::optional<Envelope> envelope)
    : SampledField(n, envelope), rule_(std::move(rule)) {
  if (!rule_) throw Error(ErrorCode::InvalidArgument, "function field needs a rule");
}

FieldValue FunctionField::raw_value(const SpacetimeVec& z) const {
  FieldValue v = rule_(z);
  if (v.size() != components()) throw Error(ErrorCode::WrongDimension, "rule returned the wrong number of components");
  return v;
}

GridField::GridField(FieldGrid grid, std::optional<Envelope> envelope)
    : SampledField(grid.space_dimension(), envelope), grid_(std::move(grid)) {
  grid_.validate();
  if (static_cast<Eigen::Index>(grid_.components.size()) != components()) {
    throw Error(ErrorCode::WrongDimension, "grid must carry 1 + n components");
  }
}

Eigen::VectorXcd interpolate(const FieldGrid& grid, const SpacetimeVec& z) {
  const Lattice& lat = grid.lattice;
  const auto comps = static_cast<Eigen::Index>(grid.components.size());
  if (z.size() != lat.axes()) throw Error(ErrorCode::WrongDimension, "point and grid dimensions differ");
  const Eigen::Index axes = lat.axes();
  // Four-point Lagrange weights per axis around the containing cell.
  std::array<std::array<double, 4>, kMaxAxes> weights{};
  std::array<Eigen::Index, kMaxAxes> base{};
  for (Eigen::Index a = 0; a < axes; ++a) {
    const double u = (z(a) - lat.origin(a)) / lat.spacing(a);
    if (u < 0.0 || u > double(lat.counts[a] - 1)) return Eigen::VectorXcd::Zero(comps);
    const auto cell = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(u)), lat.counts[a] - 2);
    const double r = u - double(cell);
    base[a] = cell - 1;
    weights[a] = {-r * (r - 1.0) * (r - 2.0) / 6.0, (r + 1.0) * (r - 1.0) * (r - 2.0) / 2.0,
                  -(r + 1.0) * r * (r - 2.0) / 2.0, (r + 1.0) * r * (r - 1.0) / 6.0};
  }
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(comps);
  Eigen::Index stencil = 1;
  for (Eigen::Index a = 0; a < axes; ++a) stencil *= 4;
  for (Eigen::Index s = 0; s < stencil; ++s) {
    MultiIndex index{};
    double w = 1.0;
    Eigen::Index rest = s;
    bool inside = true;
    for (Eigen::Index a = axes - 1; a >= 0; --a) {
      const Eigen::Index offset = rest % 4;
      rest /= 4;
      index[a] = base[a] + offset;
      if (index[a] < 0 || index[a] >= lat.counts[a]) {
        inside = false;
        break;
      }
      w *= weights[a][offset];
    }
    if (!inside) continue;  // samples past the edge are treated as zero
    const Eigen::Index f = lat.flat(index);
    for (Eigen::Index c = 0; c < comps; ++c) v(c) += w * grid.components[c](f);
  }
  return v;
}

FieldValue GridField::raw_value(const SpacetimeVec& z) const { return interpolate(grid_, z); }

Complex ScalarPotential::value(const SpacetimeVec& z) const {
  if (envelope && !envelope->contains(z)) return 0.0;
  return phi(z);
}

FieldValue ScalarPotential::gradient(const SpacetimeVec& z) const {
  FieldValue g = FieldValue::Zero(phi.axes());
  if (envelope && !envelope->contains(z)) return g;
  for (Eigen::Index a = 0; a < phi.axes(); ++a) g(a) = phi.derivative(a)(z);
  return g;
}

FieldValue eval(const VectorField& f, const Event& z) { return f.value(z.coords()); }

bool envelope_contains(const VectorField& f, const Event& z) {
  if (!f.envelope()) throw Error(ErrorCode::NoEnvelope, "field has no declared support envelope");
  return f.envelope()->contains(z.coords());
}

DForm d_form(const VectorField& f, const SpacetimeVec& z) {
  const FieldJacobian jac = f.jacobian(z);
  const Eigen::Index k = jac.rows();
  DForm d = DForm::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      d(i, j) = jac(i, j) - jac(j, i);
      d(j, i) = -d(i, j);
    }
  }
  return d;
}

DForm d_form(const VectorField& f, const Event& z) { return d_form(f, z.coords()); }

Curl2 curl2_from_dform(const DForm& d) {
  if (d.rows() != 3) throw Error(ErrorCode::WrongDimension, "curl2 is defined for n = 2");
  return Curl2{-d(1, 2), d(0, 2), -d(0, 1)};
}

Curl2 curl2(const VectorField& f, const Event& z) {
  if (f.dimension() != 2) throw Error(ErrorCode::WrongDimension, "curl2 is defined for n = 2");
  return curl2_from_dform(d_form(f, z));
}

FieldValue tilde_f(const VectorField& f, const SpacetimeVec& z, const SpaceVec& v) {
  if (v.size() != f.dimension()) throw Error(ErrorCode::WrongDimension, "v must have n components");
  SpacetimeVector<Complex> w(f.components());
  w(0) = 0.0;
  w.tail(f.dimension()) = v.cast<Complex>();
  return d_form(f, z) * w;
}

FieldValue tilde_f(const VectorField& f, const Event& z, const SpaceVec& v) { return tilde_f(f, z.coords(), v); }

AnalyticField gradient_field(const ScalarPotential& phi) {
  std::vector<GaussPoly> c;
  for (Eigen::Index a = 0; a < phi.phi.axes(); ++a) c.push_back(phi.phi.derivative(a));
  return AnalyticField(std::move(c), phi.envelope);
}

namespace builtin {

namespace {

Powers powers_of(std::initializer_list<int> p) {
  Powers out{};
  std::size_t a = 0;
  for (int v : p) out[a++] = v;
  return out;
}

/// sum_k c_k (y / sigma)^{p_k} G with G the centered Gaussian of width sigma.
GaussPoly shaped(const GaussPoly& g, double sigma, std::initializer_list<std::pair<Complex, Powers>> terms) {
  GaussPoly out(g.axes());
  for (const auto& [c, p] : terms) {
    int degree = 0;
    for (int v : p) degree += v;
    out += (c / std::pow(sigma, degree)) * g.times_monomial(p);
  }
  return out;
}

SpacetimeVec origin(Eigen::Index n) { return SpacetimeVec::Zero(n + 1); }

}  // namespace

AnalyticField zero(Eigen::Index n, std::optional<Envelope> envelope) {
  require_space_dim(n);
  return AnalyticField(std::vector<GaussPoly>(static_cast<std::size_t>(n + 1), GaussPoly(n + 1)), envelope);
}

AnalyticField gaussian_bump(Eigen::Index n, double sigma, Eigen::Index component, std::optional<Envelope> envelope) {
  require_space_dim(n);
  if (component < 0 || component > n) throw Error(ErrorCode::InvalidArgument, "component index out of range");
  std::vector<GaussPoly> c(static_cast<std::size_t>(n + 1), GaussPoly(n + 1));
  c[component] = GaussPoly::gaussian(origin(n), sigma);
  return AnalyticField(std::move(c), envelope);
}

AnalyticField rotational(Eigen::Index n, double sigma, std::optional<Envelope> envelope) {
  require_space_dim(n);
  const GaussPoly g = GaussPoly::gaussian(origin(n), sigma);
  std::vector<GaussPoly> c(static_cast<std::size_t>(n + 1), GaussPoly(n + 1));
  Powers p2{}, p1{};
  p2[2] = 1;
  p1[1] = 1;
  c[1] = Complex(-1.0) * g.times_monomial(p2);
  c[2] = g.times_monomial(p1);
  return AnalyticField(std::move(c), envelope);
}

AnalyticField poly_gaussian(Eigen::Index n, double sigma, const SpacetimeVec& center, std::optional<Envelope> envelope) {
  require_space_dim(n);
  const SpacetimeVec m = center.size() == 0 ? origin(n) : center;
  if (m.size() != n + 1) throw Error(ErrorCode::WrongDimension, "field center must have 1 + n coordinates");
  const GaussPoly g = GaussPoly::gaussian(m, sigma);
  const Complex i(0.0, 1.0);
  std::vector<GaussPoly> c;
  if (n == 2) {
    c.push_back(shaped(g, sigma, {{1.0, powers_of({})}, {0.5, powers_of({0, 1})}, {0.3 * i, powers_of({0, 0, 1})}}));
    c.push_back(shaped(g, sigma, {{0.8, powers_of({1})}, {-1.0, powers_of({0, 0, 1})}, {0.3, powers_of({0, 1, 1})}}));
    c.push_back(shaped(g, sigma, {{1.0, powers_of({0, 1})}, {0.4, powers_of({1, 1})}, {-0.2, powers_of({})}}));
  } else {
    c.push_back(shaped(g, sigma, {{1.0, powers_of({})}, {0.5, powers_of({0, 1})}, {0.3 * i, powers_of({0, 0, 1})}}));
    c.push_back(shaped(g, sigma,
                       {{0.8, powers_of({1})}, {-1.0, powers_of({0, 0, 1})}, {0.3, powers_of({0, 1, 1})},
                        {-0.4, powers_of({0, 0, 0, 1})}}));
    c.push_back(shaped(g, sigma,
                       {{1.0, powers_of({0, 1})}, {0.4, powers_of({1, 1})}, {-0.2, powers_of({})},
                        {0.25, powers_of({0, 0, 0, 1})}}));
    c.push_back(shaped(g, sigma,
                       {{0.6, powers_of({0, 1})}, {-0.5 * i, powers_of({0, 0, 1})}, {0.3, powers_of({1, 0, 0, 1})},
                        {0.2, powers_of({})}}));
  }
  return AnalyticField(std::move(c), envelope);
}

std::vector<ScalarPotential> potentials(Eigen::Index n, double s, std::optional<Envelope> envelope) {
  require_space_dim(n);
  const Eigen::Index k = n + 1;
  const Complex i(0.0, 1.0);
  std::vector<ScalarPotential> out;

  out.push_back({GaussPoly::gaussian(origin(n), s), envelope});

  out.push_back({shaped(GaussPoly::gaussian(origin(n), s), s, {{1.0, powers_of({0, 1})}}), envelope});

  SpacetimeVec shifted = origin(n);
  shifted(0) = 0.3 * s;
  shifted(1) = -0.2 * s;
  shifted(2) = 0.1 * s;
  out.push_back({shaped(GaussPoly::gaussian(shifted, s), s, {{1.0, powers_of({1, 0, 1})}}), envelope});

  SpacetimeVec weights(k);
  const double widths[4] = {1.0, 1.5, 0.7, 1.2};
  for (Eigen::Index a = 0; a < k; ++a) weights(a) = 1.0 / (widths[a] * widths[a] * s * s);
  GaussPoly aniso(k);
  aniso.add(0.7, Powers{}, origin(n), weights);
  out.push_back({aniso, envelope});

  SpacetimeVec offset = origin(n);
  offset(1) = 0.3 * s;
  offset(2) = -0.2 * s;
  GaussPoly mixed = shaped(GaussPoly::gaussian(origin(n), 1.2 * s), 1.2 * s,
                           {{1.0, powers_of({})}, {i, powers_of({0, 2})}});
  mixed += GaussPoly::gaussian(offset, 0.8 * s, 0.5);
  out.push_back({mixed, envelope});
  return out;
}

std::vector<std::string> names() {
  return {"zero", "gaussian", "rotational", "poly_gaussian", "gauge", "poly_gaussian_plus_gauge"};
}

AnalyticField make_field(const FieldSpec& spec) {
  require_space_dim(spec.n);
  auto gauge = [&] {
    const auto phis = potentials(spec.n, spec.sigma, spec.envelope);
    if (spec.potential < 0 || spec.potential >= static_cast<int>(phis.size())) {
      throw Error(ErrorCode::InvalidArgument, "potential index must be in [0, " + std::to_string(phis.size()) + ")");
    }
    return gradient_field(phis[static_cast<std::size_t>(spec.potential)]);
  };
  AnalyticField f = [&] {
    if (spec.name == "zero") return zero(spec.n, spec.envelope);
    if (spec.name == "gaussian") return gaussian_bump(spec.n, spec.sigma, 0, spec.envelope);
    if (spec.name == "rotational") return rotational(spec.n, spec.sigma, spec.envelope);
    if (spec.name == "poly_gaussian") return poly_gaussian(spec.n, spec.sigma, spec.center, spec.envelope);
    if (spec.name == "gauge") return gauge();
    if (spec.name == "poly_gaussian_plus_gauge") {
      return poly_gaussian(spec.n, spec.sigma, spec.center, spec.envelope) + gauge();
    }
    throw Error(ErrorCode::InvalidArgument, "unknown field '" + spec.name + "'");
  }();
  return spec.amplitude == 1.0 ? f : f.scaled(spec.amplitude);
}

}  // namespace builtin

}  // namespace lightray
