#include <doctest.h>

#include <optional>
#include <random>

#include "lightray/inversion.hpp"

using namespace lightray;

namespace {

Covector cov(double tau, std::initializer_list<double> xi) {
  SpaceVec v(static_cast<Eigen::Index>(xi.size()));
  Eigen::Index i = 0;
  for (double x : xi) v(i++) = x;
  return Covector(tau, v);
}

FieldValue random_value(std::mt19937_64& rng, Eigen::Index k) {
  std::normal_distribution<double> g;
  FieldValue v(k);
  for (Eigen::Index a = 0; a < k; ++a) v(a) = Complex(g(rng), g(rng));
  return v;
}

/// Projects out the Euclidean component along zeta.
FieldValue perpendicular(const FieldValue& F, const Covector& zeta) {
  const SpacetimeVec z = zeta.coords();
  Complex along(0.0);
  for (Eigen::Index a = 0; a < z.size(); ++a) along += F(a) * z(a);
  return F - (along / z.squaredNorm()) * z.cast<Complex>();
}

Complex pair(const SpaceVec& theta, const FieldValue& F) {
  Complex out = F(0);
  for (Eigen::Index a = 0; a < theta.size(); ++a) out += theta(a) * F(a + 1);
  return out;
}

SliceSystem synthetic(const Covector& zeta, const std::vector<SpaceVec>& thetas, const FieldValue& F) {
  SliceSystem sys{zeta, {}, 0.0, 0.0};
  for (const auto& t : thetas) sys.rows.push_back({t, pair(t, F)});
  return sys;
}

std::optional<ErrorCode> code_of(SliceSystem sys, const NoiseModel& noise = {}) {
  try {
    solve_gauge_quotient(sys, noise);
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

struct Problem2 {
  AcquisitionSet acq;
  Lattice target;
  Quadrature q;
};

/// 32 x 32 grid at h = 0.3 with both direction branches.
Problem2 problem2(bool both) {
  Problem2 p;
  p.acq.x_grid = Lattice(Eigen::VectorXd::Constant(2, -4.8), Eigen::VectorXd::Constant(2, 0.3), {32, 32});
  Eigen::VectorXd c(1), hw(1);
  c << 0.0;
  hw << (both ? std::numbers::pi / 2 : 0.4);
  p.acq.patches.push_back({c, hw, {both ? 24 : 9}});
  if (both) {
    Eigen::VectorXd c2(1);
    c2 << std::numbers::pi;
    p.acq.patches.push_back({c2, hw, {24}});
  }
  p.target = Lattice(Eigen::Vector3d(-9.6, -4.8, -4.8), Eigen::Vector3d(0.6, 0.3, 0.3), {32, 32, 32});
  return p;
}

}  // namespace

TEST_SUITE("inversion") {
  TEST_CASE("solve_gauge_quotient examples") {
    const Covector z2 = cov(0, {1, 0});
    auto [plus, minus] = theta_pm(z2);
    SliceSystem zero = synthetic(z2, {plus, minus}, FieldValue::Zero(3));
    CHECK(solve_gauge_quotient(zero).norm() == 0.0);

    std::mt19937_64 rng(1);
    for (int k = 0; k < 20; ++k) {
      const FieldValue F = perpendicular(random_value(rng, 3), z2);
      SliceSystem sys = synthetic(z2, {plus, minus}, F);
      CHECK((solve_gauge_quotient(sys) - F).norm() <= 1e-10 * (1.0 + F.norm()));
      CHECK(sys.conditioning > 0.5);
    }

    const Covector z3 = cov(0, {0, 1, 0});
    const auto circle = direction_set(z3, 4);
    const FieldValue F3 = perpendicular(random_value(rng, 4), z3);
    SliceSystem sys3 = synthetic(z3, circle, F3);
    CHECK((solve_gauge_quotient(sys3) - F3).norm() <= 1e-10 * (1.0 + F3.norm()));
    CHECK(code_of(synthetic(z3, {circle[0], circle[1]}, F3)) == ErrorCode::RankDeficient);
    CHECK(code_of(synthetic(z2, {plus}, F3.head(3))) == ErrorCode::RankDeficient);

    SliceSystem bad = synthetic(z3, circle, F3);
    bad.rows[0].g += 10.0 * (1.0 + F3.norm());
    CHECK(code_of(bad, NoiseModel{0.01, 0.0}) == ErrorCode::InconsistentRows);
    CHECK(code_of(synthetic(z3, circle, F3), NoiseModel{0.0, 1e-9}) == std::nullopt);
  }

  TEST_CASE("gauge direction does not change the d-form") {
    std::mt19937_64 rng(2);
    for (Eigen::Index n : {2, 3}) {
      for (int k = 0; k < 50; ++k) {
        std::uniform_real_distribution<double> u(-0.9, 0.9);
        SpaceVec xi(n);
        for (Eigen::Index a = 0; a < n; ++a) xi(a) = u(rng) + (a == 0 ? 1.5 : 0.0);
        const Covector zeta(u(rng) * xi.norm(), xi);
        const FieldValue F = random_value(rng, n + 1);
        const DForm d = dform_spectrum_at(F, zeta);
        CHECK((d + d.transpose()).norm() == 0.0);
        const FieldValue shifted = F + Complex(3.7) * zeta.coords().cast<Complex>();
        CHECK((dform_spectrum_at(shifted, zeta) - d).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + d.norm()));
        CHECK(dform_spectrum_at(zeta.coords().cast<Complex>(), zeta).norm() == 0.0);
        if (n == 3) {
          const SpacetimeVec z = zeta.coords();
          for (int i = 0; i < 4; ++i) {
            for (int j = i + 1; j < 4; ++j) {
              for (int l = j + 1; l < 4; ++l) {
                const Complex cyc = z(i) * d(j, l) + z(j) * d(l, i) + z(l) * d(i, j);
                CHECK(std::abs(cyc) <= 1e-12 * (1.0 + d.norm()) * (1.0 + z.norm()));
              }
            }
          }
        }
      }
    }
  }

  TEST_CASE("dform_spectrum_at example and the curl convention") {
    FieldValue F(3);
    F << 0.0, 0.0, 1.0;
    const DForm d = dform_spectrum_at(F, cov(0, {1, 0}));
    CHECK(std::abs(d(1, 2) - Complex(0, -1)) <= 1e-15);
    CHECK(std::abs(d(2, 1) - Complex(0, 1)) <= 1e-15);
    const Curl2 c = curl2_from_dform(d);
    CHECK(std::abs(c.c0 - Complex(0, 1)) <= 1e-15);
    const auto pairs = dform_pairs(3);
    REQUIRE(pairs.size() == 6);
    CHECK(pairs[0] == std::pair<int, int>(0, 1));
    CHECK(pairs[3] == std::pair<int, int>(1, 2));
    CHECK(pairs[5] == std::pair<int, int>(2, 3));
  }

  TEST_CASE("curl convention holds on transformed samples") {
    // The d-form of F = \hat f equals the transform of the sampled d-form.
    const AnalyticField f = builtin::poly_gaussian(2, 0.8, SpacetimeVec::Zero(3));
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    const auto pairs = dform_pairs(2);
    for (int k = 0; k < 20; ++k) {
      SpacetimeVec z(3);
      z << u(rng), u(rng), u(rng);
      const FieldValue F = f.fourier(z);
      const DForm d = dform_spectrum_at(F, Covector::from_coords(z));
      const auto spectra = analytic_dform_spectrum(
          f, Lattice(z, Eigen::VectorXd::Constant(3, 1.0), {1, 1, 1}));
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        CHECK(std::abs(spectra[p](0) - d(pairs[p].first, pairs[p].second)) <= 1e-12 * (1.0 + d.norm()));
      }
    }
  }

  TEST_CASE("obstruction field of the single branch") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(-0.95, 0.95);
    for (int k = 0; k < 1000; ++k) {
      SpaceVec xi(2);
      xi << g(rng), g(rng);
      const Covector zeta(u(rng) * xi.norm(), xi);
      const double r = std::sqrt(xi.squaredNorm() - zeta.tau * zeta.tau);
      const Complex phi_hat(g(rng), g(rng));
      FieldValue eta(3);
      eta << 1.0, xi(1) / r, -xi(0) / r;
      eta *= phi_hat;
      auto [plus, minus] = theta_pm(zeta);
      CHECK(std::abs(pair(plus, eta)) <= 1e-10 * std::abs(phi_hat));
      CHECK(std::abs(pair(minus, eta) - 2.0 * phi_hat) <= 1e-10 * std::abs(phi_hat));
      // Plus-branch data of eta are zero; a single zero row determines nothing.
      SliceSystem sys{zeta, {{plus, pair(plus, eta)}}, 0.0, 0.0};
      CHECK(code_of(sys) == ErrorCode::RankDeficient);
      // eta is not pure gauge: its d-form is nonzero.
      CHECK(dform_spectrum_at(eta, zeta).norm() > 1e-3 * std::abs(phi_hat));
    }
  }

  TEST_CASE("aperture interpolation weights") {
    Problem2 p = problem2(true);
    const ApertureInterpolator interp(p.acq);
    const auto dirs = p.acq.directions();
    const auto exact = interp.weights(dirs[5]);
    REQUIRE(exact);
    double total = 0.0;
    for (const auto& [k, w] : *exact) {
      total += w;
      if (w > 1e-12) CHECK(k == 5);
    }
    CHECK(std::abs(total - 1.0) <= 1e-14);
    const auto mid = interp.weights(spherical_theta(0.5 * (p.acq.patches[0].parameter_value(0, 5) +
                                                           p.acq.patches[0].parameter_value(0, 6))));
    REQUIRE(mid);
    for (const auto& [k, w] : *mid) {
      if (w > 1e-12) {
        CHECK((k == 5 || k == 6));
        CHECK(std::abs(w - 0.5) <= 1e-12);
      }
    }
    const Problem2 narrow = problem2(false);
    CHECK_FALSE(ApertureInterpolator(narrow.acq).weights(spherical_theta(1.2)).has_value());
  }

  TEST_CASE("grid inversion: accuracy, mask support and gauge invariance") {
    Problem2 p = problem2(true);
    const Envelope env{0.0, 2.3};
    const AnalyticField f = builtin::poly_gaussian(2, 0.35, SpacetimeVec::Zero(3), env);
    validate_periodization(env, p.target);
    const Sinogram sf = make_sinogram(f, p.acq, p.q);
    const InversionResult rf = invert_sinogram(sf, p.target);
    const auto& spec = rf.spectrum;
    CHECK(rf.warnings.empty());
    CHECK(spec.recovered_fraction() > 0.9);
    for (Eigen::Index b = 0; b < spec.frequencies.size(); ++b) {
      if (!spec.mask.inside(b)) {
        for (const auto& c : spec.coefficients) CHECK(c(b) == Complex(0.0));
        CHECK(spec.status[static_cast<std::size_t>(b)] == BinStatus::OutsideMask);
      }
    }
    const auto truth = analytic_dform_spectrum(f, spec.frequencies);
    const double error = masked_relative_error(spec.coefficients, truth, spec.mask.inside);
    CHECK(error <= 0.05);

    const auto phis = builtin::potentials(2, 0.3, env);
    const AnalyticField g = f + gradient_field(phis[1]);
    const InversionResult rg = invert_sinogram(make_sinogram(g, p.acq, p.q), p.target);
    CHECK(masked_relative_error(rg.spectrum.coefficients, spec.coefficients, spec.mask.inside) <= 1e-6);

    const AnalyticField pure = gradient_field(phis[2]);
    const InversionResult rp = invert_sinogram(make_sinogram(pure, p.acq, p.q), p.target);
    double biggest = 0.0;
    for (const auto& c : rp.spectrum.coefficients) biggest = std::max(biggest, c.cwiseAbs().maxCoeff());
    double scale = 0.0;
    for (const auto& c : spec.coefficients) scale = std::max(scale, c.cwiseAbs().maxCoeff());
    CHECK(biggest <= 1e-6 * scale);
  }

  TEST_CASE("single branch recovers nothing") {
    Problem2 p = problem2(false);
    const Envelope env{0.0, 2.3};
    for (const AnalyticField& f : {builtin::poly_gaussian(2, 0.35, SpacetimeVec::Zero(3), env), builtin::zero(2, env)}) {
      const InversionResult r = invert_sinogram(make_sinogram(f, p.acq, p.q), p.target);
      CHECK(r.spectrum.recovered() == 0);
      CHECK(r.warnings.size() == 1);
      for (const auto& c : r.spatial.components) CHECK(c.cwiseAbs().maxCoeff() == 0.0);
      CHECK(std::count(r.spectrum.status.begin(), r.spectrum.status.end(), BinStatus::MissingBranch) > 0);
    }
  }

  TEST_CASE("n = 3 needs directions inside the aperture") {
    AcquisitionSet acq;
    acq.x_grid = Lattice(Eigen::VectorXd::Constant(3, -2.0), Eigen::VectorXd::Constant(3, 0.5), {8, 8, 8});
    Eigen::VectorXd c(2), hw(2);
    c << 0.3, 0.0;
    hw << 0.02, 0.02;
    acq.patches.push_back({c, hw, {2, 2}});
    const Lattice target(Eigen::Vector4d(-2, -2, -2, -2), Eigen::Vector4d::Constant(0.5), {8, 8, 8, 8});
    const Sinogram s = make_sinogram(builtin::zero(3, Envelope{0.0, 1.0}), acq, Quadrature{});
    try {
      invert_sinogram(s, target);
      FAIL("expected ApertureTooSmall");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ApertureTooSmall);
    }
  }

  TEST_CASE("masked relative error") {
    Eigen::Array<bool, Eigen::Dynamic, 1> mask(3);
    mask << true, false, true;
    Eigen::VectorXcd a(3), b(3);
    a << 1.0, 100.0, 2.0;
    b << 1.0, 0.0, 1.0;
    CHECK(std::abs(masked_relative_error({a}, {b}, mask) - std::sqrt(1.0 / 2.0)) <= 1e-15);
  }
}
