#pragma once

#include <array>
#include <complex>
#include <vector>

#include "lightray/minkowski.hpp"

namespace lightray {

using Complex = std::complex<double>;
using Powers = std::array<int, kMaxAxes>;

/// Sum of terms c * prod_a (z_a - m_a)^{p_a} sharing one Gaussian factor
/// exp(-1/2 sum_a w_a (z_a - m_a)^2).
struct GaussianPacket {
  SpacetimeVec center;
  SpacetimeVec weights;
  std::vector<std::pair<Complex, Powers>> terms;
};

/// Finite sum of polynomial-times-Gaussian terms on R^{1+n}. The class is
/// closed under differentiation and has a closed-form Fourier transform, which
/// makes it the exact-rule backbone of the analytic test fields.
class GaussPoly {
 public:
  GaussPoly() = default;
  explicit GaussPoly(Eigen::Index axes);

  /// c * exp(-|z - center|^2 / (2 sigma^2)).
  static GaussPoly gaussian(const SpacetimeVec& center, double sigma, Complex c = 1.0);

  Eigen::Index axes() const { return axes_; }
  bool empty() const { return packets_.empty(); }
  const std::vector<GaussianPacket>& packets() const { return packets_; }

  /// Adds c * (z - center)^powers * exp(-1/2 sum w (z - center)^2), merging
  /// with an existing packet and monomial where possible.
  GaussPoly& add(Complex c, const Powers& powers, const SpacetimeVec& center, const SpacetimeVec& weights);

  /// Multiplies every term of every packet by (z_axis - center_axis)^power.
  GaussPoly times_monomial(const Powers& powers) const;

  Complex operator()(const SpacetimeVec& z) const;
  GaussPoly derivative(Eigen::Index axis) const;

  /// Continuous transform  \hat g(zeta) = int g(z) exp(-i z.zeta) dz.
  Complex fourier(const SpacetimeVec& zeta) const;

  GaussPoly& operator+=(const GaussPoly& other);
  GaussPoly& operator*=(Complex s);

  friend GaussPoly operator+(GaussPoly a, const GaussPoly& b) { return a += b; }
  friend GaussPoly operator*(Complex s, GaussPoly a) { return a *= s; }

 private:
  GaussianPacket& packet_for(const SpacetimeVec& center, const SpacetimeVec& weights);

  Eigen::Index axes_ = 0;
  std::vector<GaussianPacket> packets_;
};

/// Several rules evaluated together: each distinct Gaussian factor and each
/// power of (z - center) is computed once per point.
class FusedRules {
 public:
  FusedRules() = default;
  explicit FusedRules(const std::vector<GaussPoly>& rules);

  std::size_t size() const { return rules_; }
  /// out[r] = rules[r](z)
  void evaluate(const SpacetimeVec& z, Complex* out) const;

 private:
  struct Block {
    std::size_t gaussian;
    std::size_t rule;
    std::vector<std::pair<Complex, Powers>> terms;
  };

  Eigen::Index axes_ = 0;
  std::size_t rules_ = 0;
  std::vector<std::pair<SpacetimeVec, SpacetimeVec>> gaussians_;
  std::vector<int> top_power_;
  std::vector<Block> blocks_;
};

}  // namespace lightray
