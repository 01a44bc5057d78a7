#include "lightray/gausspoly.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lightray {

namespace {

constexpr int kMaxPower = 16;

/// J_p(k) = int y^p exp(-w y^2 / 2) exp(-i k y) dy for p = 0..max_power, from
/// w J_{p+1} = p J_{p-1} - i k J_p.
void gaussian_moments(double w, double k, int max_power, Complex* out) {
  const Complex i(0.0, 1.0);
  out[0] = std::sqrt(2.0 * std::numbers::pi / w) * std::exp(-k * k / (2.0 * w));
  if (max_power >= 1) out[1] = (-i * k * out[0]) / w;
  for (int p = 1; p < max_power; ++p) {
    out[p + 1] = (double(p) * out[p - 1] - i * k * out[p]) / w;
  }
}

int max_power(const GaussianPacket& packet, Eigen::Index axes) {
  int m = 0;
  for (const auto& [c, p] : packet.terms) {
    for (Eigen::Index a = 0; a < axes; ++a) m = std::max(m, p[a]);
  }
  return m;
}

void add_term(GaussianPacket& packet, Complex c, const Powers& powers) {
  if (c == Complex(0.0)) return;
  for (auto& [existing, p] : packet.terms) {
    if (p == powers) {
      existing += c;
      return;
    }
  }
  packet.terms.emplace_back(c, powers);
}

}  // namespace

GaussPoly::GaussPoly(Eigen::Index axes) : axes_(axes) {
  if (axes < 1 || axes > kMaxAxes) {
    throw Error(ErrorCode::WrongDimension, "GaussPoly supports 1.." + std::to_string(kMaxAxes) + " axes");
  }
}

GaussPoly GaussPoly::gaussian(const SpacetimeVec& center, double sigma, Complex c) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "Gaussian width must be positive");
  GaussPoly g(center.size());
  const SpacetimeVec weights = SpacetimeVec::Constant(center.size(), 1.0 / (sigma * sigma));
  g.add(c, Powers{}, center, weights);
  return g;
}

GaussianPacket& GaussPoly::packet_for(const SpacetimeVec& center, const SpacetimeVec& weights) {
  for (auto& packet : packets_) {
    if (packet.center == center && packet.weights == weights) return packet;
  }
  packets_.push_back(GaussianPacket{center, weights, {}});
  return packets_.back();
}

GaussPoly& GaussPoly::add(Complex c, const Powers& powers, const SpacetimeVec& center, const SpacetimeVec& weights) {
  if (center.size() != axes_ || weights.size() != axes_) {
    throw Error(ErrorCode::WrongDimension, "GaussPoly term has the wrong number of axes");
  }
  for (Eigen::Index a = 0; a < axes_; ++a) {
    if (!(weights(a) > 0.0)) throw Error(ErrorCode::InvalidArgument, "Gaussian weights must be positive");
    if (powers[a] < 0 || powers[a] >= kMaxPower) throw Error(ErrorCode::InvalidArgument, "monomial power out of range");
  }
  add_term(packet_for(center, weights), c, powers);
  return *this;
}

GaussPoly GaussPoly::times_monomial(const Powers& powers) const {
  GaussPoly out(axes_);
  for (const auto& packet : packets_) {
    for (const auto& [c, p] : packet.terms) {
      Powers q = p;
      for (Eigen::Index a = 0; a < axes_; ++a) q[a] += powers[a];
      out.add(c, q, packet.center, packet.weights);
    }
  }
  return out;
}

Complex GaussPoly::operator()(const SpacetimeVec& z) const {
  Complex total(0.0);
  double ypow[kMaxAxes][kMaxPower];
  for (const auto& packet : packets_) {
    double exponent = 0.0;
    for (Eigen::Index a = 0; a < axes_; ++a) {
      const double y = z(a) - packet.center(a);
      exponent += packet.weights(a) * y * y;
    }
    exponent *= -0.5;
    if (exponent < -745.0) continue;
    const int top = max_power(packet, axes_);
    for (Eigen::Index a = 0; a < axes_; ++a) {
      const double y = z(a) - packet.center(a);
      ypow[a][0] = 1.0;
      for (int p = 1; p <= top; ++p) ypow[a][p] = ypow[a][p - 1] * y;
    }
    Complex poly(0.0);
    for (const auto& [c, p] : packet.terms) {
      double mono = 1.0;
      for (Eigen::Index a = 0; a < axes_; ++a) mono *= ypow[a][p[a]];
      poly += c * mono;
    }
    total += poly * std::exp(exponent);
  }
  return total;
}

GaussPoly GaussPoly::derivative(Eigen::Index axis) const {
  if (axis < 0 || axis >= axes_) throw Error(ErrorCode::InvalidArgument, "derivative axis out of range");
  GaussPoly out(axes_);
  for (const auto& packet : packets_) {
    GaussianPacket& target = out.packet_for(packet.center, packet.weights);
    // d/dz_a [y^p e^{-w y^2/2}] = p y^{p-1} e - w y^{p+1} e
    for (const auto& [c, p] : packet.terms) {
      if (p[axis] > 0) {
        Powers lower = p;
        --lower[axis];
        add_term(target, c * double(p[axis]), lower);
      }
      Powers upper = p;
      ++upper[axis];
      add_term(target, -c * packet.weights(axis), upper);
    }
  }
  std::erase_if(out.packets_, [](const GaussianPacket& p) { return p.terms.empty(); });
  return out;
}

Complex GaussPoly::fourier(const SpacetimeVec& zeta) const {
  if (zeta.size() != axes_) throw Error(ErrorCode::WrongDimension, "frequency has the wrong number of axes");
  Complex total(0.0);
  Complex moments[kMaxAxes][kMaxPower];
  for (const auto& packet : packets_) {
    const int top = max_power(packet, axes_);
    for (Eigen::Index a = 0; a < axes_; ++a) gaussian_moments(packet.weights(a), zeta(a), top, moments[a]);
    Complex sum(0.0);
    for (const auto& [c, p] : packet.terms) {
      Complex prod = c;
      for (Eigen::Index a = 0; a < axes_; ++a) prod *= moments[a][p[a]];
      sum += prod;
    }
    const double phase = -packet.center.dot(zeta);
    total += sum * std::polar(1.0, phase);
  }
  return total;
}

GaussPoly& GaussPoly::operator+=(const GaussPoly& other) {
  if (other.empty()) return *this;
  if (axes_ == 0) axes_ = other.axes_;
  if (other.axes_ != axes_) throw Error(ErrorCode::WrongDimension, "cannot add GaussPoly of different shapes");
  for (const auto& packet : other.packets_) {
    GaussianPacket& target = packet_for(packet.center, packet.weights);
    for (const auto& [c, p] : packet.terms) add_term(target, c, p);
  }
  return *this;
}

GaussPoly& GaussPoly::operator*=(Complex s) {
  for (auto& packet : packets_) {
    for (auto& term : packet.terms) term.first *= s;
  }
  return *this;
}

FusedRules::FusedRules(const std::vector<GaussPoly>& rules) : rules_(rules.size()) {
  for (std::size_t r = 0; r < rules.size(); ++r) {
    if (rules[r].empty()) continue;
    if (axes_ == 0) axes_ = rules[r].axes();
    if (rules[r].axes() != axes_) throw Error(ErrorCode::WrongDimension, "fused rules must share one shape");
    for (const auto& packet : rules[r].packets()) {
      std::size_t g = 0;
      while (g < gaussians_.size() &&
             !(gaussians_[g].first == packet.center && gaussians_[g].second == packet.weights)) {
        ++g;
      }
      if (g == gaussians_.size()) {
        gaussians_.emplace_back(packet.center, packet.weights);
        top_power_.push_back(0);
      }
      top_power_[g] = std::max(top_power_[g], max_power(packet, axes_));
      blocks_.push_back(Block{g, r, packet.terms});
    }
  }
}

void FusedRules::evaluate(const SpacetimeVec& z, Complex* out) const {
  for (std::size_t r = 0; r < rules_; ++r) out[r] = 0.0;
  if (gaussians_.empty()) return;
  constexpr std::size_t kMaxGaussians = 16;
  double stack_g[kMaxGaussians];
  double stack_pow[kMaxGaussians][kMaxAxes][kMaxPower];
  std::vector<double> heap_g;
  std::vector<std::array<std::array<double, kMaxPower>, kMaxAxes>> heap_pow;
  const bool small = gaussians_.size() <= kMaxGaussians;
  if (!small) {
    heap_g.resize(gaussians_.size());
    heap_pow.resize(gaussians_.size());
  }
  for (std::size_t g = 0; g < gaussians_.size(); ++g) {
    const auto& [center, weights] = gaussians_[g];
    double exponent = 0.0;
    for (Eigen::Index a = 0; a < axes_; ++a) {
      const double y = z(a) - center(a);
      exponent += weights(a) * y * y;
      double* pw = small ? stack_pow[g][a] : heap_pow[g][a].data();
      pw[0] = 1.0;
      for (int p = 1; p <= top_power_[g]; ++p) pw[p] = pw[p - 1] * y;
    }
    exponent *= -0.5;
    (small ? stack_g[g] : heap_g[g]) = exponent < -745.0 ? 0.0 : std::exp(exponent);
  }
  for (const auto& block : blocks_) {
    const double gauss = small ? stack_g[block.gaussian] : heap_g[block.gaussian];
    if (gauss == 0.0) continue;
    Complex poly(0.0);
    for (const auto& [c, p] : block.terms) {
      double mono = 1.0;
      for (Eigen::Index a = 0; a < axes_; ++a) {
        mono *= small ? stack_pow[block.gaussian][a][p[a]] : heap_pow[block.gaussian][a][p[a]];
      }
      poly += c * mono;
    }
    out[block.rule] += poly * gauss;
  }
}

}  // namespace lightray
