#pragma once

#include <string>
#include <vector>

#include "lightray/fields.hpp"
#include "lightray/grid.hpp"
#include "lightray/raytransform.hpp"

namespace lightray {

/// Convention tag stored with every spectrum.
inline constexpr const char* kFourierConvention = "fwd:exp(-i z.zeta)*dV;inv:1/(2pi)^d";

/// Frequency data on the discrete dual of a spatial lattice. Frequencies are
/// stored in ascending order, m * 2 pi / (N h) for m in [-floor(N/2), ceil(N/2)).
struct SpectralGrid {
  Lattice frequencies;
  Lattice source;
  std::vector<Eigen::VectorXcd> components;
  std::string convention = kFourierConvention;
};

struct ConeMask {
  Lattice frequencies;
  double margin = 0.0;
  Eigen::Array<bool, Eigen::Dynamic, 1> inside;

  Eigen::Index count() const { return inside.count(); }
};

Lattice dual_lattice(const Lattice& spatial);

/// d-dimensional transform of flat samples on `lattice` with the physical
/// convention  \hat g(zeta) = sum g(z) exp(-i z.zeta) * prod(h).
Eigen::VectorXcd dft(const Eigen::VectorXcd& samples, const Lattice& lattice);
/// Exact inverse of dft() for the same spatial lattice.
Eigen::VectorXcd idft(const Eigen::VectorXcd& spectrum, const Lattice& lattice);

SpectralGrid dft_field(const FieldGrid& g);
FieldGrid idft_field(const SpectralGrid& s);

/// Samples f at every lattice point (lattice has 1 + n axes).
FieldGrid sample_field(const VectorField& f, const Lattice& lattice);

/// The envelope restricted to the lattice's time window must fit inside the
/// spatial box and span at most half of it on each spatial axis.
void validate_periodization(const Envelope& envelope, const Lattice& lattice);

/// n-dimensional DFT over x of L f(., theta_k), on dual_lattice(x_grid).
Eigen::VectorXcd slice_lhs(const Sinogram& sino, Eigen::Index theta_index);

/// \hat f(-theta.xi, xi) . (1, theta), linear in tau between lattice planes.
/// xi must be a spatial lattice frequency.
Complex slice_rhs(const SpectralGrid& spec, const SpaceVec& theta, const SpaceVec& xi);

/// True iff |tau| <= (1 - delta) |xi|, with the zero frequency always false.
ConeMask spacelike_mask(const Lattice& frequencies, double delta);
ConeMask spacelike_mask(const SpectralGrid& spec, double delta);

}  // namespace lightray
