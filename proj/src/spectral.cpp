#include "lightray/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

#include "lightray/parallel.hpp"

namespace lightray {

namespace {

Eigen::Index first_mode(Eigen::Index count) { return count / 2; }

/// Applies the physical 1-D transform along one axis in place.
void transform_axis(Eigen::VectorXcd& data, const Lattice& lattice, Eigen::Index axis, bool inverse) {
  const Eigen::Index n = lattice.counts[axis];
  const Eigen::Index stride = lattice.stride(axis);
  const Eigen::Index outer = data.size() / (n * stride);
  const double h = lattice.spacing(axis);
  const double o = lattice.origin(axis);
  const double dz = 2.0 * std::numbers::pi / (double(n) * h);
  const Eigen::Index m0 = first_mode(n);

  // Per output bin j the frequency is (j - m0) dz and the FFT slot (j - m0) mod n.
  std::vector<Complex> phase(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const double zeta = double(j - m0) * dz;
    phase[j] = std::polar(1.0, (inverse ? 1.0 : -1.0) * o * zeta);
    slot[j] = ((j - m0) % n + n) % n;
  }

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<Complex> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
  for (Eigen::Index block = 0; block < outer; ++block) {
    for (Eigen::Index inner = 0; inner < stride; ++inner) {
      const Eigen::Index base = block * n * stride + inner;
      if (!inverse) {
        for (Eigen::Index k = 0; k < n; ++k) in[k] = data(base + k * stride);
        fft.fwd(out, in);
        for (Eigen::Index j = 0; j < n; ++j) data(base + j * stride) = h * phase[j] * out[slot[j]];
      } else {
        for (Eigen::Index j = 0; j < n; ++j) in[slot[j]] = phase[j] * data(base + j * stride);
        fft.inv(out, in);
        const double scale = 1.0 / (double(n) * h);
        for (Eigen::Index k = 0; k < n; ++k) data(base + k * stride) = scale * out[k];
      }
    }
  }
}

}  // namespace

Lattice dual_lattice(const Lattice& spatial) {
  spatial.validate();
  const Eigen::Index k = spatial.axes();
  Eigen::VectorXd origin(k), spacing(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    spacing(a) = 2.0 * std::numbers::pi / (double(spatial.counts[a]) * spatial.spacing(a));
    origin(a) = -double(first_mode(spatial.counts[a])) * spacing(a);
  }
  return Lattice(origin, spacing, spatial.counts);
}

Eigen::VectorXcd dft(const Eigen::VectorXcd& samples, const Lattice& lattice) {
  if (samples.size() != lattice.size()) throw Error(ErrorCode::InvalidArgument, "sample count does not match lattice");
  Eigen::VectorXcd data = samples;
  for (Eigen::Index a = 0; a < lattice.axes(); ++a) transform_axis(data, lattice, a, false);
  return data;
}

Eigen::VectorXcd idft(const Eigen::VectorXcd& spectrum, const Lattice& lattice) {
  if (spectrum.size() != lattice.size()) throw Error(ErrorCode::InvalidArgument, "spectrum size does not match lattice");
  Eigen::VectorXcd data = spectrum;
  for (Eigen::Index a = lattice.axes() - 1; a >= 0; --a) transform_axis(data, lattice, a, true);
  return data;
}

SpectralGrid dft_field(const FieldGrid& g) {
  g.validate();
  SpectralGrid s;
  s.source = g.lattice;
  s.frequencies = dual_lattice(g.lattice);
  s.components.resize(g.components.size());
  parallel_for(g.components.size(), [&](std::size_t c) { s.components[c] = dft(g.components[c], g.lattice); });
  return s;
}

FieldGrid idft_field(const SpectralGrid& s) {
  FieldGrid g(s.source, static_cast<Eigen::Index>(s.components.size()));
  parallel_for(s.components.size(), [&](std::size_t c) { g.components[c] = idft(s.components[c], s.source); });
  return g;
}

FieldGrid sample_field(const VectorField& f, const Lattice& lattice) {
  if (lattice.axes() != f.dimension() + 1) throw Error(ErrorCode::WrongDimension, "lattice must have 1 + n axes");
  FieldGrid g(lattice, f.components());
  const Eigen::Index total = lattice.size();
  const Eigen::Index chunk = 4096;
  const auto chunks = static_cast<std::size_t>((total + chunk - 1) / chunk);
  parallel_for(chunks, [&](std::size_t b) {
    const Eigen::Index lo = static_cast<Eigen::Index>(b) * chunk;
    const Eigen::Index hi = std::min(total, lo + chunk);
    for (Eigen::Index p = lo; p < hi; ++p) {
      const FieldValue v = f.value(lattice.point(p));
      for (Eigen::Index c = 0; c < f.components(); ++c) g.components[c](p) = v(c);
    }
  });
  return g;
}

void validate_periodization(const Envelope& envelope, const Lattice& lattice) {
  envelope.validate();
  if (lattice.axes() < 3) throw Error(ErrorCode::WrongDimension, "lattice must have 1 + n axes");
  const double t_max = std::max(std::abs(lattice.origin(0)), std::abs(lattice.upper()(0)));
  const double reach = envelope.spatial_extent(t_max);
  for (Eigen::Index a = 1; a < lattice.axes(); ++a) {
    const double extent = double(lattice.counts[a]) * lattice.spacing(a);
    if (2.0 * reach > 0.5 * extent || -reach < lattice.origin(a) || reach > lattice.upper()(a)) {
      throw Error(ErrorCode::InvalidArgument,
                  "field envelope (reach " + std::to_string(reach) + ") must lie in the grid and span at most half of axis " +
                      std::to_string(a) + " (extent " + std::to_string(extent) + ")");
    }
  }
}

Eigen::VectorXcd slice_lhs(const Sinogram& sino, Eigen::Index theta_index) {
  if (theta_index < 0 || theta_index >= sino.values.cols()) {
    throw Error(ErrorCode::InvalidArgument, "direction index out of range");
  }
  return dft(sino.values.col(theta_index), sino.acquisition.x_grid);
}

Complex slice_rhs(const SpectralGrid& spec, const SpaceVec& theta, const SpaceVec& xi) {
  const Lattice& lat = spec.frequencies;
  const Eigen::Index n = lat.axes() - 1;
  if (theta.size() != n || xi.size() != n) throw Error(ErrorCode::WrongDimension, "theta and xi need n components");

  MultiIndex index{};
  for (Eigen::Index a = 0; a < n; ++a) {
    const double u = (xi(a) - lat.origin(a + 1)) / lat.spacing(a + 1);
    const double r = std::round(u);
    if (std::abs(u - r) > 1e-6) throw Error(ErrorCode::InvalidArgument, "xi is not a lattice frequency");
    if (r < 0.0 || r > double(lat.counts[a + 1] - 1)) throw Error(ErrorCode::OutOfBand, "xi outside the frequency lattice");
    index[a + 1] = static_cast<Eigen::Index>(r);
  }

  const double tau = -theta.dot(xi);
  const double u = (tau - lat.origin(0)) / lat.spacing(0);
  const double top = double(lat.counts[0] - 1);
  if (u < -1e-9 || u > top + 1e-9) throw Error(ErrorCode::OutOfBand, "tau = -theta.xi outside the tau lattice");
  const double clamped = std::clamp(u, 0.0, top);
  auto lo = static_cast<Eigen::Index>(std::floor(clamped));
  double w = clamped - double(lo);
  if (lo >= lat.counts[0] - 1) {
    lo = lat.counts[0] - 1;
    w = 0.0;
  }

  Complex result(0.0);
  for (std::size_t c = 0; c < spec.components.size(); ++c) {
    index[0] = lo;
    Complex value = spec.components[c](lat.flat(index));
    if (w > 0.0) {
      index[0] = lo + 1;
      value = (1.0 - w) * value + w * spec.components[c](lat.flat(index));
    }
    result += value * (c == 0 ? 1.0 : theta(static_cast<Eigen::Index>(c) - 1));
  }
  return result;
}

ConeMask spacelike_mask(const Lattice& frequencies, double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) throw Error(ErrorCode::InvalidArgument, "mask margin must be in [0, 1)");
  ConeMask mask{frequencies, delta, Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(frequencies.size(), false)};
  for (Eigen::Index p = 0; p < frequencies.size(); ++p) {
    const Eigen::VectorXd zeta = frequencies.point(p);
    const double tau = std::abs(zeta(0));
    const double xi = zeta.tail(zeta.size() - 1).norm();
    mask.inside(p) = xi > 0.0 && tau <= (1.0 - delta) * xi;
  }
  return mask;
}

ConeMask spacelike_mask(const SpectralGrid& spec, double delta) { return spacelike_mask(spec.frequencies, delta); }

}  // namespace lightray
