#include "lightray/inversion.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>

#include "lightray/parallel.hpp"

namespace lightray {

namespace {

double wrap_near(double value, double center) {
  const double two_pi = 2.0 * std::numbers::pi;
  double d = std::fmod(value - center, two_pi);
  if (d >= std::numbers::pi) d -= two_pi;
  if (d < -std::numbers::pi) d += two_pi;
  return center + d;
}

bool close_relative(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

}  // namespace

FieldValue solve_gauge_quotient(SliceSystem& sys, const NoiseModel& noise, double min_conditioning) {
  const Eigen::Index n = sys.zeta.dimension();
  require_space_dim(n);
  const Eigen::Index k = n + 1;
  const SpacetimeVec zeta = sys.zeta.coords();
  const double zeta_norm = zeta.norm();
  if (!(zeta_norm > 0.0)) throw Error(ErrorCode::InvalidArgument, "gauge quotient needs a nonzero frequency");

  // Orthonormal basis of the complement of span{zeta}.
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(zeta / zeta_norm));
  const Eigen::MatrixXd q_full = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
  const Eigen::MatrixXd complement = q_full.rightCols(n);

  const auto rows = static_cast<Eigen::Index>(sys.rows.size());
  Eigen::MatrixXd design(rows, k);
  Eigen::VectorXcd g(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const SliceRow& row = sys.rows[static_cast<std::size_t>(r)];
    if (row.theta.size() != n) throw Error(ErrorCode::WrongDimension, "slice row direction has the wrong size");
    design(r, 0) = 1.0;
    design.row(r).tail(n) = row.theta.transpose();
    g(r) = row.g;
  }

  sys.conditioning = 0.0;
  if (rows >= n) {
    const Eigen::MatrixXd reduced = design * complement;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(reduced, Eigen::ComputeThinU | Eigen::ComputeThinV);
    sys.conditioning = svd.singularValues()(n - 1);
    if (sys.conditioning >= min_conditioning) {
      const Eigen::VectorXcd projected = svd.matrixU().transpose().cast<Complex>() * g;
      const Eigen::VectorXcd scaled = projected.cwiseQuotient(svd.singularValues().cast<Complex>());
      const Eigen::VectorXcd y = svd.matrixV().cast<Complex>() * scaled;
      const FieldValue f = complement.cast<Complex>() * y;
      sys.residual = (design.cast<Complex>() * f - g).norm();
      if (sys.residual > noise.relative * g.norm() + noise.absolute) {
        throw Error(ErrorCode::InconsistentRows, "slice rows disagree beyond the noise model (residual " +
                                                     std::to_string(sys.residual) + ")");
      }
      return f;
    }
  }
  throw Error(ErrorCode::RankDeficient,
              "design matrix conditioning " + std::to_string(sys.conditioning) + " below threshold");
}

DForm dform_spectrum_at(const FieldValue& F, const Covector& zeta) {
  const SpacetimeVec z = zeta.coords();
  if (F.size() != z.size()) throw Error(ErrorCode::WrongDimension, "F and zeta sizes differ");
  const Complex i(0.0, 1.0);
  const Eigen::Index k = z.size();
  DForm d = DForm::Zero(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a + 1; b < k; ++b) {
      d(a, b) = i * (z(b) * F(a) - z(a) * F(b));
      d(b, a) = -d(a, b);
    }
  }
  return d;
}

std::vector<std::pair<int, int>> dform_pairs(Eigen::Index n) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

ApertureInterpolator::ApertureInterpolator(const AcquisitionSet& acq) : acq_(&acq) {
  Eigen::Index offset = 0;
  for (const auto& p : acq.patches) {
    offsets_.push_back(offset);
    offset += p.size();
  }
}

std::optional<std::vector<std::pair<Eigen::Index, double>>> ApertureInterpolator::in_patch(
    std::size_t index, const Eigen::VectorXd& params) const {
  const DirectionPatch& patch = acq_->patches[index];
  const Eigen::Index axes = patch.parameter_count();
  std::array<std::array<Eigen::Index, 2>, kMaxAxes> node{};
  std::array<std::array<double, 2>, kMaxAxes> weight{};
  for (Eigen::Index a = 0; a < axes; ++a) {
    const int count = patch.samples[static_cast<std::size_t>(a)];
    const double c = patch.center(a);
    const double v = wrap_near(params(a), c);
    if (patch.periodic(a)) {
      const double u = (v - (c - std::numbers::pi)) / patch.step(a);
      const double f = std::floor(u);
      const auto i0 = static_cast<Eigen::Index>(((static_cast<long long>(f) % count) + count) % count);
      node[a] = {i0, (i0 + 1) % count};
      weight[a] = {1.0 - (u - f), u - f};
      continue;
    }
    if (std::abs(v - c) > patch.half_width(a) + 1e-12) return std::nullopt;
    if (count == 1) {
      node[a] = {0, 0};
      weight[a] = {1.0, 0.0};
      continue;
    }
    const double u = std::clamp((v - (c - patch.half_width(a))) / patch.step(a), 0.0, double(count - 1));
    const auto i0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(u)), count - 2);
    node[a] = {i0, i0 + 1};
    weight[a] = {1.0 - (u - double(i0)), u - double(i0)};
  }

  std::vector<std::pair<Eigen::Index, double>> out;
  const Eigen::Index corners = Eigen::Index(1) << axes;
  for (Eigen::Index corner = 0; corner < corners; ++corner) {
    double w = 1.0;
    Eigen::Index flat = 0;
    for (Eigen::Index a = 0; a < axes; ++a) {
      const int bit = (corner >> (axes - 1 - a)) & 1;
      w *= weight[a][bit];
      flat = flat * patch.samples[static_cast<std::size_t>(a)] + node[a][bit];
    }
    if (w > 0.0) out.emplace_back(offsets_[index] + flat, w);
  }
  return out;
}

std::optional<std::vector<std::pair<Eigen::Index, double>>> ApertureInterpolator::weights(const SpaceVec& theta) const {
  const Eigen::Index n = acq_->dimension();
  if (theta.size() != n) throw Error(ErrorCode::WrongDimension, "direction has the wrong size");
  std::vector<Eigen::VectorXd> charts;
  if (n == 2) {
    charts.push_back(Eigen::VectorXd::Constant(1, std::atan2(theta(0), theta(1))));
  } else {
    const double a = std::acos(std::clamp(theta(2), -1.0, 1.0));
    const double planar = std::hypot(theta(0), theta(1));
    std::vector<double> bs;
    if (planar < 1e-12) {
      // At a pole every b names the same direction.
      for (const auto& p : acq_->patches) bs.push_back(p.center(1));
    } else {
      bs.push_back(std::atan2(theta(0), theta(1)));
    }
    for (double b : bs) {
      charts.push_back(Eigen::Vector2d(a, b));
      charts.push_back(Eigen::Vector2d(-a, b + std::numbers::pi));
    }
  }
  for (std::size_t p = 0; p < acq_->patches.size(); ++p) {
    for (const auto& params : charts) {
      if (auto w = in_patch(p, params)) return w;
    }
  }
  return std::nullopt;
}

const char* to_string(BinStatus s) {
  switch (s) {
    case BinStatus::Recovered: return "recovered";
    case BinStatus::OutsideMask: return "outside-mask";
    case BinStatus::OutsideAperture: return "outside-aperture";
    case BinStatus::MissingBranch: return "missing-branch";
    case BinStatus::RankDeficient: return "rank-deficient";
    case BinStatus::InconsistentRows: return "inconsistent-rows";
  }
  return "?";
}

Eigen::Index DFormSpectrum::recovered() const {
  return std::count(status.begin(), status.end(), BinStatus::Recovered);
}

double DFormSpectrum::recovered_fraction() const {
  const Eigen::Index m = masked();
  return m == 0 ? 0.0 : double(recovered()) / double(m);
}

DForm DFormSpectrum::at(Eigen::Index bin) const {
  const Eigen::Index k = frequencies.axes();
  DForm d = DForm::Zero(k, k);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    d(i, j) = coefficients[p](bin);
    d(j, i) = -d(i, j);
  }
  return d;
}

InversionResult invert_sinogram(const Sinogram& sino, const Lattice& target, const InversionOptions& options) {
  const AcquisitionSet& acq = sino.acquisition;
  acq.validate();
  const Eigen::Index n = acq.dimension();
  if (target.axes() != n + 1) throw Error(ErrorCode::WrongDimension, "target lattice must have 1 + n axes");
  target.validate(2);
  for (Eigen::Index a = 0; a < n; ++a) {
    if (target.counts[a + 1] != acq.x_grid.counts[a] || !close_relative(target.spacing(a + 1), acq.x_grid.spacing(a))) {
      throw Error(ErrorCode::InvalidArgument, "target spatial axes must match the sinogram x-grid counts and spacing");
    }
  }
  if (n == 3 && options.circle_directions < 3) {
    throw Error(ErrorCode::InvalidArgument, "n = 3 inversion needs at least 3 circle directions");
  }

  const Lattice freqs = dual_lattice(target);
  InversionResult result;
  DFormSpectrum& spec = result.spectrum;
  spec.frequencies = freqs;
  spec.source = target;
  spec.pairs = dform_pairs(n);
  spec.mask = spacelike_mask(freqs, options.delta);
  spec.coefficients.assign(spec.pairs.size(), Eigen::VectorXcd::Zero(freqs.size()));
  spec.status.assign(static_cast<std::size_t>(freqs.size()), BinStatus::OutsideMask);

  const auto nd = static_cast<std::size_t>(sino.values.cols());
  std::vector<Eigen::VectorXcd> slices(nd);
  parallel_for(nd, [&](std::size_t k) { slices[k] = slice_lhs(sino, static_cast<Eigen::Index>(k)); });

  // Quadrature error bound carried through the x-DFT, per direction.
  double cell = 1.0;
  for (Eigen::Index a = 0; a < n; ++a) cell *= acq.x_grid.spacing(a);
  double propagated = 0.0;
  if (sino.errors.size() > 0) propagated = sino.errors.colwise().sum().maxCoeff() * cell;
  NoiseModel noise = options.noise;
  noise.absolute += 10.0 * propagated;

  const ApertureInterpolator interp(acq);
  const Eigen::Index spatial_size = acq.x_grid.size();
  const Eigen::Index total = freqs.size();
  const Eigen::Index chunk = 2048;

  parallel_for(static_cast<std::size_t>((total + chunk - 1) / chunk), [&](std::size_t b) {
    const Eigen::Index lo = static_cast<Eigen::Index>(b) * chunk;
    const Eigen::Index hi = std::min(total, lo + chunk);
    for (Eigen::Index p = lo; p < hi; ++p) {
      if (!spec.mask.inside(p)) continue;
      const Eigen::VectorXd z = freqs.point(p);
      const Covector zeta = Covector::from_coords(z);
      std::vector<SpaceVec> dirs;
      try {
        dirs = direction_set(zeta, options.circle_directions);
      } catch (const Error&) {
        spec.status[p] = BinStatus::RankDeficient;
        continue;
      }
      SliceSystem sys{zeta, {}, 0.0, 0.0};
      std::size_t missing = 0;
      const Eigen::Index xi_bin = p % spatial_size;
      for (const SpaceVec& theta : dirs) {
        const auto w = interp.weights(theta);
        if (!w) {
          ++missing;
          continue;
        }
        Complex g(0.0);
        for (const auto& [k, weight] : *w) g += weight * slices[static_cast<std::size_t>(k)](xi_bin);
        sys.rows.push_back({theta, g});
      }
      if (n == 2 && missing > 0) {
        spec.status[p] = missing == dirs.size() ? BinStatus::OutsideAperture : BinStatus::MissingBranch;
        continue;
      }
      if (n == 3 && sys.rows.size() < 3) {
        spec.status[p] = BinStatus::OutsideAperture;
        continue;
      }
      try {
        const FieldValue F = solve_gauge_quotient(sys, noise, options.min_conditioning);
        const DForm d = dform_spectrum_at(F, zeta);
        for (std::size_t q = 0; q < spec.pairs.size(); ++q) {
          spec.coefficients[q](p) = d(spec.pairs[q].first, spec.pairs[q].second);
        }
        spec.status[p] = BinStatus::Recovered;
      } catch (const Error& e) {
        spec.status[p] = e.code() == ErrorCode::InconsistentRows ? BinStatus::InconsistentRows : BinStatus::RankDeficient;
      }
    }
  });

  if (spec.recovered() == 0) {
    const bool single_branch =
        n == 2 && std::find(spec.status.begin(), spec.status.end(), BinStatus::MissingBranch) != spec.status.end();
    if (!single_branch) {
      throw Error(ErrorCode::ApertureTooSmall, "no space-like bin could be recovered from this aperture");
    }
    result.warnings.push_back(
        "no bin recovered: the aperture supplies only one of theta_+ / theta_- per frequency, so the curl is not "
        "determined (both direction branches are required in n = 2)");
  }

  std::vector<Eigen::VectorXcd> outputs = n == 2 ? curl_spectrum(spec) : spec.coefficients;
  result.spatial = FieldGrid(target, static_cast<Eigen::Index>(outputs.size()));
  parallel_for(outputs.size(), [&](std::size_t c) { result.spatial.components[c] = idft(outputs[c], target); });
  return result;
}

std::vector<Eigen::VectorXcd> curl_spectrum(const DFormSpectrum& spectrum) {
  if (spectrum.pairs.size() != 3) throw Error(ErrorCode::WrongDimension, "curl spectrum is defined for n = 2");
  return {-spectrum.coefficients[2], spectrum.coefficients[1], -spectrum.coefficients[0]};
}

std::vector<Eigen::VectorXcd> analytic_dform_spectrum(const AnalyticField& f, const Lattice& frequencies) {
  const auto pairs = dform_pairs(f.dimension());
  std::vector<Eigen::VectorXcd> out(pairs.size(), Eigen::VectorXcd::Zero(frequencies.size()));
  const Eigen::Index total = frequencies.size();
  const Eigen::Index chunk = 4096;
  parallel_for(static_cast<std::size_t>((total + chunk - 1) / chunk), [&](std::size_t b) {
    const Eigen::Index lo = static_cast<Eigen::Index>(b) * chunk;
    const Eigen::Index hi = std::min(total, lo + chunk);
    for (Eigen::Index p = lo; p < hi; ++p) {
      const Eigen::VectorXd z = frequencies.point(p);
      const DForm d = dform_spectrum_at(f.fourier(z), Covector::from_coords(z));
      for (std::size_t q = 0; q < pairs.size(); ++q) out[q](p) = d(pairs[q].first, pairs[q].second);
    }
  });
  return out;
}

std::vector<Eigen::VectorXcd> sampled_dform_spectrum(const VectorField& f, const Lattice& lattice) {
  const auto pairs = dform_pairs(f.dimension());
  std::vector<Eigen::VectorXcd> grids(pairs.size(), Eigen::VectorXcd::Zero(lattice.size()));
  const Eigen::Index total = lattice.size();
  const Eigen::Index chunk = 4096;
  parallel_for(static_cast<std::size_t>((total + chunk - 1) / chunk), [&](std::size_t b) {
    const Eigen::Index lo = static_cast<Eigen::Index>(b) * chunk;
    const Eigen::Index hi = std::min(total, lo + chunk);
    for (Eigen::Index p = lo; p < hi; ++p) {
      const DForm d = d_form(f, SpacetimeVec(lattice.point(p)));
      for (std::size_t q = 0; q < pairs.size(); ++q) grids[q](p) = d(pairs[q].first, pairs[q].second);
    }
  });
  parallel_for(pairs.size(), [&](std::size_t q) { grids[q] = dft(grids[q], lattice); });
  return grids;
}

double masked_relative_error(const std::vector<Eigen::VectorXcd>& a, const std::vector<Eigen::VectorXcd>& b,
                             const Eigen::Array<bool, Eigen::Dynamic, 1>& mask) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "component counts differ");
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    for (Eigen::Index p = 0; p < mask.size(); ++p) {
      if (!mask(p)) continue;
      num += std::norm(a[c](p) - b[c](p));
      den += std::norm(b[c](p));
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace lightray
