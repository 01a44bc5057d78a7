#include "lightray/cli/commands.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "lightray/cli/io.hpp"
#include "lightray/spectral.hpp"

namespace lightray::cli {

namespace {

/// Files registered here are deleted again unless the command commits.
class Outputs {
 public:
  explicit Outputs(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create output directory " + dir_.string());
  }
  Outputs(const Outputs&) = delete;
  Outputs& operator=(const Outputs&) = delete;
  ~Outputs() {
    if (committed_) return;
    for (const auto& p : files_) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
  }

  std::filesystem::path write(const std::string& name, const std::string& text) {
    const auto path = dir_ / name;
    files_.push_back(path);
    write_text(path, text);
    return path;
  }

  std::vector<std::filesystem::path> commit() {
    committed_ = true;
    return files_;
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
  bool committed_ = false;
};

std::string pair_names(Eigen::Index n) {
  std::string s;
  for (const auto& [i, j] : dform_pairs(n)) s += (s.empty() ? "" : ",") + std::to_string(i) + std::to_string(j);
  return s;
}

AnalyticField require_analytic(const RunConfig& c, const char* command) {
  if (!c.analytic_field()) {
    throw Error(ErrorCode::ConfigInvalid, std::string("'field.name': ") + command + " needs a built-in analytic field");
  }
  return builtin::make_field(c.field);
}

const Envelope& envelope_of(const RunConfig& c) { return *c.field.envelope; }

/// Uniform draw in the parameter box of one of the acquisition's patches.
SpaceVec random_direction(const AcquisitionSet& acq, std::mt19937_64& rng) {
  const auto& patch = acq.patches[rng() % acq.patches.size()];
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd p = patch.center;
  for (Eigen::Index a = 0; a < p.size(); ++a) p(a) += patch.half_width(a) * unit(rng);
  return spherical_theta(p);
}

std::string summary_line(const std::string& key, double v) { return key + " = " + format_number(v) + "\n"; }
std::string summary_line(const std::string& key, long long v) { return key + " = " + std::to_string(v) + "\n"; }

}  // namespace

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::InvalidArgument:
    case ErrorCode::WrongDimension:
    case ErrorCode::NoEnvelope:
    case ErrorCode::GridBadMagic:
    case ErrorCode::GridTruncated:
    case ErrorCode::GridMalformed:
      return kExitConfig;
    case ErrorCode::QuadratureBudgetExceeded:
      return kExitQuadrature;
    case ErrorCode::OutOfBand:
      return kExitOutOfBand;
    case ErrorCode::ApertureTooSmall:
      return kExitApertureTooSmall;
    default:
      return kExitFailure;
  }
}

std::unique_ptr<VectorField> make_run_field(const RunConfig& c) {
  if (c.analytic_field()) return std::make_unique<AnalyticField>(builtin::make_field(c.field));
  GridFile g = read_grid(c.field_grid);
  FieldGrid samples;
  samples.lattice = g.lattice;
  samples.components = std::move(g.components);
  if (samples.lattice.axes() != c.n + 1 || static_cast<Eigen::Index>(samples.components.size()) != c.n + 1) {
    throw Error(ErrorCode::ConfigInvalid, "'field.grid_file': grid needs 1 + n axes and 1 + n components");
  }
  samples.validate();
  return std::make_unique<GridField>(std::move(samples), c.field.envelope);
}

CommandOutcome cmd_forward(const RunConfig& c) {
  const auto f = make_run_field(c);
  const AcquisitionSet acq = c.acquisition();
  Outputs out(c.output);
  const Sinogram sino = make_sinogram(*f, acq, c.quadrature);

  const Eigen::Index n = c.n;
  std::vector<std::string> header;
  for (Eigen::Index a = 0; a < n; ++a) header.push_back("x" + std::to_string(a));
  for (Eigen::Index a = 0; a < n; ++a) header.push_back("theta" + std::to_string(a));
  header.insert(header.end(), {"real", "imag", "quadrature_error"});
  CsvTable csv(header);
  const auto thetas = acq.directions();
  double max_abs = 0.0, max_err = 0.0;
  for (Eigen::Index k = 0; k < sino.values.cols(); ++k) {
    for (Eigen::Index i = 0; i < sino.values.rows(); ++i) {
      const Eigen::VectorXd x = acq.x_grid.point(i);
      for (Eigen::Index a = 0; a < n; ++a) csv.cell(x(a));
      for (Eigen::Index a = 0; a < n; ++a) csv.cell(thetas[static_cast<std::size_t>(k)](a));
      const Complex v = sino.values(i, k);
      csv.cell(v.real()).cell(v.imag()).cell(sino.errors(i, k));
      csv.end_row();
      max_abs = std::max(max_abs, std::abs(v));
      max_err = std::max(max_err, sino.errors(i, k));
    }
  }
  out.write("sinogram.csv", csv.text());
  out.write("sinogram.lrgf", encode_grid(sinogram_grid(sino)));

  CommandOutcome o;
  o.summary = summary_line("rays", static_cast<long long>(sino.values.size())) + summary_line("max_abs_value", max_abs) +
              summary_line("max_quadrature_error", max_err);
  o.files = out.commit();
  return o;
}

CommandOutcome cmd_slice_check(const RunConfig& c) {
  const AnalyticField f = require_analytic(c, "slice-check");
  RunConfig grid_config = c;
  if (c.slice_refine) {
    // Twice the time samples at the same spacing halves the tau spacing.
    grid_config.t_count = 2 * c.t_count;
    if (c.t_origin) grid_config.t_origin = *c.t_origin - 0.5 * double(c.t_count) * c.t_spacing;
  }
  const Lattice lattice = grid_config.target();
  validate_periodization(envelope_of(c), lattice);
  const AcquisitionSet base = c.acquisition();
  Outputs out(c.output);

  const SpectralGrid spec = dft_field(sample_field(f, lattice));

  std::mt19937_64 rng(c.seed);
  AcquisitionSet acq;
  acq.x_grid = base.x_grid;
  for (int k = 0; k < c.slice_directions; ++k) {
    const SpaceVec theta = random_direction(base, rng);
    Eigen::VectorXd angles(c.n - 1);
    if (c.n == 2) {
      angles << std::atan2(theta(0), theta(1));
    } else {
      angles << std::acos(std::clamp(theta(2), -1.0, 1.0)), std::atan2(theta(0), theta(1));
    }
    acq.patches.push_back({angles, Eigen::VectorXd::Zero(c.n - 1), std::vector<int>(c.n - 1, 1)});
  }
  const Sinogram sino = make_sinogram(f, acq, c.quadrature);
  const auto thetas = acq.directions();
  const Lattice xi_lattice = dual_lattice(acq.x_grid);

  const Eigen::Index n = c.n;
  std::vector<std::string> header;
  for (Eigen::Index a = 0; a < n; ++a) header.push_back("theta" + std::to_string(a));
  for (Eigen::Index a = 0; a < n; ++a) header.push_back("xi" + std::to_string(a));
  header.insert(header.end(), {"lhs_real", "lhs_imag", "rhs_real", "rhs_imag", "relative_gap"});
  CsvTable csv(header);

  double max_gap = 0.0;
  long long rows = 0;
  const int per_direction = (c.slice_samples + c.slice_directions - 1) / c.slice_directions;
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(thetas.size()) && rows < c.slice_samples; ++k) {
    const SpaceVec& theta = thetas[static_cast<std::size_t>(k)];
    const Eigen::VectorXcd lhs = slice_lhs(sino, k);
    // Candidate frequencies: in the disc |xi| <= xi_max with data magnitude
    // at least min_relative of the largest in the disc.
    std::vector<Eigen::Index> disc;
    double peak = 0.0;
    for (Eigen::Index p = 0; p < xi_lattice.size(); ++p) {
      if (xi_lattice.point(p).norm() > c.slice_xi_max) continue;
      disc.push_back(p);
      peak = std::max(peak, std::abs(lhs(p)));
    }
    std::vector<Eigen::Index> pool;
    for (auto p : disc) {
      if (std::abs(lhs(p)) >= c.slice_min_relative * peak) pool.push_back(p);
    }
    for (int s = 0; s < per_direction && !pool.empty() && rows < c.slice_samples; ++s) {
      const std::size_t pick = static_cast<std::size_t>(rng() % pool.size());
      const Eigen::Index p = pool[pick];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
      const SpaceVec xi = xi_lattice.point(p);
      const Complex rhs = slice_rhs(spec, theta, xi);
      const double diff = std::abs(lhs(p) - rhs);
      const double gap = diff == 0.0 ? 0.0 : diff / std::abs(rhs);
      max_gap = std::max(max_gap, gap);
      for (Eigen::Index a = 0; a < n; ++a) csv.cell(theta(a));
      for (Eigen::Index a = 0; a < n; ++a) csv.cell(xi(a));
      csv.cell(lhs(p).real()).cell(lhs(p).imag()).cell(rhs.real()).cell(rhs.imag()).cell(gap);
      csv.end_row();
      ++rows;
    }
  }

  CommandOutcome o;
  o.summary = summary_line("samples", rows) + summary_line("time_samples", static_cast<long long>(lattice.counts[0])) +
              summary_line("max_gap", max_gap);
  out.write("slice_check.csv", csv.text());
  out.write("slice_summary.txt", o.summary);
  o.files = out.commit();
  return o;
}

CommandOutcome cmd_reconstruct(const RunConfig& c) {
  const AcquisitionSet acq = c.acquisition();
  const Lattice target = c.target();
  validate_periodization(envelope_of(c), target);
  Outputs out(c.output);

  Sinogram sino;
  if (!c.sinogram_input.empty()) {
    sino = sinogram_from_grid(read_grid(c.sinogram_input), acq);
  } else {
    sino = make_sinogram(*make_run_field(c), acq, c.quadrature);
  }
  sino.envelope = c.field.envelope;
  sino.quadrature = c.quadrature;

  const InversionResult res = invert_sinogram(sino, target, c.inversion);
  const DFormSpectrum& spec = res.spectrum;
  const Eigen::Index n = c.n;

  GridFile spectrum{spec.frequencies, spec.coefficients,
                    "dform-spectrum;pairs=" + pair_names(n) + ";" + std::string(kFourierConvention)};
  out.write("spectrum.lrgf", encode_grid(spectrum));
  GridFile spatial{res.spatial.lattice, res.spatial.components,
                   n == 2 ? std::string("curl;c0,c1,c2") : "dform;pairs=" + pair_names(n)};
  out.write("spatial.lrgf", encode_grid(spatial));

  std::vector<std::string> header{"bin", "tau"};
  for (Eigen::Index a = 0; a < n; ++a) header.push_back("xi" + std::to_string(a));
  header.push_back("reason");
  CsvTable unrecovered(header);
  for (Eigen::Index p = 0; p < spec.frequencies.size(); ++p) {
    if (!spec.mask.inside(p) || spec.status[static_cast<std::size_t>(p)] == BinStatus::Recovered) continue;
    const Eigen::VectorXd zeta = spec.frequencies.point(p);
    unrecovered.cell(static_cast<long long>(p));
    for (Eigen::Index a = 0; a <= n; ++a) unrecovered.cell(zeta(a));
    unrecovered.cell(std::string(to_string(spec.status[static_cast<std::size_t>(p)])));
    unrecovered.end_row();
  }
  out.write("unrecovered.csv", unrecovered.text());

  double max_coefficient = 0.0;
  for (const auto& comp : spec.coefficients) max_coefficient = std::max(max_coefficient, comp.cwiseAbs().maxCoeff());

  CommandOutcome o;
  o.warnings = res.warnings;
  o.summary = summary_line("masked_bins", static_cast<long long>(spec.masked())) +
              summary_line("recovered_bins", static_cast<long long>(spec.recovered())) +
              summary_line("max_abs_coefficient", max_coefficient);

  if (c.analytic_field()) {
    // The curl components are the d-form pairs up to order and sign, so the
    // masked L2 errors of the two agree.
    const AnalyticField f = builtin::make_field(c.field);
    const auto exact = analytic_dform_spectrum(f, spec.frequencies);
    const auto sampled = sampled_dform_spectrum(f, target);
    auto norm_on_mask = [&](const std::vector<Eigen::VectorXcd>& v) {
      double s = 0.0;
      for (const auto& comp : v) {
        for (Eigen::Index p = 0; p < comp.size(); ++p) {
          if (spec.mask.inside(p)) s += std::norm(comp(p));
        }
      }
      return std::sqrt(s);
    };
    CsvTable err({"metric", "value"});
    err.cell(std::string("masked_bins")).cell(static_cast<long long>(spec.masked())).end_row();
    err.cell(std::string("recovered_bins")).cell(static_cast<long long>(spec.recovered())).end_row();
    err.cell(std::string("truth_norm")).cell(norm_on_mask(exact)).end_row();
    err.cell(std::string("recovered_norm")).cell(norm_on_mask(spec.coefficients)).end_row();
    const double rel_exact = masked_relative_error(spec.coefficients, exact, spec.mask.inside);
    const double rel_sampled = masked_relative_error(spec.coefficients, sampled, spec.mask.inside);
    auto error_norm = [&](const std::vector<Eigen::VectorXcd>& truth) {
      std::vector<Eigen::VectorXcd> diff(truth.size());
      for (std::size_t q = 0; q < truth.size(); ++q) diff[q] = spec.coefficients[q] - truth[q];
      return norm_on_mask(diff);
    };
    err.cell(std::string("error_norm_analytic")).cell(error_norm(exact)).end_row();
    err.cell(std::string("error_norm_dft")).cell(error_norm(sampled)).end_row();
    err.cell(std::string("relative_error_analytic")).cell(rel_exact).end_row();
    err.cell(std::string("relative_error_dft")).cell(rel_sampled).end_row();
    out.write("error.csv", err.text());
    o.summary += summary_line("relative_error_analytic", rel_exact) + summary_line("relative_error_dft", rel_sampled);
  }
  o.files = out.commit();
  return o;
}

CommandOutcome cmd_support_demo(const RunConfig& c) {
  if (c.surface_kind == RunConfig::SurfaceKind::None) {
    throw Error(ErrorCode::ConfigInvalid, "'surface.kind': support-demo needs a surface");
  }
  const AcquisitionSet acq = c.acquisition();
  CommandOutcome o;

  if (c.surface_kind == RunConfig::SurfaceKind::Cylinder) {
    Outputs out(c.output);
    const RayMask mask = cylinder_aperture(c.cylinder, acq);
    const double fraction = reachable_fraction(c.cylinder, acq, c.support.points_per_axis, c.seed);
    CsvTable csv({"metric", "value"});
    csv.cell(std::string("aperture_rays")).cell(static_cast<long long>(mask.count())).end_row();
    csv.cell(std::string("total_rays")).cell(static_cast<long long>(mask.size())).end_row();
    csv.cell(std::string("reachable_fraction")).cell(fraction).end_row();
    o.summary = "surface = cylinder\n" + summary_line("aperture_rays", static_cast<long long>(mask.count())) +
                summary_line("total_rays", static_cast<long long>(mask.size())) +
                summary_line("reachable_fraction", fraction);
    out.write("support_report.csv", csv.text());
    out.write("support_summary.txt", o.summary);
    o.files = out.commit();
    return o;
  }

  const AnalyticField f = require_analytic(c, "support-demo");
  const Lattice target = c.target();
  validate_periodization(envelope_of(c), target);
  Outputs out(c.output);
  const RecoveryReport r = support_experiment(f, c.surface, acq, c.quadrature, target, c.support);

  CsvTable csv({"region", "points", "recovered_max", "reference_max", "truth_max"});
  for (const auto& row : r.table) {
    csv.cell(row.region).cell(static_cast<long long>(row.points)).cell(row.recovered_max);
    csv.cell(row.reference_max).cell(row.truth_max).end_row();
  }
  std::string s = std::string("surface = ") + to_string(c.surface.kind) + "\n";
  s += summary_line("exterior_residual", r.exterior_residual);
  s += summary_line("interior_magnitude", r.interior_magnitude);
  s += summary_line("noise_floor", r.noise_floor);
  s += summary_line("zero_field_residual", r.zero_field_residual);
  s += summary_line("recovered_fraction", r.recovered_fraction);
  s += summary_line("aperture_rays", static_cast<long long>(r.aperture_rays));
  s += summary_line("total_rays", static_cast<long long>(r.total_rays));
  s += std::string("interior_curl_nontrivial = ") + (r.interior_curl_nontrivial ? "true" : "false") + "\n";
  s += std::string("passed = ") + (r.passed ? "true" : "false") + "\n";
  o.summary = s;
  out.write("support_report.csv", csv.text());
  out.write("support_summary.txt", s);
  o.files = out.commit();
  o.exit_code = r.passed ? kExitOk : kExitExperimentFailed;
  return o;
}

std::string formats_text() {
  return R"(lightray file formats

CONFIG (text, one `key = value` per line, `#` starts a comment, keys unique)
  n                              2 or 3
  seed                           integer >= 0, feeds every random draw (default 0)
  output                         output directory (default out)
  field.name                     zero | gaussian | rotational | poly_gaussian | gauge |
                                 poly_gaussian_plus_gauge | grid
  field.sigma, field.amplitude   Gaussian width and overall factor
  field.center                   1 + n numbers (poly_gaussian only)
  field.potential                0..4, potential index for gauge fields
  field.envelope.speed/.radius   support envelope |x| <= C|t| + R, 0 <= C < 1
  field.grid_file                LRGF1 file with 1 + n axes and 1 + n components
  acquisition.x.count/.spacing   x-grid points per axis and spacing
  acquisition.x.origin           n numbers (default: centered grid)
  acquisition.branches           both | plus; n = 2 adds the patch rotated by pi
  acquisition.patch.center       n - 1 angles: a (n = 2, theta = (sin a, cos a))
                                 or (a, b) (n = 3, polar and azimuth)
  acquisition.patch.half_width   n - 1 half widths; >= pi samples the axis periodically
  acquisition.patch.samples      n - 1 sample counts
  quadrature.rule                adaptive | simpson
  quadrature.abs_tol, .max_evals, .panels, .max_panel_width
  spectral.t.count/.spacing/.origin   time axis of the reconstruction grid
  inversion.delta                space-like mask margin in [0, 1)
  inversion.circle_directions    directions per admissible circle (n = 3)
  inversion.noise.relative/.absolute, inversion.min_conditioning
  reconstruct.sinogram           LRGF1 sinogram to invert instead of simulating
  slice.directions, slice.samples, slice.xi_max, slice.min_relative, slice.refine
  surface.kind                   none | cone | shell | cylinder
  surface.t0, surface.x0, surface.c, surface.rho, surface.radius, surface.height
  support.margin, support.points_per_axis, support.box_fraction

GRID FILE (LRGF1, little-endian)
  5 bytes  magic "LRGF1"
  u32      axes
  u32      components
  u64      counts[axes]
  f64      origin[axes]
  f64      spacing[axes]
  u32      convention tag length, then the tag bytes
  payload  f64 (real, imag) pairs, component-major, row-major over axes
           (last axis fastest); 16 * components * prod(counts) bytes
  Sinograms use axis 0 for the direction index and components (value, error).

CSV
  Comma separated with a header row. Numbers carry 17 significant digits
  with '.' as the decimal separator.
  sinogram.csv       x*, theta*, real, imag, quadrature_error
  slice_check.csv    theta*, xi*, lhs_real, lhs_imag, rhs_real, rhs_imag, relative_gap
  unrecovered.csv    bin, tau, xi*, reason
  error.csv          metric, value
  support_report.csv region, points, recovered_max, reference_max, truth_max

EXIT CODES
  0 success, 1 other failure, 2 invalid config or input file,
  3 quadrature budget exceeded, 4 frequency out of band,
  5 aperture too small, 6 support experiment failed
)";
}

}  // namespace lightray::cli
