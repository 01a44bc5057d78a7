#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lightray/fields.hpp"
#include "lightray/raytransform.hpp"
#include "lightray/spectral.hpp"

namespace lightray {

struct SliceRow {
  SpaceVec theta;
  Complex g;
};

/// Rows (1, theta_k) . F = g_k at one space-like frequency.
struct SliceSystem {
  Covector zeta;
  std::vector<SliceRow> rows;
  /// Smallest singular value of the design matrix on the complement of
  /// span{zeta}; filled by solve_gauge_quotient.
  double conditioning = 0.0;
  /// Least-squares residual norm; filled by solve_gauge_quotient.
  double residual = 0.0;
};

inline constexpr double kMinConditioning = 1e-8;

/// Rows are inconsistent when the residual exceeds relative * |g| + absolute.
struct NoiseModel {
  double relative = 0.5;
  double absolute = 0.0;
};

/// Minimum-norm least-squares F with F orthogonal to zeta (Euclidean).
FieldValue solve_gauge_quotient(SliceSystem& sys, const NoiseModel& noise = {},
                                double min_conditioning = kMinConditioning);

/// \hat{df}_ij = i (zeta_j F_i - zeta_i F_j).
DForm dform_spectrum_at(const FieldValue& F, const Covector& zeta);

/// Index pairs (i, j), i < j, in the order (0,1), (0,2), ..., (1,2), ...
std::vector<std::pair<int, int>> dform_pairs(Eigen::Index n);

/// Piecewise-linear interpolation weights over an acquisition's direction
/// samples, in the angle a (n = 2) or the (a, b) chart (n = 3).
class ApertureInterpolator {
 public:
  explicit ApertureInterpolator(const AcquisitionSet& acq);

  /// (direction index, weight) pairs summing to one, or nullopt when theta is
  /// outside every patch.
  std::optional<std::vector<std::pair<Eigen::Index, double>>> weights(const SpaceVec& theta) const;

 private:
  std::optional<std::vector<std::pair<Eigen::Index, double>>> in_patch(std::size_t patch,
                                                                        const Eigen::VectorXd& params) const;

  const AcquisitionSet* acq_;
  std::vector<Eigen::Index> offsets_;
};

enum class BinStatus : std::uint8_t {
  Recovered,
  OutsideMask,
  OutsideAperture,
  MissingBranch,
  RankDeficient,
  InconsistentRows,
};

const char* to_string(BinStatus s);

struct DFormSpectrum {
  Lattice frequencies;
  Lattice source;
  std::vector<std::pair<int, int>> pairs;
  std::vector<Eigen::VectorXcd> coefficients;  // one per pair, zero off the recovered set
  ConeMask mask;
  std::vector<BinStatus> status;

  Eigen::Index recovered() const;
  Eigen::Index masked() const { return mask.count(); }
  double recovered_fraction() const;
  DForm at(Eigen::Index bin) const;
};

struct InversionOptions {
  double delta = 0.1;
  int circle_directions = 6;
  NoiseModel noise;
  double min_conditioning = kMinConditioning;
};

struct InversionResult {
  DFormSpectrum spectrum;
  /// n = 2: curl (c0, c1, c2); n = 3: d-form pairs in dform_pairs() order.
  FieldGrid spatial;
  std::vector<std::string> warnings;
};

/// Spatial axes of `target` (1 + n axes) must match the sinogram x-grid in
/// counts and spacing.
InversionResult invert_sinogram(const Sinogram& sino, const Lattice& target, const InversionOptions& options = {});

/// Curl spectrum (n = 2) from d-form pair spectra: (-D12, D02, -D01).
std::vector<Eigen::VectorXcd> curl_spectrum(const DFormSpectrum& spectrum);

/// Reference d-form pair spectra of an analytic field on `frequencies`:
/// \hat{df}_ij = i (zeta_j \hat f_i - zeta_i \hat f_j) from the closed-form transform.
std::vector<Eigen::VectorXcd> analytic_dform_spectrum(const AnalyticField& f, const Lattice& frequencies);

/// Reference d-form pair spectra from the DFT of d_form samples on `lattice`.
std::vector<Eigen::VectorXcd> sampled_dform_spectrum(const VectorField& f, const Lattice& lattice);

/// sqrt(sum |a - b|^2 / sum |b|^2) over bins where `mask` is true, all pairs.
double masked_relative_error(const std::vector<Eigen::VectorXcd>& a, const std::vector<Eigen::VectorXcd>& b,
                             const Eigen::Array<bool, Eigen::Dynamic, 1>& mask);

}  // namespace lightray
