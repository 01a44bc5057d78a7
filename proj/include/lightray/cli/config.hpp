#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lightray/fields.hpp"
#include "lightray/inversion.hpp"
#include "lightray/raytransform.hpp"
#include "lightray/scenarios.hpp"

namespace lightray::cli {

/// Flat `key = value` text. Keys are dotted paths such as
/// `acquisition.patch.center`; `#` starts a comment. Later duplicates are an
/// error so that a config always means one thing.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  /// One `key = value` line per entry, keys sorted.
  std::string serialize() const;

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  void set(const std::string& key, std::string value);
  void erase(const std::string& key) { entries_.erase(key); }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  bool operator==(const Config& other) const = default;

 private:
  std::map<std::string, std::string> entries_;
};

/// Shortest text for `v` at 17 significant digits, independent of locale.
std::string format_number(double v);

enum class Branches { Both, Plus };

/// Everything one CLI run needs, validated on construction from a Config.
struct RunConfig {
  Eigen::Index n = 2;
  std::uint64_t seed = 0;
  std::filesystem::path output = "out";

  builtin::FieldSpec field;
  std::filesystem::path field_grid;  // set when field.name = grid

  Eigen::Index x_count = 64;
  double x_spacing = 0.25;
  std::optional<Eigen::VectorXd> x_origin;  // centered when absent
  Branches branches = Branches::Both;
  Eigen::VectorXd patch_center;
  Eigen::VectorXd patch_half_width;
  std::vector<int> patch_samples;

  Quadrature quadrature;

  Eigen::Index t_count = 64;
  double t_spacing = 0.25;
  std::optional<double> t_origin;  // centered when absent

  InversionOptions inversion;
  std::filesystem::path sinogram_input;  // reconstruct reads this when set

  int slice_directions = 20;
  int slice_samples = 200;
  double slice_xi_max = 4.0;
  double slice_min_relative = 1e-3;
  bool slice_refine = false;

  enum class SurfaceKind { None, Cone, Shell, Cylinder };
  SurfaceKind surface_kind = SurfaceKind::None;
  GammaSurface surface;
  Cylinder cylinder;
  SupportOptions support;

  static RunConfig from_config(const Config& config);
  Config to_config() const;

  AcquisitionSet acquisition() const;
  /// Space-time lattice: the time axis followed by the acquisition x-grid.
  Lattice target() const;
  bool analytic_field() const { return field.name != "grid"; }
};

}  // namespace lightray::cli
