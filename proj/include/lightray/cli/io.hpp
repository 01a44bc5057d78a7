#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lightray/grid.hpp"
#include "lightray/raytransform.hpp"

namespace lightray::cli {

inline constexpr std::string_view kGridMagic = "LRGF1";

/// Binary grid file:
///   "LRGF1", u32 axes, u32 components, u64 counts[axes], f64 origin[axes],
///   f64 spacing[axes], u32 tag length, tag bytes, then little-endian f64
///   (re, im) pairs, component-major and row-major over axes (last fastest).
struct GridFile {
  Lattice lattice;
  std::vector<Eigen::VectorXcd> components;
  std::string convention;
};

std::string encode_grid(const GridFile& grid);
/// GridBadMagic on a wrong magic, GridTruncated on a short header or payload,
/// GridMalformed on inconsistent header values or trailing bytes.
GridFile decode_grid(std::string_view bytes);

void write_grid(const std::filesystem::path& path, const GridFile& grid);
GridFile read_grid(const std::filesystem::path& path);

/// Sinogram as a grid: axis 0 is the direction index (origin 0, spacing 1),
/// the remaining axes the x-grid. Component 0 holds values, component 1 the
/// quadrature error estimates.
GridFile sinogram_grid(const Sinogram& sino);
/// Restores values and errors onto `acq`; throws ConfigInvalid when the file
/// shape does not match the acquisition.
Sinogram sinogram_from_grid(const GridFile& grid, const AcquisitionSet& acq);

/// Comma-separated table with numbers at 17 significant digits.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& cell(double v);
  CsvTable& cell(long long v);
  CsvTable& cell(const std::string& s);
  void end_row();

  const std::string& text() const { return text_; }

 private:
  void separator();

  std::size_t columns_;
  std::size_t filled_ = 0;
  std::string text_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace lightray::cli
