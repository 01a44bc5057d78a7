#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "lightray/minkowski.hpp"

namespace lightray {

using Complex = std::complex<double>;
using MultiIndex = std::array<Eigen::Index, kMaxAxes>;

/// Regular lattice origin + i * spacing, i in [0, counts). Flat indices are
/// row-major: the last axis varies fastest.
struct Lattice {
  Eigen::VectorXd origin;
  Eigen::VectorXd spacing;
  std::vector<Eigen::Index> counts;

  Lattice() = default;
  Lattice(Eigen::VectorXd o, Eigen::VectorXd h, std::vector<Eigen::Index> n);

  Eigen::Index axes() const { return static_cast<Eigen::Index>(counts.size()); }
  Eigen::Index size() const;
  Eigen::Index stride(Eigen::Index axis) const;

  Eigen::Index flat(const MultiIndex& index) const;
  MultiIndex unflat(Eigen::Index flat) const;

  double coordinate(Eigen::Index axis, Eigen::Index i) const { return origin(axis) + double(i) * spacing(axis); }
  Eigen::VectorXd point(Eigen::Index flat) const;
  /// origin + (counts - 1) * spacing on each axis.
  Eigen::VectorXd upper() const;

  /// Throws InvalidArgument unless sizes agree, spacing > 0 and counts >= min_count.
  void validate(Eigen::Index min_count = 1) const;

  bool operator==(const Lattice& other) const;
};

/// Samples of a (1+n)-component field on a (1+n)-axis lattice.
struct FieldGrid {
  Lattice lattice;
  std::vector<Eigen::VectorXcd> components;

  FieldGrid() = default;
  FieldGrid(Lattice l, Eigen::Index component_count);

  Eigen::Index space_dimension() const { return lattice.axes() - 1; }
  /// Throws unless the lattice has 3 or 4 axes with >= 8 points each and
  /// every component has one sample per lattice point.
  void validate() const;
};

}  // namespace lightray
