#include "lightray/grid.hpp"

#include <cmath>

namespace lightray {

Lattice::Lattice(Eigen::VectorXd o, Eigen::VectorXd h, std::vector<Eigen::Index> n)
    : origin(std::move(o)), spacing(std::move(h)), counts(std::move(n)) {
  validate();
}

Eigen::Index Lattice::size() const {
  Eigen::Index total = counts.empty() ? 0 : 1;
  for (Eigen::Index c : counts) total *= c;
  return total;
}

Eigen::Index Lattice::stride(Eigen::Index axis) const {
  Eigen::Index s = 1;
  for (Eigen::Index a = axes() - 1; a > axis; --a) s *= counts[a];
  return s;
}

Eigen::Index Lattice::flat(const MultiIndex& index) const {
  Eigen::Index f = 0;
  for (Eigen::Index a = 0; a < axes(); ++a) f = f * counts[a] + index[a];
  return f;
}

MultiIndex Lattice::unflat(Eigen::Index flat) const {
  MultiIndex index{};
  for (Eigen::Index a = axes() - 1; a >= 0; --a) {
    index[a] = flat % counts[a];
    flat /= counts[a];
  }
  return index;
}

Eigen::VectorXd Lattice::point(Eigen::Index flat_index) const {
  const MultiIndex index = unflat(flat_index);
  Eigen::VectorXd p(axes());
  for (Eigen::Index a = 0; a < axes(); ++a) p(a) = coordinate(a, index[a]);
  return p;
}

Eigen::VectorXd Lattice::upper() const {
  Eigen::VectorXd u(axes());
  for (Eigen::Index a = 0; a < axes(); ++a) u(a) = coordinate(a, counts[a] - 1);
  return u;
}

void Lattice::validate(Eigen::Index min_count) const {
  const auto k = static_cast<Eigen::Index>(counts.size());
  if (k == 0 || k > kMaxAxes || origin.size() != k || spacing.size() != k) {
    throw Error(ErrorCode::InvalidArgument, "lattice origin, spacing and counts must have matching sizes");
  }
  for (Eigen::Index a = 0; a < k; ++a) {
    if (!(spacing(a) > 0.0) || !std::isfinite(spacing(a)) || !std::isfinite(origin(a))) {
      throw Error(ErrorCode::InvalidArgument, "lattice spacing must be positive and finite on axis " + std::to_string(a));
    }
    if (counts[a] < min_count) {
      throw Error(ErrorCode::InvalidArgument, "lattice axis " + std::to_string(a) + " has " +
                                                  std::to_string(counts[a]) + " points, need at least " +
                                                  std::to_string(min_count));
    }
  }
}

bool Lattice::operator==(const Lattice& other) const {
  return counts == other.counts && origin == other.origin && spacing == other.spacing;
}

FieldGrid::FieldGrid(Lattice l, Eigen::Index component_count) : lattice(std::move(l)) {
  components.assign(static_cast<std::size_t>(component_count), Eigen::VectorXcd::Zero(lattice.size()));
}

void FieldGrid::validate() const {
  lattice.validate(8);
  if (lattice.axes() != 3 && lattice.axes() != 4) {
    throw Error(ErrorCode::WrongDimension, "field grids have 1 + n axes with n in {2, 3}");
  }
  for (const auto& c : components) {
    if (c.size() != lattice.size()) {
      throw Error(ErrorCode::InvalidArgument, "component sample count does not match the lattice");
    }
  }
}

}  // namespace lightray
