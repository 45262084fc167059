#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace scorematch {

// One axis of a regular lattice: n nodes from lo to hi inclusive.
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n = 2;

  double spacing() const { return (hi - lo) / static_cast<double>(n - 1); }
  double coord(std::size_t k) const { return lo + static_cast<double>(k) * spacing(); }
  bool operator==(const Axis&) const = default;
};

// Regular 1-D or 2-D lattice. Nodes are stored row-major with axis 0 slowest.
class GridGeometry {
 public:
  GridGeometry() = default;
  explicit GridGeometry(std::vector<Axis> axes);

  std::size_t dim() const { return axes_.size(); }
  const std::vector<Axis>& axes() const { return axes_; }
  const Axis& axis(std::size_t a) const { return axes_[a]; }
  std::size_t size() const { return size_; }
  std::size_t stride(std::size_t a) const { return strides_[a]; }

  // Per-axis node index of flat node `idx`.
  std::size_t axis_index(std::size_t idx, std::size_t a) const { return (idx / strides_[a]) % axes_[a].n; }
  std::vector<double> point(std::size_t idx) const;

  // Product-trapezoid quadrature weight of each node.
  const std::vector<double>& weights() const { return weights_; }
  double integrate(std::span<const double> f) const;
  double inner(std::span<const double> f, std::span<const double> g) const;

  std::vector<double> sample(const std::function<double(std::span<const double>)>& fn) const;

  bool operator==(const GridGeometry& other) const { return axes_ == other.axes_; }

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::vector<double> weights_;
  std::size_t size_ = 0;
};

// Nonnegative density sampled on a GridGeometry, renormalized on construction
// so that its trapezoid integral is 1.
class GridDensity {
 public:
  // Values below this are treated as zero before taking logarithms.
  static constexpr double kFloor = 1e-300;
  // Score-based quadratures only use nodes above this fraction of the peak.
  static constexpr double kMaskFraction = 1e-12;

  GridDensity(GridGeometry geometry, std::vector<double> values);

  static GridDensity from_function(GridGeometry geometry,
                                   const std::function<double(std::span<const double>)>& fn);

  const GridGeometry& geometry() const { return geometry_; }
  std::size_t dim() const { return geometry_.dim(); }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  double peak() const;
  // Largest value on the outermost layer of nodes relative to the peak.
  double boundary_ratio() const;
  // Throws ShapeError unless boundary_ratio() < limit.
  void require_decay(double limit = 1e-12) const;

  // log(max(p, kFloor)) at every node.
  std::vector<double> log_values() const;
  // Nodes with p > kMaskFraction * peak.
  std::vector<bool> mass_mask() const;

 private:
  GridGeometry geometry_;
  std::vector<double> values_;
};

}  // namespace scorematch
