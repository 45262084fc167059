#include "scorematch/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scorematch/error.hpp"
#include "scorematch/summation.hpp"

namespace scorematch {

GridGeometry::GridGeometry(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > 2) throw ShapeError("grid dimension must be 1 or 2");
  for (const Axis& a : axes_) {
    if (a.n < 3) throw ShapeError("grid axis needs at least 3 nodes");
    if (!(a.hi > a.lo) || !std::isfinite(a.lo) || !std::isfinite(a.hi))
      throw ShapeError("grid axis needs finite lo < hi");
  }
  strides_.assign(axes_.size(), 1);
  for (std::size_t a = axes_.size(); a-- > 1;) strides_[a - 1] = strides_[a] * axes_[a].n;
  size_ = strides_[0] * axes_[0].n;

  weights_.assign(size_, 1.0);
  for (std::size_t idx = 0; idx < size_; ++idx) {
    for (std::size_t a = 0; a < axes_.size(); ++a) {
      const std::size_t k = axis_index(idx, a);
      const double h = axes_[a].spacing();
      weights_[idx] *= (k == 0 || k + 1 == axes_[a].n) ? 0.5 * h : h;
    }
  }
}

std::vector<double> GridGeometry::point(std::size_t idx) const {
  std::vector<double> x(axes_.size());
  for (std::size_t a = 0; a < axes_.size(); ++a) x[a] = axes_[a].coord(axis_index(idx, a));
  return x;
}

double GridGeometry::integrate(std::span<const double> f) const {
  if (f.size() != size_) throw ShapeError("integrand size does not match grid");
  std::vector<double> wf(size_);
  for (std::size_t i = 0; i < size_; ++i) wf[i] = weights_[i] * f[i];
  return pairwise_sum(wf);
}

double GridGeometry::inner(std::span<const double> f, std::span<const double> g) const {
  if (f.size() != size_ || g.size() != size_) throw ShapeError("inner product operands do not match grid");
  std::vector<double> wfg(size_);
  for (std::size_t i = 0; i < size_; ++i) wfg[i] = weights_[i] * f[i] * g[i];
  return pairwise_sum(wfg);
}

std::vector<double> GridGeometry::sample(const std::function<double(std::span<const double>)>& fn) const {
  std::vector<double> out(size_);
  std::vector<double> x(axes_.size());
  for (std::size_t idx = 0; idx < size_; ++idx) {
    for (std::size_t a = 0; a < axes_.size(); ++a) x[a] = axes_[a].coord(axis_index(idx, a));
    out[idx] = fn(x);
  }
  return out;
}

GridDensity::GridDensity(GridGeometry geometry, std::vector<double> values)
    : geometry_(std::move(geometry)), values_(std::move(values)) {
  if (values_.size() != geometry_.size()) throw ShapeError("density values do not match grid size");
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw NumericalError("density values must be finite and nonnegative");
  }
  const double mass = geometry_.integrate(values_);
  if (!(mass > 0.0)) throw NumericalError("density has zero mass on the grid");
  for (double& v : values_) v /= mass;
}

GridDensity GridDensity::from_function(GridGeometry geometry,
                                       const std::function<double(std::span<const double>)>& fn) {
  auto values = geometry.sample(fn);
  return GridDensity(std::move(geometry), std::move(values));
}

double GridDensity::peak() const { return *std::max_element(values_.begin(), values_.end()); }

double GridDensity::boundary_ratio() const {
  double edge = 0.0;
  for (std::size_t idx = 0; idx < values_.size(); ++idx) {
    for (std::size_t a = 0; a < dim(); ++a) {
      const std::size_t k = geometry_.axis_index(idx, a);
      if (k == 0 || k + 1 == geometry_.axis(a).n) {
        edge = std::max(edge, values_[idx]);
        break;
      }
    }
  }
  return edge / peak();
}

void GridDensity::require_decay(double limit) const {
  const double r = boundary_ratio();
  if (!(r < limit)) {
    throw ShapeError("grid box too narrow: boundary/peak ratio " + std::to_string(r) + " is not below " +
                     std::to_string(limit));
  }
}

std::vector<double> GridDensity::log_values() const {
  std::vector<double> out(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) out[i] = std::log(std::max(values_[i], kFloor));
  return out;
}

std::vector<bool> GridDensity::mass_mask() const {
  const double cut = kMaskFraction * peak();
  std::vector<bool> mask(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) mask[i] = values_[i] > cut;
  return mask;
}

}  // namespace scorematch
