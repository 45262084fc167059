#include "scorematch/dataset.hpp"

#include <cmath>
#include <string>

#include "scorematch/error.hpp"

namespace scorematch {

Dataset Dataset::continuous(std::size_t dim, std::vector<double> values, std::uint64_t seed) {
  if (dim == 0) throw ShapeError("dataset dimension must be positive");
  if (values.empty() || values.size() % dim != 0) throw ShapeError("dataset needs N >= 1 complete rows");
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericalError("dataset contains a non-finite value");
  }
  Dataset d;
  d.kind_ = DataKind::Continuous;
  d.dim_ = dim;
  d.n_ = values.size() / dim;
  d.seed_ = seed;
  d.reals_ = std::move(values);
  return d;
}

Dataset Dataset::discrete(std::size_t dim, int m, std::vector<int> values, std::uint64_t seed) {
  if (dim == 0) throw ShapeError("dataset dimension must be positive");
  if (m < 2) throw ShapeError("alphabet size must be at least 2");
  if (values.empty() || values.size() % dim != 0) throw ShapeError("dataset needs N >= 1 complete rows");
  for (int v : values) {
    if (v < 0 || v >= m) throw ShapeError("symbol " + std::to_string(v) + " outside alphabet of size " + std::to_string(m));
  }
  Dataset d;
  d.kind_ = DataKind::Discrete;
  d.dim_ = dim;
  d.m_ = m;
  d.n_ = values.size() / dim;
  d.seed_ = seed;
  d.symbols_ = std::move(values);
  return d;
}

Dataset Dataset::with_weights(std::vector<double> weights) const {
  if (weights.size() != n_) throw ShapeError("one weight per sample is required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw NumericalError("sample weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw NumericalError("sample weights sum to zero");
  Dataset d = *this;
  d.weights_ = std::move(weights);
  return d;
}

}  // namespace scorematch
