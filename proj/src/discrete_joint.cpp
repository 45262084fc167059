#include "scorematch/discrete_joint.hpp"

#include <cmath>
#include <string>

#include "scorematch/error.hpp"
#include "scorematch/summation.hpp"

namespace scorematch {

std::uint64_t state_count(int m, std::size_t d, std::uint64_t limit) {
  if (m < 2) throw ShapeError("alphabet size must be at least 2");
  if (d == 0) throw ShapeError("dimension must be positive");
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (count > limit / static_cast<std::uint64_t>(m)) {
      throw CapacityError("state space " + std::to_string(m) + "^" + std::to_string(d) + " exceeds limit " +
                          std::to_string(limit));
    }
    count *= static_cast<std::uint64_t>(m);
  }
  return count;
}

std::uint64_t state_index(std::span<const int> x, int m) {
  std::uint64_t idx = 0;
  for (int v : x) {
    if (v < 0 || v >= m) throw ShapeError("symbol " + std::to_string(v) + " outside alphabet of size " + std::to_string(m));
    idx = idx * static_cast<std::uint64_t>(m) + static_cast<std::uint64_t>(v);
  }
  return idx;
}

void decode_state(std::uint64_t idx, int m, std::span<int> out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<int>(idx % static_cast<std::uint64_t>(m));
    idx /= static_cast<std::uint64_t>(m);
  }
}

DiscreteJoint::DiscreteJoint(int m, std::size_t d, std::vector<double> probs) : m_(m), d_(d), probs_(std::move(probs)) {
  if (probs_.size() != state_count(m_, d_)) throw ShapeError("joint table size must be m^d");
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw NumericalError("joint probabilities must be finite and nonnegative");
  }
  const double total = pairwise_sum(probs_);
  if (std::abs(total - 1.0) > 1e-12) throw NumericalError("joint probabilities must sum to 1");
}

DiscreteJoint DiscreteJoint::from_weights(int m, std::size_t d, std::vector<double> weights) {
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw NumericalError("joint weights must be finite and nonnegative");
  }
  const double total = pairwise_sum(weights);
  if (!(total > 0.0)) throw NumericalError("joint weights sum to zero");
  for (double& w : weights) w /= total;
  // Renormalizing once can leave the sum a few ulps off; the constructor's
  // 1e-12 check absorbs that.
  return DiscreteJoint(m, d, std::move(weights));
}

DiscreteJoint DiscreteJoint::uniform(int m, std::size_t d) {
  const auto n = state_count(m, d);
  return DiscreteJoint(m, d, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

std::vector<double> DiscreteJoint::conditional(std::span<const int> x, std::size_t i) const {
  if (x.size() != d_) throw ShapeError("state dimension does not match joint");
  if (i >= d_) throw ShapeError("coordinate index out of range");
  std::vector<int> z(x.begin(), x.end());
  std::vector<double> out(static_cast<std::size_t>(m_));
  for (int xi = 0; xi < m_; ++xi) {
    z[i] = xi;
    out[static_cast<std::size_t>(xi)] = probs_[state_index(z, m_)];
  }
  const double total = pairwise_sum(out);
  if (!(total > 0.0)) throw NumericalError("conditional undefined: zero marginal at coordinate " + std::to_string(i));
  for (double& v : out) v /= total;
  return out;
}

bool DiscreteJoint::strictly_positive() const {
  for (double p : probs_) {
    if (!(p > 0.0)) return false;
  }
  return true;
}

}  // namespace scorematch
