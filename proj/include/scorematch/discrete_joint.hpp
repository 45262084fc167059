#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace scorematch {

// Number of states m^d; throws CapacityError past `limit`.
std::uint64_t state_count(int m, std::size_t d, std::uint64_t limit = std::uint64_t{1} << 24);

// Row-major state index, coordinate 0 slowest: idx = sum_i x_i * m^(d-1-i).
std::uint64_t state_index(std::span<const int> x, int m);
void decode_state(std::uint64_t idx, int m, std::span<int> out);

// Dense probability table over {0..m-1}^d.
class DiscreteJoint {
 public:
  // Entries must be nonnegative and sum to 1 within 1e-12.
  DiscreteJoint(int m, std::size_t d, std::vector<double> probs);

  // Normalizes arbitrary nonnegative weights.
  static DiscreteJoint from_weights(int m, std::size_t d, std::vector<double> weights);
  static DiscreteJoint uniform(int m, std::size_t d);

  int m() const { return m_; }
  std::size_t d() const { return d_; }
  std::size_t size() const { return probs_.size(); }
  const std::vector<double>& probs() const { return probs_; }
  double prob(std::span<const int> x) const { return probs_[state_index(x, m_)]; }
  double operator[](std::size_t idx) const { return probs_[idx]; }

  // p(xi | x^{\i}) for every xi.
  std::vector<double> conditional(std::span<const int> x, std::size_t i) const;

  bool strictly_positive() const;

 private:
  int m_;
  std::size_t d_;
  std::vector<double> probs_;
};

}  // namespace scorematch
