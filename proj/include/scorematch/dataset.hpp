#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace scorematch {

enum class DataKind { Continuous, Discrete };

// N samples of d coordinates, row-major. Continuous samples live in `reals`,
// discrete ones in `symbols` (0..m-1). Optional per-sample weights turn the
// empirical mean into a weighted one; an enumerated dataset weighted by a
// joint table reproduces a population expectation exactly.
class Dataset {
 public:
  static Dataset continuous(std::size_t dim, std::vector<double> values, std::uint64_t seed = 0);
  static Dataset discrete(std::size_t dim, int m, std::vector<int> values, std::uint64_t seed = 0);

  DataKind kind() const { return kind_; }
  bool is_discrete() const { return kind_ == DataKind::Discrete; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return n_; }
  int alphabet_size() const { return m_; }
  std::uint64_t seed() const { return seed_; }

  std::span<const double> real_row(std::size_t n) const { return {reals_.data() + n * dim_, dim_}; }
  std::span<const int> symbol_row(std::size_t n) const { return {symbols_.data() + n * dim_, dim_}; }
  const std::vector<double>& reals() const { return reals_; }
  const std::vector<int>& symbols() const { return symbols_; }

  const std::vector<double>& weights() const { return weights_; }
  bool weighted() const { return !weights_.empty(); }
  Dataset with_weights(std::vector<double> weights) const;

  bool operator==(const Dataset&) const = default;

 private:
  Dataset() = default;

  DataKind kind_ = DataKind::Continuous;
  std::size_t dim_ = 0;
  std::size_t n_ = 0;
  int m_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> reals_;
  std::vector<int> symbols_;
  std::vector<double> weights_;
};

}  // namespace scorematch
