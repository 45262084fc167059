#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "scorematch/dataset.hpp"
#include "scorematch/discrete_joint.hpp"
#include "scorematch/grid.hpp"

namespace scorematch {

enum class ModelKind { Gaussian, Ising, Potts, GenGauss1D };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct Edge {
  std::size_t i;
  std::size_t j;
  bool operator==(const Edge&) const = default;
};

// Pairwise interaction structure of a discrete model. Parsed from
// "chain", "complete", "grid:RxC" or "edges:0-1,1-2,..."; edges are
// stored with i < j in lexicographic order, which fixes the coupling layout.
std::vector<Edge> parse_topology(const std::string& topology, std::size_t dim);

// Parameters of the discrete model features touching one coordinate i:
// index[k] is a position in the flat parameter vector, and value[xi * K + k]
// is the feature value when coordinate i takes symbol xi (others held fixed).
// log q~(xi, x^{\i}) = sum_k theta[index[k]] * value[xi*K + k] + terms without i.
struct LocalFeatures {
  std::vector<std::size_t> index;
  std::vector<double> value;
  std::size_t width() const { return index.size(); }
};

// Unnormalized log-density q~_theta over R^d or {0..m-1}^d.
//
// Parameter layouts:
//   Gaussian   (mu[0..d), then lower triangle of Sigma row-major: S00, S10, S11, S20, ...)
//              log q~ = -1/2 (x-mu)^T Sigma^{-1} (x-mu)
//   Ising      (h[0..d), then theta_e per edge); symbols map 0 -> -1, 1 -> +1
//              log q~ = sum_e theta_e s_i s_j + sum_i h_i s_i
//   Potts      (h[i][a] for i in [0,d), a in [1,m), then J_e per edge)
//              log q~ = sum_i h[i][x_i] (h[i][0] = 0) + sum_e J_e [x_i == x_j]
//   GenGauss1D (loc, rate, shape), d = 1
//              log q~ = -rate * ((x - loc)^2 + eps^2)^(shape/2), eps = 1e-3
//
// Regularity: all shipped continuous kinds have log-densities of polynomial
// growth with every derivative decaying against the density; this is what the
// integration-by-parts form of score matching assumes, and is not checked.
class Model {
 public:
  static constexpr double kGenGaussEps = 1e-3;
  static constexpr double kConditionalFloor = 1e-300;

  static Model gaussian(std::size_t dim, std::vector<double> params);
  static Model gaussian(std::span<const double> mean, const Eigen::MatrixXd& cov);
  static Model ising(std::size_t dim, const std::string& topology, std::vector<double> params);
  static Model potts(std::size_t dim, int m, const std::string& topology, std::vector<double> params);
  static Model gen_gauss_1d(double loc, double rate, double shape);

  // Same family and structure, new parameters (validated).
  Model with_params(std::span<const double> params) const;
  // Adds a constant to log q~; no partition-free quantity may change.
  Model with_log_offset(double offset) const;
  Model with_quadrature_box(std::vector<Axis> box) const;

  ModelKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  bool is_discrete() const { return kind_ == ModelKind::Ising || kind_ == ModelKind::Potts; }
  std::optional<int> alphabet_size() const;
  const std::vector<double>& params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }
  const std::string& topology() const { return topology_; }
  const std::vector<Edge>& edges() const { return edges_; }
  double log_offset() const { return log_offset_; }
  const std::optional<std::vector<Axis>>& quadrature_box() const { return box_; }
  // Layout tag written to parameter files.
  std::string layout() const;

  double log_unnorm(std::span<const double> x) const;
  double log_unnorm(std::span<const int> x) const;

  std::vector<double> grad_x_log(std::span<const double> x) const;
  double laplacian_x_log(std::span<const double> x) const;

  // q(xi | x^{\i}) for xi = 0..m-1, computed in log space from q~ alone.
  std::vector<double> singleton_conditional(std::span<const int> x, std::size_t i) const;

  // Sufficient statistics phi(x); log q~ = theta . phi(x) + offset.
  std::vector<double> features(std::span<const int> x) const;
  LocalFeatures local_features(std::span<const int> x, std::size_t i) const;

  // Gaussian only.
  const Eigen::MatrixXd& precision() const;
  const Eigen::MatrixXd& covariance() const { return cov_; }
  Eigen::VectorXd mean() const;
  double log_det_cov() const { return log_det_; }

 private:
  Model() = default;
  void validate_and_cache();
  void check_point(std::span<const double> x) const;
  void check_point(std::span<const int> x) const;

  ModelKind kind_ = ModelKind::Gaussian;
  std::size_t dim_ = 0;
  int m_ = 0;
  std::vector<double> params_;
  std::string topology_;
  std::vector<Edge> edges_;
  // incident_[i] = (edge index, other endpoint)
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> incident_;
  double log_offset_ = 0.0;
  std::optional<std::vector<Axis>> box_;

  Eigen::MatrixXd cov_;
  Eigen::MatrixXd precision_;
  double log_det_ = 0.0;
};

using NormalizedDensity = std::variant<DiscreteJoint, GridDensity>;

// Brute-force normalization: full enumeration for discrete kinds (m^d <= 2^24),
// trapezoid quadrature on the model's declared box for 1-D/2-D continuous kinds.
NormalizedDensity exact_normalize(const Model& model);
DiscreteJoint exact_joint(const Model& model);
GridDensity exact_grid(const Model& model);

// log Z by enumeration (discrete) or closed form (Gaussian).
double log_partition(const Model& model);

// Reproducible draw of n samples; the seed is stored in the dataset.
Dataset sample(const Model& model, std::size_t n, std::uint64_t seed);

// Every state of {0..m-1}^d in index order, weighted by the table.
Dataset enumerate_states(const DiscreteJoint& joint);

}  // namespace scorematch
