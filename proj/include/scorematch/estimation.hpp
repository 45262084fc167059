#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scorematch/dataset.hpp"
#include "scorematch/models.hpp"
#include "scorematch/objectives.hpp"

namespace scorematch {

// Central-difference step for gradient checks, and for optimizer fallbacks
// when an objective has no analytic gradient.
inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kOptimizerFdStep = 1e-6;

struct OptimizerConfig {
  std::size_t max_iters = 2000;
  double grad_tol = 1e-7;  // on the gradient max-norm
  double initial_step = 1.0;
  double backtrack = 0.5;
  double sufficient_decrease = 1e-4;
  // Empty means the family's default start (see default_init).
  std::vector<double> init_theta;

  void validate() const;
};

struct FitResult {
  std::vector<double> theta_hat;
  double objective_value = 0.0;
  double grad_norm = 0.0;
  std::size_t iters = 0;
  bool converged = false;
  ObjectiveKind objective = ObjectiveKind::ScoreMatching;
  // Objective value after every accepted step, starting with the initial point.
  std::vector<double> trajectory;

  bool operator==(const FitResult&) const = default;
};

using ObjectiveFn = std::function<ObjectiveValue(std::span<const double>)>;

// Zeros for discrete families; for Gaussian, mean 0 and identity covariance
// (zeros would be a singular covariance); for GenGauss1D, (0, 1, 2).
std::vector<double> default_init(const Model& family);

std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> theta, double step = kGradCheckStep);

// Gradient descent with Armijo backtracking. Each search starts at
// initial_step; once a step passes the Armijo test it keeps being halved for as
// long as that strictly lowers the objective. Trial points whose objective is
// not finite, or whose parameters are invalid for the family, are rejected
// like any failed decrease. Throws NumericalError if the starting value is
// not finite.
FitResult minimize(const ObjectiveFn& objective, std::vector<double> theta0, const OptimizerConfig& cfg,
                   ObjectiveKind tag = ObjectiveKind::ScoreMatching);

FitResult fit(const Model& family, ObjectiveKind objective, const Dataset& data, const OptimizerConfig& cfg = {});

// Sample mean and 1/N covariance in the Gaussian parameter layout.
std::vector<double> closed_form_gaussian_sm(const Dataset& data);

struct ComparisonRow {
  ObjectiveKind objective;
  std::optional<std::size_t> n;          // empty for the population row
  std::optional<std::uint64_t> seed;     // empty for the population row
  bool converged;
  std::size_t iters;
  double linf_error;
  double objective_value;
  double grad_norm;
  std::vector<double> theta_hat;
};

// For every N, seed and objective: sample from theta_star, fit, record
// ||theta_hat - theta_star||_inf. One population row per objective fits the
// enumerated state space weighted by the exact joint.
std::vector<ComparisonRow> compare_estimators(const Model& truth, std::span<const std::size_t> n_list,
                                              std::span<const std::uint64_t> seeds,
                                              std::span<const ObjectiveKind> objectives,
                                              const OptimizerConfig& cfg = {});

}  // namespace scorematch
