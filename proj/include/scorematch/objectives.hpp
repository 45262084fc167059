#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scorematch/dataset.hpp"
#include "scorematch/discrete_joint.hpp"
#include "scorematch/grid.hpp"
#include "scorematch/models.hpp"

namespace scorematch {

enum class ObjectiveKind { ScoreMatching, GeneralizedDiscrete, RatioMatching, PseudoLikelihood, ExactMle };

// Short tags used on the command line and in JSON: sm, gsm, rm, pl, mle.
const char* to_string(ObjectiveKind kind);
ObjectiveKind objective_kind_from_string(const std::string& tag);

// Throws KindMismatch naming both kinds when the pair is not supported.
void require_compatible(ObjectiveKind objective, const Model& model);

struct ObjectiveValue {
  double value = 0.0;
  std::optional<std::vector<double>> grad_theta;
};

// All objectives are minimized. Empirical objectives are means over the
// dataset in file order (weighted means for weighted datasets), reduced with
// pairwise summation.

// Exact divergences between normalized densities.
double kl_exact(const DiscreteJoint& p, const DiscreteJoint& q);
double kl_exact(const GridDensity& p, const GridDensity& q);
// p-weighted squared score difference on the grid's mass nodes.
double fisher_exact(const GridDensity& p, const GridDensity& q);

// mean of |grad_x log q~|^2 + 2 lap_x log q~. Analytic gradient for Gaussian.
ObjectiveValue sm_objective(const Model& family, std::span<const double> theta, const Dataset& data);

// Partition-free expansion of the discrete conditional divergence:
// mean of sum_i sum_xi (q(xi | x^{\i}) - [xi == x_i])^2.
// The population version minus this is a theta-free constant.
ObjectiveValue gsm_discrete_objective(const Model& family, std::span<const double> theta, const Dataset& data);

// sum_x p(x) sum_i sum_xi (p(xi | x^{\i}) - q(xi | x^{\i}))^2 by enumeration.
double gsm_discrete_population(const DiscreteJoint& p, const Model& family, std::span<const double> theta);

// Ratio matching with phi(u) = 1/(1+u) applied to joint ratios q~(xi,.)/q~(~xi,.):
// mean of sum_i sum_xi ([xi != x_i] - phi(...))^2.
ObjectiveValue ratio_matching_objective(const Model& family, std::span<const double> theta, const Dataset& data);

// sum_x p sum_i sum_xi [phi(p(xi,.)/p(~xi,.)) - phi(q~(xi,.)/q~(~xi,.))]^2.
double ratio_matching_population(const DiscreteJoint& p, const Model& family, std::span<const double> theta);

// mean of -sum_i log q(x_i | x^{\i}).
ObjectiveValue pseudo_likelihood_objective(const Model& family, std::span<const double> theta,
                                           const Dataset& data);

// mean of -log q(x) with the exact partition function (enumeration or Gaussian closed form).
ObjectiveValue exact_mle_objective(const Model& family, std::span<const double> theta, const Dataset& data);

// Reciprocal-conditional expansion of the marginalization-operator Fisher
// divergence: mean of sum_i [q(x_i|x^{\i})^-2 - 2 sum_xi q(xi|x^{\i})^-1].
// generalized_fisher_divergence(Marginalization, p, q) minus its population
// value does not depend on theta.
ObjectiveValue marginalization_score_objective(const Model& family, std::span<const double> theta,
                                               const Dataset& data);

// mean of sum_i sum_xi (q(~xi|x^{\i}) / q(xi|x^{\i}))^2 - m d.
// Depends on a sample only through x^{\i}, so its minimizer is the model with
// uniform singleton conditionals whatever the data.
ObjectiveValue conditional_balance_objective(const Model& family, std::span<const double> theta,
                                             const Dataset& data);

// mean of sum_i sum_xi (1 - q(xi | x^{\i}))^2. Same caveat as above.
ObjectiveValue complement_conditional_objective(const Model& family, std::span<const double> theta,
                                                const Dataset& data);

ObjectiveValue evaluate(ObjectiveKind kind, const Model& family, std::span<const double> theta, const Dataset& data);

}  // namespace scorematch
