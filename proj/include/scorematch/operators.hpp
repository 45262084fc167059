#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "scorematch/discrete_joint.hpp"
#include "scorematch/grid.hpp"

namespace scorematch {

class Model;

enum class OperatorKind { Gradient, Marginalization };

const char* to_string(OperatorKind kind);

// Only operators with a completeness proof are attested. A new operator kind
// must add its own entry here.
bool is_complete(OperatorKind kind);

// Shape of a dense table over {0..m-1}^d.
struct TableShape {
  int m;
  std::size_t d;
  std::size_t size() const;
};

// One table per component, each the size of the scalar table it came from.
using VectorTable = std::vector<std::vector<double>>;

// Marginalization: component i at x is sum over xi of f(xi, x^{\i})
// (trapezoid integral along axis i on grids).
// Gradient: central differences inside, first-order one-sided on the two
// boundary layers. Gradient on a discrete table is a KindMismatch.
VectorTable apply(OperatorKind op, const TableShape& shape, std::span<const double> f);
VectorTable apply(OperatorKind op, const GridGeometry& grid, std::span<const double> f);

// Marginalization+ = sum_i M_i g_i; Gradient+ = -divergence.
std::vector<double> apply_adjoint(OperatorKind op, const TableShape& shape, const VectorTable& g);
std::vector<double> apply_adjoint(OperatorKind op, const GridGeometry& grid, const VectorTable& g);

// |<L f, g> - <f, L+ g>| with the plain sum (tables) or trapezoid rule (grids).
double adjoint_identity_residual(OperatorKind op, const TableShape& shape, std::span<const double> f,
                                 const VectorTable& g);
double adjoint_identity_residual(OperatorKind op, const GridGeometry& grid, std::span<const double> f,
                                 const VectorTable& g);

// Second-order Laplacian: sum of central second differences; on the outer
// layer the one-sided three-point second difference is used.
std::vector<double> grid_laplacian(const GridGeometry& grid, std::span<const double> f);

// Generalized Fisher divergence sum_x p |L p / p - L q / q|^2. `q` may be
// unnormalized: the operator is linear, so its scale cancels.
double generalized_fisher_divergence(OperatorKind op, const DiscreteJoint& p, std::span<const double> q);
double generalized_fisher_divergence(OperatorKind op, const GridDensity& p, std::span<const double> q);

// p(x_i = state[i] | state^{\i}).
using SingletonConditionals = std::function<double(std::span<const int> state, std::size_t i)>;

SingletonConditionals conditionals_of(const DiscreteJoint& joint);
SingletonConditionals conditionals_of(const Model& model);

// Brook's telescoping product for p(xi) / p(xi_tilde). Coordinates are swapped
// from xi to xi_tilde in `order` (identity order when empty).
double brook_ratio(const SingletonConditionals& conds, std::span<const int> xi, std::span<const int> xi_tilde,
                   std::span<const std::size_t> order = {});

// Joint table from singleton conditionals alone, anchored at the all-zeros state.
DiscreteJoint reconstruct_joint(const SingletonConditionals& conds, int m, std::size_t d);

struct CompletenessCheck {
  bool applicable;      // max score gap <= eps
  bool held;            // applicable and max |p - q| <= bound (true when not applicable)
  double score_gap;     // max over mass nodes of |grad log p - grad log q|
  double density_gap;   // max |p - q|
  double bound;         // max(q) * (exp(2 eps L) - 1), L = sum of box extents
};

// Gradient completeness: equal scores force equal normalized densities.
// If |grad log(p/q)| <= eps then log(p/q) varies by at most eps*L over the box,
// which with both densities normalized gives |p - q| <= max(q) (e^{2 eps L} - 1).
CompletenessCheck gradient_completeness_check(const GridDensity& p, const GridDensity& q, double eps);

}  // namespace scorematch
