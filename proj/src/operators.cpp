#include "scorematch/operators.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "scorematch/error.hpp"
#include "scorematch/models.hpp"
#include "scorematch/summation.hpp"

namespace scorematch {

namespace {

// m^(d-1-i): index step when coordinate i increases by one.
std::size_t coordinate_stride(const TableShape& shape, std::size_t i) {
  std::size_t s = 1;
  for (std::size_t k = i + 1; k < shape.d; ++k) s *= static_cast<std::size_t>(shape.m);
  return s;
}

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) throw ShapeError(std::string(what) + ": size " + std::to_string(got) + " != " + std::to_string(want));
}

std::vector<double> marginalize_table(const TableShape& shape, std::span<const double> f, std::size_t i) {
  const std::size_t stride = coordinate_stride(shape, i);
  const auto m = static_cast<std::size_t>(shape.m);
  std::vector<double> out(f.size());
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    const std::size_t xi = (idx / stride) % m;
    const std::size_t base = idx - xi * stride;
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += f[base + k * stride];
    out[idx] = s;
  }
  return out;
}

std::vector<double> marginalize_grid(const GridGeometry& grid, std::span<const double> f, std::size_t a) {
  const Axis& ax = grid.axis(a);
  const std::size_t stride = grid.stride(a);
  const double h = ax.spacing();
  std::vector<double> out(f.size());
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    const std::size_t k0 = grid.axis_index(idx, a);
    const std::size_t base = idx - k0 * stride;
    double s = 0.5 * (f[base] + f[base + (ax.n - 1) * stride]);
    for (std::size_t k = 1; k + 1 < ax.n; ++k) s += f[base + k * stride];
    out[idx] = h * s;
  }
  return out;
}

std::vector<double> derivative(const GridGeometry& grid, std::span<const double> f, std::size_t a) {
  const Axis& ax = grid.axis(a);
  const std::size_t stride = grid.stride(a);
  const double h = ax.spacing();
  std::vector<double> out(f.size());
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    const std::size_t k = grid.axis_index(idx, a);
    if (k == 0) {
      out[idx] = (f[idx + stride] - f[idx]) / h;
    } else if (k + 1 == ax.n) {
      out[idx] = (f[idx] - f[idx - stride]) / h;
    } else {
      out[idx] = (f[idx + stride] - f[idx - stride]) / (2.0 * h);
    }
  }
  return out;
}

double table_inner(std::span<const double> f, std::span<const double> g) {
  std::vector<double> fg(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) fg[k] = f[k] * g[k];
  return pairwise_sum(fg);
}

}  // namespace

const char* to_string(OperatorKind kind) {
  return kind == OperatorKind::Gradient ? "gradient" : "marginalization";
}

bool is_complete(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Gradient: return true;         // log-ratio constant argument
    case OperatorKind::Marginalization: return true;  // Brook's lemma
  }
  return false;
}

std::size_t TableShape::size() const { return static_cast<std::size_t>(state_count(m, d)); }

VectorTable apply(OperatorKind op, const TableShape& shape, std::span<const double> f) {
  if (op != OperatorKind::Marginalization) throw KindMismatch("the gradient operator needs a grid, not a discrete table");
  require_size(f.size(), shape.size(), "table");
  VectorTable out(shape.d);
  for (std::size_t i = 0; i < shape.d; ++i) out[i] = marginalize_table(shape, f, i);
  return out;
}

VectorTable apply(OperatorKind op, const GridGeometry& grid, std::span<const double> f) {
  require_size(f.size(), grid.size(), "grid function");
  VectorTable out(grid.dim());
  for (std::size_t a = 0; a < grid.dim(); ++a)
    out[a] = op == OperatorKind::Gradient ? derivative(grid, f, a) : marginalize_grid(grid, f, a);
  return out;
}

std::vector<double> apply_adjoint(OperatorKind op, const TableShape& shape, const VectorTable& g) {
  if (op != OperatorKind::Marginalization) throw KindMismatch("the gradient operator needs a grid, not a discrete table");
  require_size(g.size(), shape.d, "vector table components");
  std::vector<double> out(shape.size(), 0.0);
  for (std::size_t i = 0; i < shape.d; ++i) {
    require_size(g[i].size(), out.size(), "vector table component");
    const auto mi = marginalize_table(shape, g[i], i);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += mi[k];
  }
  return out;
}

std::vector<double> apply_adjoint(OperatorKind op, const GridGeometry& grid, const VectorTable& g) {
  require_size(g.size(), grid.dim(), "vector field components");
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    require_size(g[a].size(), out.size(), "vector field component");
    if (op == OperatorKind::Gradient) {
      const auto da = derivative(grid, g[a], a);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] -= da[k];
    } else {
      const auto ma = marginalize_grid(grid, g[a], a);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += ma[k];
    }
  }
  return out;
}

double adjoint_identity_residual(OperatorKind op, const TableShape& shape, std::span<const double> f,
                                 const VectorTable& g) {
  const VectorTable lf = apply(op, shape, f);
  const std::vector<double> ltg = apply_adjoint(op, shape, g);
  std::vector<double> parts(shape.d);
  for (std::size_t i = 0; i < shape.d; ++i) parts[i] = table_inner(lf[i], g[i]);
  return std::abs(pairwise_sum(parts) - table_inner(f, ltg));
}

double adjoint_identity_residual(OperatorKind op, const GridGeometry& grid, std::span<const double> f,
                                 const VectorTable& g) {
  const VectorTable lf = apply(op, grid, f);
  const std::vector<double> ltg = apply_adjoint(op, grid, g);
  std::vector<double> parts(grid.dim());
  for (std::size_t a = 0; a < grid.dim(); ++a) parts[a] = grid.inner(lf[a], g[a]);
  return std::abs(pairwise_sum(parts) - grid.inner(f, ltg));
}

std::vector<double> grid_laplacian(const GridGeometry& grid, std::span<const double> f) {
  require_size(f.size(), grid.size(), "grid function");
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    const Axis& ax = grid.axis(a);
    const std::size_t s = grid.stride(a);
    const double h2 = ax.spacing() * ax.spacing();
    for (std::size_t idx = 0; idx < f.size(); ++idx) {
      const std::size_t k = grid.axis_index(idx, a);
      double d2;
      if (k == 0) {
        d2 = f[idx] - 2.0 * f[idx + s] + f[idx + 2 * s];
      } else if (k + 1 == ax.n) {
        d2 = f[idx] - 2.0 * f[idx - s] + f[idx - 2 * s];
      } else {
        d2 = f[idx + s] - 2.0 * f[idx] + f[idx - s];
      }
      out[idx] += d2 / h2;
    }
  }
  return out;
}

double generalized_fisher_divergence(OperatorKind op, const DiscreteJoint& p, std::span<const double> q) {
  const TableShape shape{p.m(), p.d()};
  require_size(q.size(), p.size(), "q table");
  const VectorTable lp = apply(op, shape, p.probs());
  const VectorTable lq = apply(op, shape, q);
  std::vector<double> terms(p.size(), 0.0);
  for (std::size_t idx = 0; idx < p.size(); ++idx) {
    if (p[idx] == 0.0) continue;
    if (!(q[idx] > 0.0)) throw NumericalError("q vanishes where p is positive");
    double s = 0.0;
    for (std::size_t i = 0; i < shape.d; ++i) {
      const double diff = lp[i][idx] / p[idx] - lq[i][idx] / q[idx];
      s += diff * diff;
    }
    terms[idx] = p[idx] * s;
  }
  return pairwise_sum(terms);
}

double generalized_fisher_divergence(OperatorKind op, const GridDensity& p, std::span<const double> q) {
  const GridGeometry& grid = p.geometry();
  require_size(q.size(), grid.size(), "q grid");
  const VectorTable lp = apply(op, grid, p.values());
  const VectorTable lq = apply(op, grid, q);
  const auto mask = p.mass_mask();
  std::vector<double> integrand(grid.size(), 0.0);
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    if (!mask[idx]) continue;
    if (!(q[idx] > 0.0)) throw NumericalError("q vanishes where p carries mass");
    double s = 0.0;
    for (std::size_t a = 0; a < grid.dim(); ++a) {
      const double diff = lp[a][idx] / p[idx] - lq[a][idx] / q[idx];
      s += diff * diff;
    }
    integrand[idx] = p[idx] * s;
  }
  return grid.integrate(integrand);
}

SingletonConditionals conditionals_of(const DiscreteJoint& joint) {
  auto shared = std::make_shared<const DiscreteJoint>(joint);
  return [shared](std::span<const int> state, std::size_t i) {
    return shared->conditional(state, i)[static_cast<std::size_t>(state[i])];
  };
}

SingletonConditionals conditionals_of(const Model& model) {
  auto shared = std::make_shared<const Model>(model);
  return [shared](std::span<const int> state, std::size_t i) {
    return shared->singleton_conditional(state, i)[static_cast<std::size_t>(state[i])];
  };
}

double brook_ratio(const SingletonConditionals& conds, std::span<const int> xi, std::span<const int> xi_tilde,
                   std::span<const std::size_t> order) {
  const std::size_t d = xi.size();
  if (xi_tilde.size() != d) throw ShapeError("Brook ratio states differ in dimension");
  std::vector<std::size_t> seq(order.begin(), order.end());
  if (seq.empty()) {
    seq.resize(d);
    std::iota(seq.begin(), seq.end(), std::size_t{0});
  }
  {
    std::vector<std::size_t> sorted = seq;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      if (sorted.size() != d || sorted[k] != k) throw ShapeError("Brook order must be a permutation of the coordinates");
    }
  }
  // z starts at xi and has its coordinates switched to xi_tilde one at a time.
  std::vector<int> z(xi.begin(), xi.end());
  double ratio = 1.0;
  for (std::size_t c : seq) {
    z[c] = xi[c];
    const double num = conds(z, c);
    z[c] = xi_tilde[c];
    const double den = conds(z, c);
    if (!(num > 0.0) || !(den > 0.0)) {
      throw ZeroConditional(c, "zero singleton conditional on the Brook path at coordinate " + std::to_string(c));
    }
    ratio *= num / den;
  }
  return ratio;
}

DiscreteJoint reconstruct_joint(const SingletonConditionals& conds, int m, std::size_t d) {
  const std::uint64_t n = state_count(m, d);
  const std::vector<int> anchor(d, 0);
  std::vector<int> x(d);
  std::vector<double> weights(n);
  for (std::uint64_t idx = 0; idx < n; ++idx) {
    decode_state(idx, m, x);
    weights[idx] = brook_ratio(conds, x, anchor);
  }
  return DiscreteJoint::from_weights(m, d, std::move(weights));
}

CompletenessCheck gradient_completeness_check(const GridDensity& p, const GridDensity& q, double eps) {
  if (!(p.geometry() == q.geometry())) throw ShapeError("completeness check needs densities on the same grid");
  if (!(eps >= 0.0)) throw ShapeError("eps must be nonnegative");
  const GridGeometry& grid = p.geometry();
  const VectorTable sp = apply(OperatorKind::Gradient, grid, p.log_values());
  const VectorTable sq = apply(OperatorKind::Gradient, grid, q.log_values());
  const auto mp = p.mass_mask();
  const auto mq = q.mass_mask();

  CompletenessCheck r{};
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    r.density_gap = std::max(r.density_gap, std::abs(p[idx] - q[idx]));
    if (!mp[idx] || !mq[idx]) continue;
    double s = 0.0;
    for (std::size_t a = 0; a < grid.dim(); ++a) s += (sp[a][idx] - sq[a][idx]) * (sp[a][idx] - sq[a][idx]);
    r.score_gap = std::max(r.score_gap, std::sqrt(s));
  }
  double extent = 0.0;
  for (const Axis& ax : grid.axes()) extent += ax.hi - ax.lo;
  r.bound = q.peak() * std::expm1(2.0 * eps * extent);
  r.applicable = r.score_gap <= eps;
  r.held = !r.applicable || r.density_gap <= r.bound;
  return r;
}

}  // namespace scorematch
