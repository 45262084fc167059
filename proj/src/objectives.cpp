#include "scorematch/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <unordered_map>

#include "scorematch/error.hpp"
#include "scorematch/operators.hpp"
#include "scorematch/summation.hpp"

namespace scorematch {

namespace {

// Per-sample contribution: value plus dense gradient (empty span if not wanted).
using SampleTerm = std::function<double(std::size_t sample, std::span<double> grad)>;

// Mean (or weighted mean) of per-sample terms and gradients, each column
// reduced pairwise in file order.
ObjectiveValue empirical_mean(const Dataset& data, std::size_t num_params, bool with_grad, const SampleTerm& term) {
  const std::size_t n = data.size();
  std::vector<double> values(n);
  std::vector<double> grads(with_grad ? n * num_params : 0);
  for (std::size_t s = 0; s < n; ++s) {
    std::span<double> g = with_grad ? std::span<double>(grads.data() + s * num_params, num_params) : std::span<double>();
    values[s] = term(s, g);
  }
  ObjectiveValue out;
  out.value = pairwise_mean(values, data.weights());
  if (with_grad) {
    std::vector<double> column(n);
    std::vector<double> grad(num_params);
    for (std::size_t p = 0; p < num_params; ++p) {
      for (std::size_t s = 0; s < n; ++s) column[s] = grads[s * num_params + p];
      grad[p] = pairwise_mean(column, data.weights());
    }
    out.grad_theta = std::move(grad);
  }
  return out;
}

// Discrete per-state term; evaluated once per distinct state in the dataset.
using StateTerm = std::function<double(std::span<const int> x, std::span<double> grad)>;

ObjectiveValue discrete_empirical(const Model& model, const Dataset& data, const StateTerm& term) {
  const std::size_t P = model.num_params();
  const std::size_t d = data.dim();
  const int m = data.alphabet_size();

  bool cacheable = true;
  try {
    state_count(m, d, std::uint64_t{1} << 62);
  } catch (const CapacityError&) {
    cacheable = false;
  }

  if (!cacheable) {
    return empirical_mean(data, P, true, [&](std::size_t s, std::span<double> g) {
      std::fill(g.begin(), g.end(), 0.0);
      return term(data.symbol_row(s), g);
    });
  }

  std::unordered_map<std::uint64_t, std::size_t> slot;
  std::vector<std::size_t> sample_slot(data.size());
  std::vector<double> cached_value;
  std::vector<double> cached_grad;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const auto row = data.symbol_row(s);
    const std::uint64_t key = state_index(row, m);
    auto [it, inserted] = slot.try_emplace(key, cached_value.size());
    if (inserted) {
      cached_grad.resize(cached_grad.size() + P, 0.0);
      std::span<double> g(cached_grad.data() + it->second * P, P);
      cached_value.push_back(term(row, g));
    }
    sample_slot[s] = it->second;
  }
  return empirical_mean(data, P, true, [&](std::size_t s, std::span<double> g) {
    const std::size_t k = sample_slot[s];
    std::copy_n(cached_grad.data() + k * P, P, g.begin());
    return cached_value[k];
  });
}

// Singleton conditional of coordinate i together with what is needed to
// differentiate it: dq_xi/dtheta_k = q_xi (v[xi,k] - vbar_k) on the local
// feature set.
struct LocalConditional {
  LocalFeatures lf;
  std::vector<double> logits;
  std::vector<double> q;
  std::vector<double> vbar;
};

LocalConditional local_conditional(const Model& model, std::span<const int> x, std::size_t i) {
  LocalConditional c;
  c.lf = model.local_features(x, i);
  c.q = model.singleton_conditional(x, i);
  const std::size_t m = c.q.size();
  const std::size_t K = c.lf.width();
  const auto& theta = model.params();
  c.logits.assign(m, 0.0);
  c.vbar.assign(K, 0.0);
  for (std::size_t xi = 0; xi < m; ++xi) {
    for (std::size_t k = 0; k < K; ++k) {
      c.logits[xi] += theta[c.lf.index[k]] * c.lf.value[xi * K + k];
      c.vbar[k] += c.q[xi] * c.lf.value[xi * K + k];
    }
  }
  return c;
}

// grad += sum_xi dterm/dq_xi * dq_xi/dtheta.
void chain_conditional(const LocalConditional& c, std::span<const double> dterm_dq, std::span<double> grad) {
  const std::size_t K = c.lf.width();
  for (std::size_t xi = 0; xi < c.q.size(); ++xi) {
    const double w = dterm_dq[xi] * c.q[xi];
    if (w == 0.0) continue;
    for (std::size_t k = 0; k < K; ++k) grad[c.lf.index[k]] += w * (c.lf.value[xi * K + k] - c.vbar[k]);
  }
}

void require_discrete_data(const Model& model, const Dataset& data) {
  if (!model.is_discrete()) throw KindMismatch(std::string("objective needs a discrete model, got ") + to_string(model.kind()));
  if (!data.is_discrete()) throw KindMismatch("objective needs discrete data, got continuous data");
  if (data.dim() != model.dim() || data.alphabet_size() != *model.alphabet_size()) {
    throw ShapeError("data (d=" + std::to_string(data.dim()) + ", m=" + std::to_string(data.alphabet_size()) +
                     ") does not match model (d=" + std::to_string(model.dim()) +
                     ", m=" + std::to_string(*model.alphabet_size()) + ")");
  }
}

void require_continuous_data(const Model& model, const Dataset& data) {
  if (model.is_discrete()) throw KindMismatch(std::string("objective needs a continuous model, got ") + to_string(model.kind()));
  if (data.is_discrete()) throw KindMismatch("objective needs continuous data, got discrete data");
  if (data.dim() != model.dim()) throw ShapeError("data dimension does not match model dimension");
}

void require_joint_matches(const DiscreteJoint& p, const Model& model) {
  if (!model.is_discrete()) throw KindMismatch("population objective needs a discrete model");
  if (p.m() != *model.alphabet_size() || p.d() != model.dim()) throw ShapeError("joint table does not match model shape");
}

// Index of the lower-triangle covariance parameter (r >= c) in the Gaussian layout.
std::size_t cov_param(std::size_t d, std::size_t r, std::size_t c) { return d + r * (r + 1) / 2 + c; }

// Writes symmetric matrix G (d/dSigma as if entries were independent) into the
// lower-triangle layout: off-diagonal parameters move two entries.
void scatter_cov_grad(const Eigen::MatrixXd& G, std::size_t d, std::span<double> grad) {
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c <= r; ++c) {
      const auto ri = static_cast<Eigen::Index>(r);
      const auto ci = static_cast<Eigen::Index>(c);
      grad[cov_param(d, r, c)] = r == c ? G(ri, ri) : G(ri, ci) + G(ci, ri);
    }
  }
}

double lse(std::span<const double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

const char* to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::ScoreMatching: return "sm";
    case ObjectiveKind::GeneralizedDiscrete: return "gsm";
    case ObjectiveKind::RatioMatching: return "rm";
    case ObjectiveKind::PseudoLikelihood: return "pl";
    case ObjectiveKind::ExactMle: return "mle";
  }
  return "?";
}

ObjectiveKind objective_kind_from_string(const std::string& tag) {
  if (tag == "sm") return ObjectiveKind::ScoreMatching;
  if (tag == "gsm") return ObjectiveKind::GeneralizedDiscrete;
  if (tag == "rm") return ObjectiveKind::RatioMatching;
  if (tag == "pl") return ObjectiveKind::PseudoLikelihood;
  if (tag == "mle") return ObjectiveKind::ExactMle;
  throw KindMismatch("unknown objective '" + tag + "' (expected sm, gsm, rm, pl or mle)");
}

void require_compatible(ObjectiveKind objective, const Model& model) {
  bool ok = false;
  switch (objective) {
    case ObjectiveKind::ScoreMatching: ok = !model.is_discrete(); break;
    case ObjectiveKind::GeneralizedDiscrete:
    case ObjectiveKind::RatioMatching:
    case ObjectiveKind::PseudoLikelihood: ok = model.is_discrete(); break;
    case ObjectiveKind::ExactMle: ok = model.is_discrete() || model.kind() == ModelKind::Gaussian; break;
  }
  if (!ok) {
    throw KindMismatch(std::string("objective '") + to_string(objective) + "' is not defined for model kind '" +
                       to_string(model.kind()) + "'");
  }
}

double kl_exact(const DiscreteJoint& p, const DiscreteJoint& q) {
  if (p.m() != q.m() || p.d() != q.d()) throw ShapeError("KL operands live on different state spaces");
  std::vector<double> terms(p.size(), 0.0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0) continue;
    if (!(q[k] > 0.0)) throw NumericalError("KL undefined: q is zero where p is positive");
    terms[k] = p[k] * std::log(p[k] / q[k]);
  }
  return pairwise_sum(terms);
}

double kl_exact(const GridDensity& p, const GridDensity& q) {
  if (!(p.geometry() == q.geometry())) throw ShapeError("KL operands live on different grids");
  std::vector<double> integrand(p.size(), 0.0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0) continue;
    if (!(q[k] > 0.0)) throw NumericalError("KL undefined: q is zero where p is positive");
    integrand[k] = p[k] * (std::log(p[k]) - std::log(q[k]));
  }
  return p.geometry().integrate(integrand);
}

double fisher_exact(const GridDensity& p, const GridDensity& q) {
  if (!(p.geometry() == q.geometry())) throw ShapeError("Fisher divergence operands live on different grids");
  const GridGeometry& grid = p.geometry();
  const VectorTable sp = apply(OperatorKind::Gradient, grid, p.log_values());
  const VectorTable sq = apply(OperatorKind::Gradient, grid, q.log_values());
  const auto mask = p.mass_mask();
  std::vector<double> integrand(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!mask[k]) continue;
    if (!(q[k] > 0.0)) throw NumericalError("Fisher divergence needs q > 0 where p carries mass");
    double s = 0.0;
    for (std::size_t a = 0; a < grid.dim(); ++a) s += (sp[a][k] - sq[a][k]) * (sp[a][k] - sq[a][k]);
    integrand[k] = p[k] * s;
  }
  return grid.integrate(integrand);
}

ObjectiveValue sm_objective(const Model& family, std::span<const double> theta, const Dataset& data) {
  const Model model = family.with_params(theta);
  require_continuous_data(model, data);
  const std::size_t d = model.dim();
  const std::size_t P = model.num_params();

  if (model.kind() == ModelKind::Gaussian) {
    const Eigen::MatrixXd& prec = model.precision();
    const double tr = prec.trace();
    const Eigen::MatrixXd prec2 = prec * prec;
    const Eigen::VectorXd mu = model.mean();
    return empirical_mean(data, P, true, [&](std::size_t s, std::span<double> grad) {
      const auto row = data.real_row(s);
      const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(d)) - mu;
      const Eigen::VectorXd g = prec * r;  // = -grad_x log q
      const Eigen::VectorXd pg = prec * g;
      for (std::size_t k = 0; k < d; ++k) grad[k] = -2.0 * pg(static_cast<Eigen::Index>(k));
      const Eigen::MatrixXd G = -(pg * g.transpose() + g * pg.transpose()) + 2.0 * prec2;
      scatter_cov_grad(G, d, grad);
      return g.squaredNorm() - 2.0 * tr;
    });
  }

  return empirical_mean(data, P, false, [&](std::size_t s, std::span<double>) {
    const auto row = data.real_row(s);
    const auto g = model.grad_x_log(row);
    double sq = 0.0;
    for (double v : g) sq += v * v;
    return sq + 2.0 * model.laplacian_x_log(row);
  });
}

ObjectiveValue gsm_discrete_objective(const Model& family, std::span<const double> theta, const Dataset& data) {
  const Model model = family.with_params(theta);
  require_discrete_data(model, data);
  const auto m = static_cast<std::size_t>(*model.alphabet_size());
  return discrete_empirical(model, data, [&](std::span<const int> x, std::span<double> grad) {
    double total = 0.0;
    std::vector<double> dq(m);
    for (std::size_t i = 0; i < model.dim(); ++i) {
      const LocalConditional c = local_conditional(model, x, i);
      for (std::size_t xi = 0; xi < m; ++xi) {
        const double r = c.q[xi] - (static_cast<int>(xi) == x[i] ? 1.0 : 0.0);
        total += r * r;
        dq[xi] = 2.0 * r;
      }
      chain_conditional(c, dq, grad);
    }
    return total;
  });
}

ObjectiveValue ratio_matching_objective(const Model& family, std::span<const double> theta, const Dataset& data) {
  const Model model = family.with_params(theta);
  require_discrete_data(model, data);
  const auto m = static_cast<std::size_t>(*model.alphabet_size());
  return discrete_empirical(model, data, [&](std::span<const int> x, std::span<double> grad) {
    double total = 0.0;
    std::vector<double> dq(m);
    std::vector<double> others;
    for (std::size_t i = 0; i < model.dim(); ++i) {
      const LocalConditional c = local_conditional(model, x, i);
      for (std::size_t xi = 0; xi < m; ++xi) {
        // phi(q~(xi, x^{\i}) / q~(~xi, x^{\i})): the complementary conditional.
        others.clear();
        for (std::size_t o = 0; o < m; ++o) {
          if (o != xi) others.push_back(c.logits[o]);
        }
        const double u = std::exp(c.logits[xi] - lse(others));
        const double phi = 1.0 / (1.0 + u);
        const double r = (static_cast<int>(xi) != x[i] ? 1.0 : 0.0) - phi;
        total += r * r;
        // d phi / d q_xi = -1.
        dq[xi] = 2.0 * r;
      }
      chain_conditional(c, dq, grad);
    }
    return total;
  });
}

ObjectiveValue pseudo_likelihood_objective(const Model& family, std::span<const double> theta,
                                           const Dataset& data) {
  const Model model = family.with_params(theta);
  require_discrete_data(model, data);
  const auto m = static_cast<std::size_t>(*model.alphabet_size());
  return discrete_empirical(model, data, [&](std::span<const int> x, std::span<double> grad) {
    double total = 0.0;
    std::vector<double> dq(m);
    for (std::size_t i = 0; i < model.dim(); ++i) {
      const LocalConditional c = local_conditional(model, x, i);
      const auto obs = static_cast<std::size_t>(x[i]);
      total -= std::log(c.q[obs]);
      std::fill(dq.begin(), dq.end(), 0.0);
      dq[obs] = -1.0 / c.q[obs];
      chain_conditional(c, dq, grad);
    }
    return total;
  });
}

ObjectiveValue exact_mle_objective(const Model& family, std::span<const double> theta, const Dataset& data) {
  const Model model = family.with_params(theta);
  require_compatible(ObjectiveKind::ExactMle, model);

  if (model.kind() == ModelKind::Gaussian) {
    require_continuous_data(model, data);
    const std::size_t d = model.dim();
    const Eigen::MatrixXd& prec = model.precision();
    const Eigen::VectorXd mu = model.mean();
    const double log_z = log_partition(model) - model.log_offset();
    return empirical_mean(data, model.num_params(), true, [&](std::size_t s, std::span<double> grad) {
      const auto row = data.real_row(s);
      const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(d)) - mu;
      const Eigen::VectorXd g = prec * r;
      for (std::size_t k = 0; k < d; ++k) grad[k] = -g(static_cast<Eigen::Index>(k));
      const Eigen::MatrixXd G = 0.5 * (prec - g * g.transpose());
      scatter_cov_grad(G, d, grad);
      return 0.5 * r.dot(g) + log_z;
    });
  }

  require_discrete_data(model, data);
  const DiscreteJoint joint = exact_joint(model);
  const double log_z = log_partition(model);
  std::vector<double> expected(model.num_params(), 0.0);
  {
    std::vector<int> x(model.dim());
    std::vector<std::vector<double>> cols(model.num_params(), std::vector<double>(joint.size()));
    for (std::size_t idx = 0; idx < joint.size(); ++idx) {
      decode_state(idx, joint.m(), x);
      const auto phi = model.features(x);
      for (std::size_t p = 0; p < phi.size(); ++p) cols[p][idx] = joint[idx] * phi[p];
    }
    for (std::size_t p = 0; p < expected.size(); ++p) expected[p] = pairwise_sum(cols[p]);
  }
  return discrete_empirical(model, data, [&](std::span<const int> x, std::span<double> grad) {
    const auto phi = model.features(x);
    for (std::size_t p = 0; p < phi.size(); ++p) grad[p] = expected[p] - phi[p];
    return log_z - model.log_unnorm(x);
  });
}

ObjectiveValue marginalization_score_objective(const Model& family, std::span<const double> theta,
                                               const Dataset& data) {
  const Model model = family.with_params(theta);
  require_discrete_data(model, data);
  const auto m = static_cast<std::size_t>(*model.alphabet_size());
  return discrete_empirical(model, data, [&](std::span<const int> x, std::span<double> grad) {
    double total = 0.0;
    std::vector<double> dq(m);
    for (std::size_t i = 0; i < model.dim(); ++i) {
      const LocalConditional c = local_conditional(model, x, i);
      const auto obs = static_cast<std::size_t>(x[i]);
      total += 1.0 / (c.q[obs] * c.q[obs]);
      for (std::size_t xi = 0; xi < m; ++xi) {
        total -= 2.0 / c.q[xi];
        dq[xi] = 2.0 / (c.q[xi] * c.q[xi]);
      }
      dq[obs] -= 2.0 / (c.q[obs] * c.q[obs] * c.q[obs]);
      chain_conditional(c, dq, grad);
    }
    return total;
  });
}

ObjectiveValue conditional_balance_objective(const Model& family, std::span<const double> theta,
                                             const Dataset& data) {
  const Model model = family.with_params(theta);
  require_discrete_data(model, data);
  const auto m = static_cast<std::size_t>(*model.alphabet_size());
  return discrete_empirical(model, data, [&](std::span<const int> x, std::span<double> grad) {
    double total = 0.0;
    std::vector<double> dq(m);
    for (std::size_t i = 0; i < model.dim(); ++i) {
      const LocalConditional c = local_conditional(model, x, i);
      for (std::size_t xi = 0; xi < m; ++xi) {
        const double ratio = (1.0 - c.q[xi]) / c.q[xi];
        total += ratio * ratio;
        dq[xi] = -2.0 * (1.0 - c.q[xi]) / (c.q[xi] * c.q[xi] * c.q[xi]);
      }
      total -= static_cast<double>(m);
      chain_conditional(c, dq, grad);
    }
    return total;
  });
}

ObjectiveValue complement_conditional_objective(const Model& family, std::span<const double> theta,
                                                const Dataset& data) {
  const Model model = family.with_params(theta);
  require_discrete_data(model, data);
  const auto m = static_cast<std::size_t>(*model.alphabet_size());
  return discrete_empirical(model, data, [&](std::span<const int> x, std::span<double> grad) {
    double total = 0.0;
    std::vector<double> dq(m);
    for (std::size_t i = 0; i < model.dim(); ++i) {
      const LocalConditional c = local_conditional(model, x, i);
      for (std::size_t xi = 0; xi < m; ++xi) {
        total += (1.0 - c.q[xi]) * (1.0 - c.q[xi]);
        dq[xi] = -2.0 * (1.0 - c.q[xi]);
      }
      chain_conditional(c, dq, grad);
    }
    return total;
  });
}

double gsm_discrete_population(const DiscreteJoint& p, const Model& family, std::span<const double> theta) {
  const Model model = family.with_params(theta);
  require_joint_matches(p, model);
  std::vector<int> x(p.d());
  std::vector<double> terms(p.size(), 0.0);
  for (std::size_t idx = 0; idx < p.size(); ++idx) {
    if (p[idx] == 0.0) continue;
    decode_state(idx, p.m(), x);
    double s = 0.0;
    for (std::size_t i = 0; i < p.d(); ++i) {
      const auto pc = p.conditional(x, i);
      const auto qc = model.singleton_conditional(x, i);
      for (std::size_t xi = 0; xi < pc.size(); ++xi) s += (pc[xi] - qc[xi]) * (pc[xi] - qc[xi]);
    }
    terms[idx] = p[idx] * s;
  }
  return pairwise_sum(terms);
}

double ratio_matching_population(const DiscreteJoint& p, const Model& family, std::span<const double> theta) {
  const Model model = family.with_params(theta);
  require_joint_matches(p, model);
  const auto m = static_cast<std::size_t>(p.m());
  std::vector<int> x(p.d());
  std::vector<double> terms(p.size(), 0.0);
  std::vector<double> pj(m);
  std::vector<double> ql(m);
  std::vector<double> others;
  for (std::size_t idx = 0; idx < p.size(); ++idx) {
    if (p[idx] == 0.0) continue;
    decode_state(idx, p.m(), x);
    double s = 0.0;
    for (std::size_t i = 0; i < p.d(); ++i) {
      std::vector<int> z = x;
      for (std::size_t xi = 0; xi < m; ++xi) {
        z[i] = static_cast<int>(xi);
        pj[xi] = p.prob(z);
        ql[xi] = model.log_unnorm(std::span<const int>(z));
      }
      double p_total = 0.0;
      for (double v : pj) p_total += v;
      for (std::size_t xi = 0; xi < m; ++xi) {
        const double p_rest = p_total - pj[xi];
        const double phi_p = p_rest > 0.0 ? 1.0 / (1.0 + pj[xi] / p_rest) : 0.0;
        others.clear();
        for (std::size_t o = 0; o < m; ++o) {
          if (o != xi) others.push_back(ql[o]);
        }
        const double phi_q = 1.0 / (1.0 + std::exp(ql[xi] - lse(others)));
        s += (phi_p - phi_q) * (phi_p - phi_q);
      }
    }
    terms[idx] = p[idx] * s;
  }
  return pairwise_sum(terms);
}

ObjectiveValue evaluate(ObjectiveKind kind, const Model& family, std::span<const double> theta, const Dataset& data) {
  require_compatible(kind, family);
  switch (kind) {
    case ObjectiveKind::ScoreMatching: return sm_objective(family, theta, data);
    case ObjectiveKind::GeneralizedDiscrete: return gsm_discrete_objective(family, theta, data);
    case ObjectiveKind::RatioMatching: return ratio_matching_objective(family, theta, data);
    case ObjectiveKind::PseudoLikelihood: return pseudo_likelihood_objective(family, theta, data);
    case ObjectiveKind::ExactMle: return exact_mle_objective(family, theta, data);
  }
  throw KindMismatch("unknown objective kind");
}

}  // namespace scorematch
