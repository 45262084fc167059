#include "scorematch/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "scorematch/error.hpp"
#include "scorematch/summation.hpp"

namespace scorematch {

namespace {

// Line searches give up after this many halvings.
constexpr int kMaxBacktracks = 80;

double max_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::string describe(std::span<const double> theta) {
  std::string s = "[";
  for (std::size_t k = 0; k < theta.size(); ++k) s += (k ? ", " : "") + fmt::format("{:.17g}", theta[k]);
  return s + "]";
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct Evaluation {
  double value;
  std::vector<double> grad;
};

Evaluation evaluate_with_gradient(const ObjectiveFn& objective, std::span<const double> theta) {
  ObjectiveValue v = objective(theta);
  Evaluation e{v.value, {}};
  if (v.grad_theta) {
    e.grad = std::move(*v.grad_theta);
  } else {
    e.grad = fd_gradient([&](std::span<const double> t) { return objective(t).value; }, theta, kOptimizerFdStep);
  }
  return e;
}

}  // namespace

void OptimizerConfig::validate() const {
  if (max_iters == 0) throw InvalidParams("max_iters must be positive");
  if (!(grad_tol > 0.0)) throw InvalidParams("grad_tol must be positive");
  if (!(initial_step > 0.0)) throw InvalidParams("initial_step must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw InvalidParams("backtracking factor must lie in (0, 1)");
  if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0))
    throw InvalidParams("sufficient-decrease constant must lie in (0, 1)");
  if (!all_finite(init_theta)) throw InvalidParams("init_theta must be finite");
}

std::vector<double> default_init(const Model& family) {
  switch (family.kind()) {
    case ModelKind::Ising:
    case ModelKind::Potts: return std::vector<double>(family.num_params(), 0.0);
    case ModelKind::Gaussian: {
      const std::size_t d = family.dim();
      std::vector<double> theta(family.num_params(), 0.0);
      for (std::size_t r = 0; r < d; ++r) theta[d + r * (r + 1) / 2 + r] = 1.0;
      return theta;
    }
    case ModelKind::GenGauss1D: return {0.0, 1.0, 2.0};
  }
  throw KindMismatch("unknown model kind");
}

std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> theta, double step) {
  if (!(step > 0.0)) throw InvalidParams("finite-difference step must be positive");
  std::vector<double> x(theta.begin(), theta.end());
  std::vector<double> g(theta.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double x0 = x[k];
    x[k] = x0 + step;
    const double fp = f(x);
    x[k] = x0 - step;
    const double fm = f(x);
    x[k] = x0;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericalError("non-finite objective in finite differences at theta = " + describe(x));
    }
    g[k] = (fp - fm) / (2.0 * step);
  }
  return g;
}

FitResult minimize(const ObjectiveFn& objective, std::vector<double> theta0, const OptimizerConfig& cfg,
                   ObjectiveKind tag) {
  cfg.validate();
  FitResult r;
  r.objective = tag;
  r.theta_hat = std::move(theta0);

  Evaluation cur = evaluate_with_gradient(objective, r.theta_hat);
  if (!std::isfinite(cur.value) || !all_finite(cur.grad)) {
    throw NumericalError("non-finite objective at starting theta = " + describe(r.theta_hat));
  }
  r.trajectory.push_back(cur.value);

  while (true) {
    r.grad_norm = max_norm(cur.grad);
    r.objective_value = cur.value;
    if (r.grad_norm <= cfg.grad_tol) {
      r.converged = true;
      break;
    }
    if (r.iters >= cfg.max_iters) break;

    double g2 = 0.0;
    for (double g : cur.grad) g2 += g * g;

    std::vector<double> trial(r.theta_hat.size());
    bool accepted = false;
    Evaluation next;
    double step = cfg.initial_step;
    for (int b = 0; b < kMaxBacktracks; ++b, step *= cfg.backtrack) {
      for (std::size_t k = 0; k < trial.size(); ++k) trial[k] = r.theta_hat[k] - step * cur.grad[k];
      try {
        next = evaluate_with_gradient(objective, trial);
      } catch (const InvalidParams&) {
        continue;
      } catch (const NumericalError&) {
        continue;
      }
      if (!std::isfinite(next.value) || !all_finite(next.grad)) continue;
      if (next.value <= cur.value - cfg.sufficient_decrease * step * g2) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    // An Armijo step near 2/L barely contracts the stiff direction; keep
    // halving while that strictly lowers the objective.
    for (int b = 0; b < kMaxBacktracks; ++b) {
      step *= cfg.backtrack;
      std::vector<double> shorter(trial.size());
      for (std::size_t k = 0; k < shorter.size(); ++k) shorter[k] = r.theta_hat[k] - step * cur.grad[k];
      Evaluation e;
      try {
        e = evaluate_with_gradient(objective, shorter);
      } catch (const Error&) {
        break;
      }
      if (!std::isfinite(e.value) || !all_finite(e.grad) || !(e.value < next.value)) break;
      trial = std::move(shorter);
      next = std::move(e);
    }

    r.theta_hat = trial;
    cur = std::move(next);
    r.trajectory.push_back(cur.value);
    ++r.iters;
  }
  return r;
}

FitResult fit(const Model& family, ObjectiveKind objective, const Dataset& data, const OptimizerConfig& cfg) {
  require_compatible(objective, family);
  if (data.is_discrete() != family.is_discrete()) {
    throw KindMismatch(std::string("model kind '") + to_string(family.kind()) + "' does not match " +
                       (data.is_discrete() ? "discrete" : "continuous") + " data");
  }
  std::vector<double> theta0 = cfg.init_theta.empty() ? default_init(family) : cfg.init_theta;
  if (theta0.size() != family.num_params()) {
    throw ShapeError("init_theta has " + std::to_string(theta0.size()) + " entries, model needs " +
                     std::to_string(family.num_params()));
  }
  const ObjectiveFn fn = [&](std::span<const double> theta) { return evaluate(objective, family, theta, data); };
  return minimize(fn, std::move(theta0), cfg, objective);
}

std::vector<double> closed_form_gaussian_sm(const Dataset& data) {
  if (data.is_discrete()) throw KindMismatch("closed-form Gaussian estimator needs continuous data");
  if (data.size() == 0) throw ShapeError("empty dataset");
  const std::size_t d = data.dim();
  const std::size_t n = data.size();
  std::vector<double> column(n);
  std::vector<double> mean(d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t s = 0; s < n; ++s) column[s] = data.real_row(s)[a];
    mean[a] = pairwise_mean(column, data.weights());
  }
  std::vector<double> theta(mean);
  Eigen::MatrixXd cov(d, d);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c <= r; ++c) {
      for (std::size_t s = 0; s < n; ++s) {
        const auto row = data.real_row(s);
        column[s] = (row[r] - mean[r]) * (row[c] - mean[c]);
      }
      const double v = pairwise_mean(column, data.weights());
      cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
      cov(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = v;
      theta.push_back(v);
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0.0) || eig.eigenvalues().minCoeff() <= 1e-12 * top) throw NumericalError("sample covariance is singular");
  return theta;
}

std::vector<ComparisonRow> compare_estimators(const Model& truth, std::span<const std::size_t> n_list,
                                              std::span<const std::uint64_t> seeds,
                                              std::span<const ObjectiveKind> objectives,
                                              const OptimizerConfig& cfg) {
  if (!truth.is_discrete()) throw KindMismatch("estimator comparison needs an enumerable (discrete) model");
  for (ObjectiveKind o : objectives) require_compatible(o, truth);
  for (std::size_t n : n_list) {
    if (n == 0) throw InvalidParams("sample sizes must be positive");
  }
  const std::vector<double>& star = truth.params();
  auto make_row = [&](ObjectiveKind o, std::optional<std::size_t> n, std::optional<std::uint64_t> seed,
                      const FitResult& r) {
    double err = 0.0;
    for (std::size_t k = 0; k < star.size(); ++k) err = std::max(err, std::abs(r.theta_hat[k] - star[k]));
    return ComparisonRow{o, n, seed, r.converged, r.iters, err, r.objective_value, r.grad_norm, r.theta_hat};
  };

  std::vector<ComparisonRow> rows;
  for (std::size_t n : n_list) {
    for (std::uint64_t seed : seeds) {
      const Dataset data = sample(truth, n, seed);
      for (ObjectiveKind o : objectives) rows.push_back(make_row(o, n, seed, fit(truth, o, data, cfg)));
    }
  }
  const Dataset population = enumerate_states(exact_joint(truth));
  for (ObjectiveKind o : objectives) {
    rows.push_back(make_row(o, std::nullopt, std::nullopt, fit(truth, o, population, cfg)));
  }
  return rows;
}

}  // namespace scorematch
