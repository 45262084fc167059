#include "scorematch/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "scorematch/density_spec.hpp"
#include "scorematch/error.hpp"
#include "scorematch/estimation.hpp"
#include "scorematch/models.hpp"
#include "scorematch/objectives.hpp"
#include "scorematch/operators.hpp"
#include "scorematch/rng.hpp"
#include "scorematch/scalespace.hpp"

namespace scorematch {

namespace {

constexpr double kCurveTol = 0.02;
constexpr double kGridTol = 1e-4;
constexpr double kRatioLo = 4.0 * 0.7;
constexpr double kRatioHi = 4.0 * 1.3;

CheckResult below(const std::string& suite, const std::string& name, double measured, double threshold) {
  return {suite, name, measured, threshold, measured <= threshold};
}

CheckResult ratio_check(const std::string& suite, const std::string& name, double ratio) {
  return {suite, name, ratio, 4.0, ratio >= kRatioLo && ratio <= kRatioHi};
}

const Axis kBox{-12.0, 12.0, 4096};

GridDensity gauss_grid(double mu, double var, const Axis& axis) {
  return discretize(InlineDensity{{{1.0, mu, var}}}, axis);
}

std::vector<double> random_positive(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  for (double& v : w) v = 0.05 + rng.uniform();
  return w;
}

std::vector<double> random_params(Rng& rng, std::size_t n, double scale) {
  std::vector<double> t(n);
  for (double& v : t) v = scale * (2.0 * rng.uniform() - 1.0);
  return t;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

std::vector<CheckResult> suite_theorem1() {
  const std::string s = "theorem1";
  std::vector<CheckResult> out;
  const auto t = parse_t_grid("0.02:1:0.02");
  const GridDensity p = gauss_grid(0.0, 1.0, kBox);
  out.push_back(below(s, "N(0,1) vs N(0,2)", theorem1_residual(divergence_curve(p, gauss_grid(0.0, 2.0, kBox), t)),
                      kCurveTol));
  out.push_back(below(s, "N(0,1) vs N(0.5,1)",
                      theorem1_residual(divergence_curve(p, gauss_grid(0.5, 1.0, kBox), t)), kCurveTol));
  // Closed forms for N(0,1) vs N(0,2) at t = 0.
  const double dkl0 = 0.5 * (1.0 / 2.0 - 1.0 / 1.0 + 1.0 / 4.0);
  const double fisher0 = 1.0 * (1.0 - 0.5) * (1.0 - 0.5);
  out.push_back(below(s, "closed form at t=0", std::abs(dkl0 + 0.5 * fisher0), 0.0));
  return out;
}

std::vector<CheckResult> suite_debruijn() {
  const std::string s = "debruijn";
  const auto t = parse_t_grid("0.08:1.02:0.02");
  const InlineDensity normal = InlineDensity::parse("gauss:0:1");
  const InlineDensity bumps = InlineDensity::parse("mix:0.5,-2,1;0.5,2,1");
  return {below(s, "N(0,1)", debruijn_residual(discretize(normal, default_axis({normal}, t.back())), t), 0.01),
          below(s, "two-bump mixture", debruijn_residual(discretize(bumps, default_axis({bumps}, t.back())), t), 0.02)};
}

std::vector<CheckResult> suite_lemma1() {
  const std::string s = "lemma1";
  auto residual = [](std::size_t n) {
    return lemma1_residual(GridDensity::from_function(GridGeometry({Axis{-12.0, 12.0, n}}), [](std::span<const double> x) {
      return std::exp(-0.5 * x[0] * x[0]);
    }));
  };
  const double fine = residual(4096);
  const double coarse = residual(2048);
  return {below(s, "gaussian n=4096", fine, kGridTol), ratio_check(s, "refinement ratio 2048/4096", coarse / fine)};
}

std::vector<CheckResult> suite_heatpde() {
  const std::string s = "heatpde";
  auto residual = [](std::size_t n) { return heat_pde_residual(gauss_grid(0.0, 1.0, Axis{-12.0, 12.0, n}), 0.5, 1e-3); };
  const double fine = residual(4096);
  const double coarse = residual(2048);
  return {below(s, "N(0,1) t=0.5 n=4096", fine, kGridTol), ratio_check(s, "refinement ratio 2048/4096", coarse / fine)};
}

std::vector<CheckResult> suite_adjoint() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const int m = 2 + static_cast<int>(seed % 2);
    const std::size_t d = 1 + seed % 4;
    const TableShape shape{m, d};
    const auto f = random_params(rng, shape.size(), 1.0);
    VectorTable g(d);
    for (auto& gi : g) gi = random_params(rng, shape.size(), 1.0);
    worst = std::max(worst, adjoint_identity_residual(OperatorKind::Marginalization, shape, f, g));
  }
  return {below("adjoint", "marginalization, 100 pairs", worst, 1e-12)};
}

std::vector<CheckResult> suite_brook() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    Rng rng(1000 + seed);
    const int m = 2 + static_cast<int>(seed % 2);
    const std::size_t d = 1 + seed % 4;
    const DiscreteJoint p = DiscreteJoint::from_weights(m, d, random_positive(rng, state_count(m, d)));
    const DiscreteJoint r = reconstruct_joint(conditionals_of(p), m, d);
    worst = std::max(worst, max_abs_diff(p.probs(), r.probs()));
  }
  return {below("brook", "reconstruction of random positive joints", worst, 1e-10)};
}

// Spread (max - min) of population minus expanded objective over random theta.
std::vector<CheckResult> suite_offset_constancy() {
  const std::string s = "eq16eq17";
  double spread_gsm = 0.0;
  double spread_marg = 0.0;
  for (std::size_t d = 2; d <= 6; ++d) {
    Rng rng(2000 + d);
    const DiscreteJoint p = DiscreteJoint::from_weights(2, d, random_positive(rng, state_count(2, d)));
    const Dataset states = enumerate_states(p);
    const Model family = Model::ising(d, "complete", std::vector<double>(d + d * (d - 1) / 2, 0.0));
    double lo_g = INFINITY, hi_g = -INFINITY, lo_m = INFINITY, hi_m = -INFINITY, scale_m = 1.0;
    for (int k = 0; k < 20; ++k) {
      const auto theta = random_params(rng, family.num_params(), 1.0);
      const double g = gsm_discrete_population(p, family, theta) - gsm_discrete_objective(family, theta, states).value;
      const DiscreteJoint q = exact_joint(family.with_params(theta));
      const double gfd = generalized_fisher_divergence(OperatorKind::Marginalization, p, q.probs());
      const double mg = gfd - marginalization_score_objective(family, theta, states).value;
      scale_m = std::max(scale_m, std::abs(gfd));
      lo_g = std::min(lo_g, g);
      hi_g = std::max(hi_g, g);
      lo_m = std::min(lo_m, mg);
      hi_m = std::max(hi_m, mg);
    }
    spread_gsm = std::max(spread_gsm, hi_g - lo_g);
    // Reciprocal conditionals reach 1e7 here, so this offset is judged relative to the divergence.
    spread_marg = std::max(spread_marg, (hi_m - lo_m) / scale_m);
  }
  return {below(s, "conditional divergence offset, d=2..6", spread_gsm, 1e-10),
          below(s, "marginalization divergence offset (relative), d=2..6", spread_marg, 1e-12)};
}

std::vector<CheckResult> suite_rm_identity() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(3000 + seed);
    const std::size_t d = 2 + seed % 3;
    const int m = seed % 2 == 0 ? 2 : 3;
    const DiscreteJoint p = DiscreteJoint::from_weights(m, d, random_positive(rng, state_count(m, d)));
    const std::size_t fields = d * static_cast<std::size_t>(m - 1);
    const std::size_t couplings = d - 1;
    const Model family = m == 2 ? Model::ising(d, "chain", std::vector<double>(fields + couplings, 0.0))
                                : Model::potts(d, m, "chain", std::vector<double>(fields + couplings, 0.0));
    const auto theta = random_params(rng, family.num_params(), 1.0);
    worst = std::max(worst,
                     std::abs(ratio_matching_population(p, family, theta) - gsm_discrete_population(p, family, theta)));
  }
  return {below("rm-identity", "ratio form vs conditional form, 50 pairs", worst, 1e-12)};
}

double relative_grad_error(const Model& family, ObjectiveKind kind, std::span<const double> theta,
                           const Dataset& data) {
  const auto analytic = evaluate(kind, family, theta, data).grad_theta.value();
  const auto numeric =
      fd_gradient([&](std::span<const double> t) { return evaluate(kind, family, t, data).value; }, theta);
  return max_abs_diff(analytic, numeric) / std::max(max_abs(analytic), 1.0);
}

std::vector<CheckResult> suite_gradcheck() {
  const std::string s = "gradcheck";
  std::vector<CheckResult> out;
  {
    const std::vector<double> theta = {0.3, -0.2, 1.5, 0.3, 0.8};
    const Model g = Model::gaussian(2, theta);
    const Dataset data = sample(Model::gaussian(2, {0.0, 0.0, 1.0, 0.2, 1.2}), 200, 11);
    out.push_back(below(s, "sm gaussian d=2", relative_grad_error(g, ObjectiveKind::ScoreMatching, theta, data), 1e-5));
    out.push_back(below(s, "mle gaussian d=2", relative_grad_error(g, ObjectiveKind::ExactMle, theta, data), 1e-5));
  }
  {
    Rng rng(4000);
    const Model ising = Model::ising(3, "chain", random_params(rng, 5, 0.8));
    const Dataset data = sample(ising, 300, 12);
    const auto theta = random_params(rng, 5, 0.8);
    for (ObjectiveKind k : {ObjectiveKind::GeneralizedDiscrete, ObjectiveKind::RatioMatching,
                            ObjectiveKind::PseudoLikelihood, ObjectiveKind::ExactMle}) {
      out.push_back(below(s, std::string(to_string(k)) + " ising d=3", relative_grad_error(ising, k, theta, data), 1e-5));
    }
    const Model potts = Model::potts(3, 3, "chain", random_params(rng, 8, 0.8));
    const Dataset pdata = sample(potts, 300, 13);
    const auto ptheta = random_params(rng, 8, 0.8);
    out.push_back(below(s, "gsm potts d=3 m=3",
                        relative_grad_error(potts, ObjectiveKind::GeneralizedDiscrete, ptheta, pdata), 1e-5));
  }
  for (std::size_t d = 2; d <= 4; ++d) {
    Rng rng(5000 + d);
    const Model truth = Model::ising(d, "chain", random_params(rng, 2 * d - 1, 0.8));
    const DiscreteJoint p = exact_joint(truth);
    const auto& star = truth.params();
    const double gsm = max_abs(
        fd_gradient([&](std::span<const double> t) { return gsm_discrete_population(p, truth, t); }, star));
    const double rm = max_abs(
        fd_gradient([&](std::span<const double> t) { return ratio_matching_population(p, truth, t); }, star));
    out.push_back(below(s, "population optimum gsm d=" + std::to_string(d), gsm, 1e-8));
    out.push_back(below(s, "population optimum rm d=" + std::to_string(d), rm, 1e-8));
  }
  return out;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"theorem1", "debruijn", "lemma1",      "heatpde", "adjoint",
                                                 "brook",    "eq16eq17", "rm-identity", "gradcheck"};
  return names;
}

bool is_suite(const std::string& name) {
  if (name == "all") return true;
  const auto& names = suite_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::vector<CheckResult> run_suite(const std::string& name) {
  if (name == "all") {
    std::vector<CheckResult> out;
    for (const std::string& n : suite_names()) {
      auto part = run_suite(n);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  if (name == "theorem1") return suite_theorem1();
  if (name == "debruijn") return suite_debruijn();
  if (name == "lemma1") return suite_lemma1();
  if (name == "heatpde") return suite_heatpde();
  if (name == "adjoint") return suite_adjoint();
  if (name == "brook") return suite_brook();
  if (name == "eq16eq17") return suite_offset_constancy();
  if (name == "rm-identity") return suite_rm_identity();
  if (name == "gradcheck") return suite_gradcheck();
  throw InvalidParams("unknown suite '" + name + "'");
}

}  // namespace scorematch
