#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "scorematch/error.hpp"
#include "scorematch/estimation.hpp"
#include "scorematch/models.hpp"
#include "scorematch/objectives.hpp"
#include "scorematch/operators.hpp"
#include "scorematch/rng.hpp"

using namespace scorematch;
using doctest::Approx;

namespace {

std::vector<double> random_signed(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

GridDensity gauss_grid(double mu, double var, double lo, double hi, std::size_t n) {
  return GridDensity::from_function(GridGeometry({Axis{lo, hi, n}}),
                                    [=](std::span<const double> x) { return oracle::normal_pdf(x[0], mu, var); });
}

Dataset single(std::vector<int> x, int m = 2) {
  const std::size_t d = x.size();
  return Dataset::discrete(d, m, std::move(x));
}

const Model kUniform2 = Model::ising(2, "chain", {0.0, 0.0, 0.0});
const Model kCoupled = Model::ising(2, "chain", {0.0, 0.0, 0.5});
const Model kUniform3 = Model::potts(2, 3, "chain", std::vector<double>(5, 0.0));

using Objective = ObjectiveValue (*)(const Model&, std::span<const double>, const Dataset&);

}  // namespace

TEST_CASE("KL divergence") {
  SUBCASE("grid") {
    const GridDensity p = gauss_grid(0.0, 1.0, -10, 10, 8192);
    CHECK(kl_exact(p, p) == 0.0);
    const double want = 0.5 * (std::log(2.0) + 0.5 - 1.0);
    CHECK(want == Approx(0.0965736).epsilon(1e-6));
    CHECK(std::abs(kl_exact(p, gauss_grid(0.0, 2.0, -10, 10, 8192)) - want) < 1e-6);
  }
  SUBCASE("tables") {
    const DiscreteJoint u = DiscreteJoint::uniform(2, 2);
    const auto q = oracle::ising_joint({0.0, 0.0, 0.5}, oracle::chain(2), 2);
    double want = 0.0;
    for (double v : q) want += 0.25 * std::log(0.25 / v);
    const double got = kl_exact(u, exact_joint(kCoupled));
    CHECK(got == Approx(want).epsilon(1e-12));
    CHECK(std::abs(got - 0.1201) < 1e-4);
    CHECK_THROWS_AS(kl_exact(u, DiscreteJoint(2, 2, {0.5, 0.5, 0.0, 0.0})), NumericalError);
    CHECK_THROWS_AS(kl_exact(u, DiscreteJoint::uniform(2, 3)), ShapeError);
  }
}

TEST_CASE("Fisher divergence on grids") {
  const GridDensity p = gauss_grid(0.0, 1.0, -12, 12, 4096);
  CHECK(fisher_exact(p, p) == 0.0);
  CHECK(std::abs(fisher_exact(p, gauss_grid(1.0, 1.0, -12, 12, 4096)) - 1.0) < 1e-4);
  CHECK(std::abs(fisher_exact(p, gauss_grid(0.0, 2.0, -12, 12, 4096)) - 0.25) < 1e-4);
  CHECK_THROWS_AS(fisher_exact(p, gauss_grid(0.0, 1.0, -11, 11, 4096)), ShapeError);
}

TEST_CASE("score matching objective") {
  const Model g = Model::gaussian(1, {0.0, 1.0});
  const auto& th = g.params();
  CHECK(sm_objective(g, th, Dataset::continuous(1, {0.0})).value == Approx(-2.0));
  CHECK(sm_objective(g, th, Dataset::continuous(1, {1.0, -1.0})).value == Approx(-1.0));
  CHECK(sm_objective(g.with_log_offset(7.0), th, Dataset::continuous(1, {1.0, -1.0})).value ==
        sm_objective(g, th, Dataset::continuous(1, {1.0, -1.0})).value);

  SUBCASE("gaussian closed form E[r' S^-2 r] - 2 tr S^-1") {
    const std::vector<double> theta = {0.2, -0.4, 1.3, 0.4, 0.9};
    const Dataset data = sample(Model::gaussian(2, {0.0, 0.0, 1.0, 0.0, 1.0}), 50, 3);
    Eigen::Matrix2d s;
    s << 1.3, 0.4, 0.4, 0.9;
    const Eigen::Matrix2d pinv = s.inverse();
    double acc = 0.0;
    for (std::size_t n = 0; n < data.size(); ++n) {
      const Eigen::Vector2d r(data.real_row(n)[0] - 0.2, data.real_row(n)[1] + 0.4);
      acc += r.dot(pinv * pinv * r);
    }
    const double want = acc / 50.0 - 2.0 * pinv.trace();
    CHECK(sm_objective(Model::gaussian(2, theta), theta, data).value == Approx(want).epsilon(1e-12));
  }
  SUBCASE("gengauss uses the generic derivatives and has no analytic gradient") {
    const Model gg = Model::gen_gauss_1d(0.0, 1.0, 3.0);
    const auto v = sm_objective(gg, gg.params(), Dataset::continuous(1, {0.5, -1.0}));
    CHECK_FALSE(v.grad_theta.has_value());
    const std::vector<double> a = {0.5}, b = {-1.0};
    double want = 0.0;
    for (const auto* x : {&a, &b}) {
      const double gr = gg.grad_x_log(*x)[0];
      want += 0.5 * (gr * gr + 2.0 * gg.laplacian_x_log(*x));
    }
    CHECK(v.value == Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("conditional divergence expansion") {
  SUBCASE("hand values") {
    CHECK(gsm_discrete_objective(kUniform2, kUniform2.params(), single({0, 1})).value == Approx(1.0));
    CHECK(gsm_discrete_objective(kUniform3, kUniform3.params(), single({2, 0}, 3)).value == Approx(4.0 / 3.0));
    const double qm = 1.0 / (1.0 + std::exp(1.0));
    CHECK(gsm_discrete_objective(kCoupled, kCoupled.params(), single({1, 1})).value ==
          Approx(2.0 * 2.0 * qm * qm).epsilon(1e-12));
  }
  SUBCASE("population values") {
    const DiscreteJoint u = DiscreteJoint::uniform(2, 2);
    const auto q = oracle::ising_joint({0.0, 0.0, 0.5}, oracle::chain(2), 2);
    const double want = oracle::conditional_divergence(u.probs(), q, 2, 2);
    CHECK(want == Approx(0.213552).epsilon(1e-6));
    CHECK(gsm_discrete_population(u, kCoupled, kCoupled.params()) == Approx(want).epsilon(1e-12));
    CHECK(gsm_discrete_population(exact_joint(kCoupled), kCoupled, kCoupled.params()) < 1e-15);
    // Against a uniform binary model every q conditional is 1/2.
    Rng rng(4);
    std::vector<double> w(8);
    for (double& v : w) v = 0.1 + rng.uniform();
    const DiscreteJoint p = DiscreteJoint::from_weights(2, 3, w);
    const Model flat = Model::ising(3, "chain", std::vector<double>(5, 0.0));
    CHECK(gsm_discrete_population(p, flat, flat.params()) ==
          Approx(oracle::conditional_divergence(p.probs(), std::vector<double>(8, 0.125), 2, 3)).epsilon(1e-12));
  }
  SUBCASE("population minus expansion is constant in theta") {
    for (std::size_t d = 2; d <= 6; ++d) {
      Rng rng(100 + d);
      std::vector<double> w(std::size_t{1} << d);
      for (double& v : w) v = 0.05 + rng.uniform();
      const DiscreteJoint p = DiscreteJoint::from_weights(2, d, w);
      const Dataset states = enumerate_states(p);
      const Model family = Model::ising(d, "complete", std::vector<double>(d + d * (d - 1) / 2, 0.0));
      double first = 0.0;
      for (int k = 0; k < 20; ++k) {
        const auto theta = random_signed(rng, family.num_params());
        const double gap =
            gsm_discrete_population(p, family, theta) - gsm_discrete_objective(family, theta, states).value;
        if (k == 0) first = gap;
        CHECK(std::abs(gap - first) <= 1e-10);
      }
    }
  }
}

TEST_CASE("ratio matching") {
  SUBCASE("empirical value equals the conditional expansion") {
    Rng rng(9);
    for (int draw = 0; draw < 10; ++draw) {
      const Model m = draw % 2 == 0 ? Model::ising(3, "complete", random_signed(rng, 6))
                                    : Model::potts(3, 3, "chain", random_signed(rng, 8));
      const Dataset data = sample(m, 200, static_cast<std::uint64_t>(draw));
      const auto theta = random_signed(rng, m.num_params(), 2.0);
      const auto a = ratio_matching_objective(m, theta, data);
      const auto b = gsm_discrete_objective(m, theta, data);
      CHECK(a.value == Approx(b.value).epsilon(1e-12));
      for (std::size_t k = 0; k < theta.size(); ++k) CHECK(std::abs((*a.grad_theta)[k] - (*b.grad_theta)[k]) < 1e-12);
    }
  }
  SUBCASE("population identity") {
    const DiscreteJoint u = DiscreteJoint::uniform(2, 2);
    CHECK(ratio_matching_population(u, kCoupled, kCoupled.params()) == Approx(0.213552).epsilon(1e-6));
    CHECK(ratio_matching_population(exact_joint(kCoupled), kCoupled, kCoupled.params()) < 1e-15);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng rng(seed);
      std::vector<double> w(8);
      for (double& v : w) v = 0.05 + rng.uniform();
      const DiscreteJoint p = DiscreteJoint::from_weights(2, 3, w);
      const Model family = Model::ising(3, "complete", std::vector<double>(6, 0.0));
      const auto theta = random_signed(rng, 6);
      const double q_pop = oracle::conditional_divergence(p.probs(), oracle::ising_joint(theta, oracle::complete(3), 3), 2, 3);
      CHECK(std::abs(ratio_matching_population(p, family, theta) - q_pop) <= 1e-12);
      CHECK(std::abs(gsm_discrete_population(p, family, theta) - q_pop) <= 1e-12);
    }
  }
}

TEST_CASE("printed single-coordinate forms") {
  SUBCASE("balance of reciprocal conditionals") {
    CHECK(conditional_balance_objective(kUniform2, kUniform2.params(), single({0, 1})).value == Approx(0.0));
    CHECK(conditional_balance_objective(kUniform3, kUniform3.params(), single({1, 2}, 3)).value == Approx(18.0));
    CHECK(conditional_balance_objective(kCoupled, kCoupled.params(), single({1, 1})).value ==
          Approx(11.048782).epsilon(1e-7));
  }
  SUBCASE("balance ignores the observed coordinate") {
    const Model lone = Model::ising(1, "none", {0.7});
    CHECK(conditional_balance_objective(lone, lone.params(), single({0})).value ==
          conditional_balance_objective(lone, lone.params(), single({1})).value);
    // Zero gradient at the uniform model whatever the data.
    const Dataset skewed = Dataset::discrete(1, 2, {1, 1, 1, 0});
    const std::vector<double> zero = {0.0};
    CHECK(std::abs((*conditional_balance_objective(lone, zero, skewed).grad_theta)[0]) < 1e-15);
  }
  SUBCASE("complement conditionals") {
    CHECK(complement_conditional_objective(kUniform2, kUniform2.params(), single({0, 1})).value == Approx(1.0));
    CHECK(complement_conditional_objective(kUniform3, kUniform3.params(), single({1, 2}, 3)).value ==
          Approx(8.0 / 3.0));
    const std::vector<double> extreme = {30.0, 30.0, 0.0};
    CHECK(complement_conditional_objective(kCoupled, extreme, single({1, 1})).value == Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("pseudo-likelihood and exact likelihood") {
  CHECK(pseudo_likelihood_objective(kUniform2, kUniform2.params(), single({0, 1})).value ==
        Approx(2.0 * std::log(2.0)));
  CHECK(pseudo_likelihood_objective(kCoupled, kCoupled.params(), single({1, 1})).value ==
        Approx(0.626523).epsilon(1e-6));
  const std::vector<double> extreme = {40.0, 40.0, 0.0};
  CHECK(pseudo_likelihood_objective(kCoupled, extreme, single({1, 1})).value < 1e-30);
  CHECK(exact_mle_objective(kUniform2, kUniform2.params(), single({1, 0})).value == Approx(std::log(4.0)));
  CHECK(exact_mle_objective(kCoupled, extreme, single({1, 1})).value < 1e-30);

  SUBCASE("gaussian likelihood is stationary at the sample moments") {
    const Dataset data = sample(Model::gaussian(2, {0.5, 0.0, 1.0, 0.3, 2.0}), 400, 8);
    const auto mom = oracle::moments(data.reals(), 2);
    const auto v = exact_mle_objective(Model::gaussian(2, mom), mom, data);
    for (double g : *v.grad_theta) CHECK(std::abs(g) < 1e-12);
    CHECK(v.value == Approx(std::log(2 * std::numbers::pi) + 1.0 +
                            0.5 * std::log(mom[2] * mom[4] - mom[3] * mom[3])).epsilon(1e-12));
  }
}

TEST_CASE("reciprocal-conditional route of the marginalization divergence") {
  for (std::size_t d = 2; d <= 4; ++d) {
    Rng rng(50 + d);
    std::vector<double> w(std::size_t{1} << d);
    for (double& v : w) v = 0.05 + rng.uniform();
    const DiscreteJoint p = DiscreteJoint::from_weights(2, d, w);
    const Dataset states = enumerate_states(p);
    const Model family = Model::ising(d, "chain", std::vector<double>(2 * d - 1, 0.0));
    double first = 0.0;
    for (int k = 0; k < 10; ++k) {
      const auto theta = random_signed(rng, family.num_params());
      const double div =
          generalized_fisher_divergence(OperatorKind::Marginalization, p, exact_joint(family.with_params(theta)).probs());
      const double gap = div - marginalization_score_objective(family, theta, states).value;
      if (k == 0) first = gap;
      CHECK(std::abs(gap - first) <= 1e-10 * std::max(1.0, div));
    }
  }
}

TEST_CASE("normalization invariance") {
  Rng rng(21);
  const Model ising = Model::ising(3, "chain", random_signed(rng, 5));
  const Model potts = Model::potts(3, 3, "chain", random_signed(rng, 8));
  const Model gauss = Model::gaussian(2, {0.1, 0.2, 1.0, 0.2, 0.7});
  const Model gg = Model::gen_gauss_1d(0.0, 1.0, 3.0);
  const std::vector<Objective> discrete = {gsm_discrete_objective,          ratio_matching_objective,
                                           pseudo_likelihood_objective,     exact_mle_objective,
                                           marginalization_score_objective, conditional_balance_objective,
                                           complement_conditional_objective};
  for (int k = 0; k < 5; ++k) {
    const double c = -5.0 + 10.0 * rng.uniform();
    for (const Model* m : {&ising, &potts}) {
      const Dataset data = sample(*m, 100, 3);
      for (Objective f : discrete) {
        CHECK(std::abs(f(m->with_log_offset(c), m->params(), data).value - f(*m, m->params(), data).value) <= 1e-12);
      }
    }
    const Dataset cont = sample(gauss, 100, 4);
    CHECK(std::abs(sm_objective(gauss.with_log_offset(c), gauss.params(), cont).value -
                   sm_objective(gauss, gauss.params(), cont).value) <= 1e-12);
    const Dataset one = Dataset::continuous(1, {0.3, -0.2, 1.1});
    CHECK(std::abs(sm_objective(gg.with_log_offset(c), gg.params(), one).value -
                   sm_objective(gg, gg.params(), one).value) <= 1e-12);
  }
}

TEST_CASE("analytic parameter gradients match finite differences") {
  Rng rng(31);
  auto check = [](Objective f, const Model& m, const std::vector<double>& theta, const Dataset& data) {
    const auto analytic = f(m, theta, data).grad_theta.value();
    const auto numeric = fd_gradient([&](std::span<const double> t) { return f(m, t, data).value; }, theta);
    double err = 0.0, scale = 1.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      err = std::max(err, std::abs(analytic[k] - numeric[k]));
      scale = std::max(scale, std::abs(analytic[k]));
    }
    CHECK(err / scale < 1e-5);
  };
  const Model ising = Model::ising(4, "grid:2x2", random_signed(rng, 8, 0.8));
  const Model potts = Model::potts(3, 3, "complete", random_signed(rng, 9, 0.8));
  for (const Model* m : {&ising, &potts}) {
    const Dataset data = sample(*m, 300, 5);
    const auto theta = random_signed(rng, m->num_params(), 0.8);
    for (Objective f : {gsm_discrete_objective, ratio_matching_objective, pseudo_likelihood_objective,
                        exact_mle_objective, marginalization_score_objective, conditional_balance_objective,
                        complement_conditional_objective}) {
      check(f, *m, theta, data);
    }
  }
  for (std::size_t d = 1; d <= 3; ++d) {
    std::vector<double> theta = random_signed(rng, d, 1.0);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c <= r; ++c) theta.push_back(r == c ? 1.0 + rng.uniform() : 0.2 * rng.uniform());
    const Model g = Model::gaussian(d, theta);
    const Dataset data = sample(Model::gaussian(d, theta), 200, 6);
    check(sm_objective, g, theta, data);
    check(exact_mle_objective, g, theta, data);
  }
}

TEST_CASE("weighted datasets reproduce population expectations") {
  const Model m = Model::ising(3, "chain", {0.2, 0.0, -0.3, 0.6, 0.4});
  const DiscreteJoint p = exact_joint(m);
  const Dataset states = enumerate_states(p);
  const auto theta = std::vector<double>{0.1, 0.1, 0.1, 0.1, 0.1};
  double want = 0.0;
  for (std::size_t idx = 0; idx < p.size(); ++idx) {
    want += p[idx] * pseudo_likelihood_objective(m, theta, single(oracle::bits(idx, 3))).value;
  }
  CHECK(pseudo_likelihood_objective(m, theta, states).value == Approx(want).epsilon(1e-13));
}

TEST_CASE("kinds and shapes") {
  const Model g = Model::gaussian(1, {0.0, 1.0});
  CHECK_THROWS_AS(require_compatible(ObjectiveKind::ScoreMatching, kCoupled), KindMismatch);
  CHECK_THROWS_AS(require_compatible(ObjectiveKind::GeneralizedDiscrete, g), KindMismatch);
  CHECK_THROWS_AS(require_compatible(ObjectiveKind::ExactMle, Model::gen_gauss_1d(0, 1, 2)), KindMismatch);
  CHECK_NOTHROW(require_compatible(ObjectiveKind::ExactMle, g));
  CHECK_THROWS_AS(gsm_discrete_objective(kCoupled, kCoupled.params(), single({0, 1, 1})), ShapeError);
  CHECK_THROWS_AS(gsm_discrete_objective(kCoupled, kCoupled.params(), single({0, 2}, 3)), ShapeError);
  CHECK_THROWS_AS(sm_objective(g, g.params(), single({0})), KindMismatch);
  CHECK_THROWS_AS(evaluate(ObjectiveKind::PseudoLikelihood, g, g.params(), Dataset::continuous(1, {0.0})),
                  KindMismatch);
  for (ObjectiveKind k : {ObjectiveKind::ScoreMatching, ObjectiveKind::GeneralizedDiscrete, ObjectiveKind::RatioMatching,
                          ObjectiveKind::PseudoLikelihood, ObjectiveKind::ExactMle}) {
    CHECK(objective_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(objective_kind_from_string("cd"), KindMismatch);
}
