#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "oracles.hpp"
#include "scorematch/error.hpp"
#include "scorematch/models.hpp"
#include "scorematch/rng.hpp"

using namespace scorematch;
using doctest::Approx;

namespace {

std::vector<double> uniform_vec(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Random SPD covariance A A^T + I/2 in the lower-triangle layout.
std::vector<double> random_gaussian_params(Rng& rng, std::size_t d) {
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = rng.uniform() - 0.5;
  const Eigen::MatrixXd s = a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
  std::vector<double> theta = uniform_vec(rng, d, -1.0, 1.0);
  for (Eigen::Index r = 0; r < s.rows(); ++r)
    for (Eigen::Index c = 0; c <= r; ++c) theta.push_back(s(r, c));
  return theta;
}

}  // namespace

TEST_CASE("gaussian log density and derivatives by hand") {
  const Model g = Model::gaussian(1, {0.0, 1.0});
  const std::vector<double> zero = {0.0};
  const std::vector<double> two = {2.0};
  CHECK(g.log_unnorm(std::span<const double>(zero)) == 0.0);
  CHECK(g.grad_x_log(two)[0] == Approx(-2.0));
  CHECK(g.laplacian_x_log(two) == Approx(-1.0));

  const Model shifted = Model::gaussian(1, {1.0, 1.0});
  const std::vector<double> one = {1.0};
  CHECK(shifted.grad_x_log(one)[0] == 0.0);
}

TEST_CASE("gengauss gradient vanishes at its center") {
  const Model g = Model::gen_gauss_1d(0.0, 1.0, 1.0);
  const std::vector<double> zero = {0.0};
  CHECK(g.grad_x_log(zero)[0] == 0.0);
  CHECK(std::isfinite(g.laplacian_x_log(zero)));
}

TEST_CASE("ising energy by hand") {
  const Model m = Model::ising(2, "chain", {0.0, 0.0, 0.5});
  const std::vector<int> pp = {1, 1};
  const std::vector<int> pm = {1, 0};
  CHECK(m.log_unnorm(std::span<const int>(pp)) == Approx(0.5));
  CHECK(m.log_unnorm(std::span<const int>(pm)) == Approx(-0.5));
}

TEST_CASE("analytic derivatives match finite differences") {
  Rng rng(17);
  const double h = 1e-4;
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t d = 1 + static_cast<std::size_t>(draw % 3);
    const Model g = Model::gaussian(d, random_gaussian_params(rng, d));
    const Model gg = Model::gen_gauss_1d(rng.uniform() - 0.5, 0.5 + rng.uniform(), 1.0 + 2.0 * rng.uniform());
    for (const Model* model : {&g, &gg}) {
      std::vector<double> x = uniform_vec(rng, model->dim(), -2.0, 2.0);
      if (model == &gg && std::abs(x[0] - gg.params()[0]) < 0.1) x[0] += 0.5;
      const auto grad = model->grad_x_log(x);
      double lap_fd = 0.0;
      const double f0 = model->log_unnorm(std::span<const double>(x));
      for (std::size_t a = 0; a < x.size(); ++a) {
        auto xp = x, xm = x;
        xp[a] += h;
        xm[a] -= h;
        const double fp = model->log_unnorm(std::span<const double>(xp));
        const double fm = model->log_unnorm(std::span<const double>(xm));
        CHECK(rel_err(grad[a], (fp - fm) / (2 * h)) < 1e-6);
        lap_fd += (fp - 2 * f0 + fm) / (h * h);
      }
      CHECK(rel_err(model->laplacian_x_log(x), lap_fd) < 1e-5);
    }
  }
}

TEST_CASE("singleton conditionals") {
  const std::vector<int> x = {0, 1};
  SUBCASE("no interaction") {
    const auto c = Model::ising(2, "chain", {0.0, 0.0, 0.0}).singleton_conditional(x, 0);
    CHECK(c[0] == Approx(0.5));
    CHECK(c[1] == Approx(0.5));
  }
  SUBCASE("coupling 0.5 with the neighbour up") {
    const auto c = Model::ising(2, "chain", {0.0, 0.0, 0.5}).singleton_conditional(x, 0);
    CHECK(c[1] == Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
    CHECK(c[1] == Approx(0.731059).epsilon(1e-6));
  }
  SUBCASE("potts at zero parameters") {
    const std::vector<int> y = {2, 0, 1};
    const auto c = Model::potts(3, 3, "chain", std::vector<double>(8, 0.0)).singleton_conditional(y, 1);
    for (double v : c) CHECK(v == Approx(1.0 / 3.0));
  }
  SUBCASE("continuous models have none") {
    CHECK_THROWS_AS(Model::gaussian(1, {0.0, 1.0}).singleton_conditional(x, 0), KindMismatch);
  }
}

TEST_CASE("conditionals agree with ratios of the enumerated joint") {
  Rng rng(5);
  for (int draw = 0; draw < 20; ++draw) {
    const std::size_t d = 2 + static_cast<std::size_t>(draw % 3);
    const auto edges = oracle::complete(d);
    const auto params = uniform_vec(rng, d + edges.size(), -1.0, 1.0);
    const Model m = Model::ising(d, "complete", params);
    const auto p = oracle::ising_joint(params, edges, d);
    for (std::size_t idx = 0; idx < p.size(); ++idx) {
      const auto x = oracle::bits(idx, d);
      for (std::size_t i = 0; i < d; ++i) {
        const auto want = oracle::conditional(p, 2, d, x, i);
        const auto got = m.singleton_conditional(x, i);
        CHECK(std::abs(got[0] - want[0]) < 1e-12);
        CHECK(std::abs(got[1] - want[1]) < 1e-12);
      }
    }
  }
  SUBCASE("potts") {
    const Model m = Model::potts(3, 3, "chain", uniform_vec(rng, 8, -1.0, 1.0));
    const DiscreteJoint j = exact_joint(m);
    for (std::size_t idx = 0; idx < j.size(); ++idx) {
      const auto x = oracle::digits(idx, 3, 3);
      for (std::size_t i = 0; i < 3; ++i) {
        const auto want = oracle::conditional(j.probs(), 3, 3, x, i);
        const auto got = m.singleton_conditional(x, i);
        for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(got[k] - want[k]) < 1e-12);
      }
    }
  }
}

TEST_CASE("exact normalization") {
  SUBCASE("free spins are uniform") {
    const DiscreteJoint j = exact_joint(Model::ising(2, "chain", {0.0, 0.0, 0.0}));
    for (double v : j.probs()) CHECK(v == Approx(0.25));
  }
  SUBCASE("coupled pair by hand") {
    const DiscreteJoint j = exact_joint(Model::ising(2, "chain", {0.0, 0.0, 0.5}));
    const double z = 2 * std::exp(0.5) + 2 * std::exp(-0.5);
    const std::vector<int> pp = {1, 1}, mm = {0, 0}, pm = {1, 0};
    CHECK(j.prob(pp) == Approx(std::exp(0.5) / z).epsilon(1e-12));
    CHECK(j.prob(mm) == Approx(0.365529).epsilon(1e-6));
    CHECK(j.prob(pm) == Approx(std::exp(-0.5) / z).epsilon(1e-12));
  }
  SUBCASE("matches the brute-force oracle and sums to one") {
    Rng rng(8);
    const auto edges = oracle::chain(5);
    const auto params = uniform_vec(rng, 9, -1.0, 1.0);
    const DiscreteJoint j = exact_joint(Model::ising(5, "chain", params));
    const auto want = oracle::ising_joint(params, edges, 5);
    double total = 0.0;
    for (std::size_t k = 0; k < want.size(); ++k) {
      CHECK(std::abs(j[k] - want[k]) < 1e-12);
      total += j[k];
    }
    CHECK(std::abs(total - 1.0) < 1e-10);
  }
  SUBCASE("gaussian on a quadrature box") {
    const Model g = Model::gaussian(1, {0.0, 1.0}).with_quadrature_box({Axis{-8.0, 8.0, 4096}});
    const GridDensity p = exact_grid(g);
    double worst = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      worst = std::max(worst, std::abs(p[k] - oracle::normal_pdf(p.geometry().axis(0).coord(k), 0.0, 1.0)));
    }
    CHECK(worst < 1e-6);
    CHECK(std::abs(p.geometry().integrate(p.values()) - 1.0) < 1e-10);
  }
  SUBCASE("gaussian closed-form partition function") {
    const Model g = Model::gaussian(1, {0.3, 2.0});
    CHECK(log_partition(g) == Approx(0.5 * std::log(2 * std::numbers::pi * 2.0)));
  }
  SUBCASE("oversized state spaces and missing boxes") {
    CHECK_THROWS_AS(exact_joint(Model::ising(30, "chain", std::vector<double>(59, 0.0))), CapacityError);
    CHECK_THROWS_AS(exact_grid(Model::gaussian(1, {0.0, 1.0})), ShapeError);
  }
}

TEST_CASE("sampling") {
  SUBCASE("free spins hit every state a quarter of the time") {
    const Dataset data = sample(Model::ising(2, "chain", {0.0, 0.0, 0.0}), 400000, 3);
    std::map<std::uint64_t, double> freq;
    for (std::size_t s = 0; s < data.size(); ++s) freq[state_index(data.symbol_row(s), 2)] += 1.0 / 400000.0;
    REQUIRE(freq.size() == 4);
    for (const auto& [state, f] : freq) CHECK(std::abs(f - 0.25) < 0.005);
  }
  SUBCASE("chi-square of a coupled chain") {
    const Model m = Model::ising(3, "chain", {0.2, -0.1, 0.0, 0.5, -0.4});
    const DiscreteJoint j = exact_joint(m);
    const std::size_t n = 50000;
    const Dataset data = sample(m, n, 11);
    std::vector<double> counts(8, 0.0);
    for (std::size_t s = 0; s < n; ++s) counts[state_index(data.symbol_row(s), 2)] += 1.0;
    double chi2 = 0.0;
    for (std::size_t k = 0; k < 8; ++k) {
      const double e = j[k] * static_cast<double>(n);
      chi2 += (counts[k] - e) * (counts[k] - e) / e;
    }
    // 7 degrees of freedom; 24.3 is the 0.999 quantile.
    CHECK(chi2 < 24.3);
  }
  SUBCASE("standard normal moments") {
    const Dataset data = sample(Model::gaussian(1, {0.0, 1.0}), 100000, 4);
    const auto mom = oracle::moments(data.reals(), 1);
    CHECK(std::abs(mom[0]) < 0.02);
    CHECK(std::abs(mom[1] - 1.0) < 0.02);
  }
  SUBCASE("correlated gaussian moments") {
    const Dataset data = sample(Model::gaussian(2, {1.0, -1.0, 2.0, 0.6, 0.5}), 200000, 9);
    const auto mom = oracle::moments(data.reals(), 2);
    const std::vector<double> want = {1.0, -1.0, 2.0, 0.6, 0.5};
    for (std::size_t k = 0; k < want.size(); ++k) CHECK(std::abs(mom[k] - want[k]) < 0.03);
  }
  SUBCASE("gengauss draws follow the quadrature density") {
    const Model g = Model::gen_gauss_1d(0.5, 1.0, 4.0);
    const Dataset data = sample(g, 100000, 2);
    const auto mom = oracle::moments(data.reals(), 1);
    CHECK(std::abs(mom[0] - 0.5) < 0.01);
  }
  SUBCASE("reproducible and seeded") {
    const Model m = Model::ising(3, "chain", {0.0, 0.0, 0.0, 0.5, 0.5});
    const Dataset a = sample(m, 1, 42);
    CHECK(a.size() == 1);
    CHECK(a == sample(m, 1, 42));
    CHECK(sample(m, 500, 7) == sample(m, 500, 7));
    CHECK(sample(m, 500, 7).seed() == 7);
    CHECK_FALSE(sample(m, 500, 7) == sample(m, 500, 8));
    const Model g = Model::gaussian(2, {0.0, 0.0, 1.0, 0.3, 1.0});
    CHECK(sample(g, 300, 5) == sample(g, 300, 5));
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(Model::gaussian(2, {0.0, 0.0, 1.0, 2.0, 1.0}), InvalidParams);
  CHECK_THROWS_AS(Model::gaussian(2, {0.0, 0.0, 1.0}), InvalidParams);
  CHECK_THROWS_AS(Model::ising(3, "chain", {0.0, 0.0, 0.0, 0.5}), InvalidParams);
  CHECK_THROWS_AS(Model::gen_gauss_1d(0.0, -1.0, 2.0), InvalidParams);
  CHECK_THROWS_AS(Model::ising(2, "chain", {0.0, NAN, 0.5}), InvalidParams);
  const Model m = Model::ising(2, "chain", {0.0, 0.0, 0.5});
  const std::vector<int> bad_symbol = {0, 2};
  const std::vector<int> bad_dim = {0, 1, 1};
  CHECK_THROWS_AS(m.log_unnorm(std::span<const int>(bad_symbol)), ShapeError);
  CHECK_THROWS_AS(m.log_unnorm(std::span<const int>(bad_dim)), ShapeError);
  const std::vector<double> real = {0.0, 0.0};
  CHECK_THROWS_AS(m.grad_x_log(real), KindMismatch);
}

TEST_CASE("topologies") {
  CHECK(parse_topology("chain", 3) == std::vector<Edge>{{0, 1}, {1, 2}});
  CHECK(parse_topology("complete", 3) == std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}});
  CHECK(parse_topology("none", 3).empty());
  CHECK(parse_topology("grid:2x2", 4) == std::vector<Edge>{{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  CHECK(parse_topology("edges:2-1,0-2", 3) == std::vector<Edge>{{0, 2}, {1, 2}});
  CHECK_THROWS_AS(parse_topology("edges:0-1,1-0", 3), ShapeError);
  CHECK_THROWS_AS(parse_topology("edges:0-3", 3), ShapeError);
  CHECK_THROWS_AS(parse_topology("grid:2x3", 4), ShapeError);
  CHECK_THROWS_AS(parse_topology("ring", 4), ShapeError);
}

TEST_CASE("log offset leaves normalized quantities alone") {
  const Model m = Model::ising(3, "chain", {0.1, -0.2, 0.3, 0.5, -0.5});
  const Model shifted = m.with_log_offset(3.5);
  const DiscreteJoint a = exact_joint(m);
  const DiscreteJoint b = exact_joint(shifted);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == Approx(b[k]).epsilon(1e-13));
  CHECK(log_partition(shifted) == Approx(log_partition(m) + 3.5));
}
