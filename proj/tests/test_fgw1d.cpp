#include <chrono>
#include <cmath>

#include "doctest.h"
#include "sfgw/errors.hpp"
#include "sfgw/fgw1d.hpp"
#include "test_support.hpp"

using namespace sfgw;
using sfgw::testing::random_values;
using sfgw::testing::relative_error;

namespace {

Projected1D vals(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return Projected1D(x);
}

FgwConfig config(double beta, int r = 2) { return FgwConfig{beta, r}; }

}  // namespace

TEST_CASE("project returns dot products and a stable ascending order") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 0, 0, 1;
  const PointCloud cloud(m);
  const Projected1D p = project(cloud, Direction::axis(2, 0));
  CHECK(p.values[0] == 1.0);
  CHECK(p.values[1] == 0.0);
  CHECK(p.order == std::vector<Eigen::Index>{1, 0});

  Eigen::MatrixXd one(1, 2);
  one << 1, 1;
  Eigen::Vector2d theta(0.6, 0.8);
  CHECK(project(PointCloud(one), Direction(theta)).values[0] == doctest::Approx(1.4).epsilon(1e-15));

  Rng rng(3);
  const PointCloud c = sfgw::testing::random_cloud(rng, 9, 4);
  const Direction t = sample_uniform_sphere(4, rng);
  const Projected1D pos = project(c, t);
  const Projected1D neg = project(c, Direction(-t.coords()));
  CHECK(neg.values == -pos.values);
  std::vector<Eigen::Index> reversed(pos.order.rbegin(), pos.order.rend());
  CHECK(neg.order == reversed);

  CHECK_THROWS_AS(project(c, Direction::axis(3)), DimensionError);
}

TEST_CASE("stable sort keeps input order for ties") {
  const Projected1D p = vals({2.0, 1.0, 2.0, 1.0});
  CHECK(p.order == std::vector<Eigen::Index>{1, 3, 0, 2});
}

TEST_CASE("fgw_1d worked examples") {
  CHECK(fgw_1d(vals({0, 1}), vals({1, 2}), config(0.0)) == 1.0);
  CHECK(fgw_1d(vals({0, 1}), vals({0, 2}), config(1.0)) == 4.5);
  CHECK(fgw_1d_bruteforce(vals({0, 1}), vals({1, 2}), config(0.0)) == 1.0);
  CHECK(fgw_1d_bruteforce(vals({0, 1}), vals({0, 2}), config(1.0)) == 4.5);
  CHECK(fgw_1d_coupling_cost(vals({0, 1}), vals({0, 2}), config(1.0),
                             MonotoneCoupling::Reversed) == 4.5);

  const Projected1D x = vals({3.0, -1.0, 0.5});
  for (double beta : {0.0, 0.3, 1.0}) CHECK(fgw_1d(x, x, config(beta)) == 0.0);
}

TEST_CASE("fgw_1d_bruteforce single point and size limit") {
  for (int r : {1, 2, 3}) {
    const double expect = 0.7 * std::pow(std::abs(2.5 - (-1.0)), r);
    CHECK(fgw_1d_bruteforce(vals({2.5}), vals({-1.0}), config(0.3, r)) ==
          doctest::Approx(expect).epsilon(1e-14));
  }
  Rng rng(1);
  const Projected1D nine(random_values(rng, 9));
  CHECK_THROWS_AS(fgw_1d_bruteforce(nine, nine, config(0.5)), SizeError);
}

TEST_CASE("fgw_1d validates inputs") {
  CHECK_THROWS_AS(fgw_1d(vals({0, 1}), vals({0}), config(0.1)), SizeError);
  CHECK_THROWS_AS(fgw_1d(vals({0}), vals({0}), config(1.5)), ParameterError);
  CHECK_THROWS_AS(fgw_1d(vals({0}), vals({0}), config(0.5, 0)), ParameterError);
  CHECK_THROWS_AS(fgw_1d_grad(vals({0}), vals({1}), config(0.5, 1)), ParameterError);
}

TEST_CASE("monotone closed form is exact at beta in {0, 1}") {
  Rng rng(2024);
  for (double beta : {0.0, 1.0}) {
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.index(6));
      const Projected1D xs(random_values(rng, n)), ys(random_values(rng, n, 2.0));
      const double closed = fgw_1d(xs, ys, config(beta));
      const double brute = fgw_1d_bruteforce(xs, ys, config(beta));
      worst = std::max(worst, std::abs(closed - brute) / std::max(brute, 1e-300));
    }
    CAPTURE(beta);
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("monotone closed form upper-bounds the permutation optimum for interior beta") {
  Rng rng(77);
  int strict = 0;
  const int trials = 300;
  for (int trial = 0; trial < trials; ++trial) {
    const double beta = 0.05 + 0.9 * rng.uniform();
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.index(5));
    const Projected1D xs(random_values(rng, n)), ys(random_values(rng, n));
    const double closed = fgw_1d(xs, ys, config(beta));
    const double brute = fgw_1d_bruteforce(xs, ys, config(beta));
    CHECK(closed >= brute * (1.0 - 1e-12));
    if (closed > brute * (1.0 + 1e-9)) ++strict;
  }
  MESSAGE("strict monotone-vs-permutation gap on " << strict << " / " << trials << " instances");
}

TEST_CASE("fgw_1d symmetry, identity and pure-GW translation invariance") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.index(150));
    const double beta = trial % 3 == 0 ? 0.0 : (trial % 3 == 1 ? 1.0 : rng.uniform());
    const Projected1D xs(random_values(rng, n)), ys(random_values(rng, n, 1.5));
    CHECK(fgw_1d(xs, ys, config(beta)) == fgw_1d(ys, xs, config(beta)));
    CHECK(fgw_1d(xs, xs, config(beta)) == 0.0);
    CHECK(fgw_1d(xs, ys, config(beta)) >= 0.0);

    const Projected1D shifted((ys.values.array() + 3.7).matrix());
    CHECK(relative_error(fgw_1d(xs, shifted, config(1.0)), fgw_1d(xs, ys, config(1.0))) < 1e-9);
  }
}

TEST_CASE("weak triangle inequality with constant 2 for squared ground cost") {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.index(15));
    const double beta = rng.uniform();
    const Projected1D x(random_values(rng, n)), y(random_values(rng, n, 2.0)),
        z(random_values(rng, n, 0.5));
    const double lhs = fgw_1d(x, z, config(beta));
    const double rhs = 2.0 * (fgw_1d(x, y, config(beta)) + fgw_1d(y, z, config(beta)));
    CHECK(lhs <= rhs * (1.0 + 1e-12));
  }
}

TEST_CASE("moment-expansion fast path matches the direct double sum") {
  Rng rng(99);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Index n = kFgwFastPathMin + static_cast<Eigen::Index>(rng.index(200));
    const double beta = rng.uniform();
    const Projected1D xs(random_values(rng, n, 1.0 + 3.0 * rng.uniform()));
    Eigen::VectorXd y = random_values(rng, n);
    y.array() += 5.0 * rng.normal();
    const Projected1D ys(y);
    worst = std::max(worst, relative_error(fgw_1d(xs, ys, config(beta)),
                                           fgw_1d_reference(xs, ys, config(beta))));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("fgw_1d_grad worked examples") {
  const FgwGradient g = fgw_1d_grad(vals({3.0}), vals({1.0}), config(0.0));
  CHECK(g.grad_xs[0] == 4.0);
  CHECK(g.grad_ys[0] == -4.0);
  CHECK(g.value == 4.0);

  Rng rng(8);
  const Projected1D xs(random_values(rng, 12));
  const FgwGradient z = fgw_1d_grad(xs, xs, config(0.4));
  CHECK(z.grad_xs.cwiseAbs().maxCoeff() == 0.0);
  CHECK(z.grad_ys.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fgw_1d_grad matches central differences away from ties") {
  Rng rng(31);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = trial < 25 ? 16 : 96;  // direct and moment-expansion paths
    const Eigen::VectorXd x = random_values(rng, n), y = random_values(rng, n, 1.3);
    if (sfgw::testing::min_gap(x) < 1e-4 || sfgw::testing::min_gap(y) < 1e-4) continue;
    const FgwConfig cfg = config(0.1);
    const FgwGradient g = fgw_1d_grad(Projected1D(x), Projected1D(y), cfg);
    const double other_coupling =
        fgw_1d_coupling_cost(Projected1D(x), Projected1D(y), cfg,
                             g.coupling == MonotoneCoupling::Ascending
                                 ? MonotoneCoupling::Reversed
                                 : MonotoneCoupling::Ascending);
    if (other_coupling - g.value < 1e-6 * g.value) continue;  // near a coupling switch

    auto fx = [&](const Eigen::VectorXd& v) { return fgw_1d(Projected1D(v), Projected1D(y), cfg); };
    auto fy = [&](const Eigen::VectorXd& v) { return fgw_1d(Projected1D(x), Projected1D(v), cfg); };
    CHECK(relative_error(g.grad_xs, sfgw::testing::central_difference(fx, x, 1e-5)) < 1e-5);
    CHECK(relative_error(g.grad_ys, sfgw::testing::central_difference(fy, y, 1e-5)) < 1e-5);
    ++checked;
  }
  CHECK(checked >= 30);
}

TEST_CASE("fast-path gradient matches the direct gradient") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 70 + static_cast<Eigen::Index>(rng.index(60));
    const Eigen::VectorXd x = random_values(rng, n), y = random_values(rng, n, 2.0);
    const FgwConfig cfg = config(rng.uniform());
    const FgwGradient fast = fgw_1d_grad(Projected1D(x), Projected1D(y), cfg);
    // Differences of the O(n^2) reference objective.
    auto f = [&](const Eigen::VectorXd& v) {
      return fgw_1d_reference(Projected1D(v), Projected1D(y), cfg);
    };
    if (sfgw::testing::min_gap(x) < 1e-4 || sfgw::testing::min_gap(y) < 1e-4) continue;
    CHECK(relative_error(fast.grad_xs, sfgw::testing::central_difference(f, x, 1e-5)) < 1e-5);
  }
}

TEST_CASE("fgw_1d_grad is exactly symmetric under argument swap") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.index(100));
    const Projected1D xs(random_values(rng, n)), ys(random_values(rng, n));
    const FgwConfig cfg = config(rng.uniform());
    const FgwGradient a = fgw_1d_grad(xs, ys, cfg), b = fgw_1d_grad(ys, xs, cfg);
    CHECK(a.value == b.value);
    CHECK(a.grad_xs == b.grad_ys);
    CHECK(a.grad_ys == b.grad_xs);
  }
}

TEST_CASE("reference evaluation scales quadratically") {
  Rng rng(17);
  auto time_it = [&](Eigen::Index n) {
    const Projected1D xs(random_values(rng, n)), ys(random_values(rng, n));
    double best = INFINITY;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      volatile double v = fgw_1d_reference(xs, ys, config(0.5));
      (void)v;
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
  };
  const double t1024 = time_it(1024);
  const double t2048 = time_it(2048);
  MESSAGE("n=1024: " << t1024 << " s, n=2048: " << t2048 << " s");
  CHECK(t2048 <= 8.0 * t1024);
}

TEST_CASE("general exponents evaluate and stay symmetric") {
  Rng rng(21);
  for (int r : {1, 3, 4}) {
    const Projected1D xs(random_values(rng, 5)), ys(random_values(rng, 5));
    const double v = fgw_1d(xs, ys, config(0.0, r));
    CHECK(v == doctest::Approx(fgw_1d_bruteforce(xs, ys, config(0.0, r))).epsilon(1e-12));
    CHECK(fgw_1d(xs, ys, config(0.5, r)) == fgw_1d(ys, xs, config(0.5, r)));
  }
}
