#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "etp/ad/special.hpp"
#include "etp/dist/categorical.hpp"
#include "etp/dist/dirichlet.hpp"
#include "etp/dist/gaussian.hpp"
#include "etp/dist/rng.hpp"
#include "support/dirichlet_oracle.hpp"
#include "support/gradcheck.hpp"

using namespace etp;
using dist::DirichletParams;
using dist::SeededRng;

namespace {

std::vector<double> random_alpha(SeededRng& rng, std::size_t K) {
  std::vector<double> a(K);
  for (double& v : a) v = std::exp(rng.uniform(std::log(0.3), std::log(20.0)));
  return a;
}

// KL between two univariate normals by composite Simpson quadrature of
// q log(q / p) over mean_q +- 12 sd_q.
double gaussian_kl_quadrature(double mq, double vq, double mp, double vp) {
  const double sq = std::sqrt(vq);
  const double lo = mq - 12 * sq, hi = mq + 12 * sq;
  const int n = 20000;
  const double h = (hi - lo) / n;
  auto logn = [](double x, double m, double v) {
    return -0.5 * std::log(2 * std::numbers::pi * v) - (x - m) * (x - m) / (2 * v);
  };
  auto f = [&](double x) {
    const double lq = logn(x, mq, vq);
    return std::exp(lq) * (lq - logn(x, mp, vp));
  };
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("SeededRng is reproducible and streams are distinct") {
  SeededRng a(42), b(42), c(42, 1);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  SeededRng d1 = SeededRng(3).derive(7), d2 = SeededRng(3).derive(7), d3 = SeededRng(3).derive(8);
  CHECK(d1.uniform() == d2.uniform());
  CHECK(d1.uniform() != d3.uniform());
}

TEST_CASE("uniform stays in the open unit interval and index stays in range") {
  SeededRng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(rng.uniform_index(7) < 7);
  }
}

TEST_CASE("normal and gamma samplers have the right first two moments") {
  SeededRng rng(5);
  const int n = 200000;
  double s = 0, ss = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    ss += x * x;
  }
  CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
  CHECK(ss / n == doctest::Approx(1.0).epsilon(0.02));
  for (double shape : {0.3, 1.0, 4.5}) {
    double g = 0, gg = 0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.gamma(shape);
      g += x;
      gg += x * x;
    }
    const double mean = g / n, var = gg / n - mean * mean;
    CHECK(std::abs(mean - shape) < 4.0 * std::sqrt(shape / n));
    CHECK(var == doctest::Approx(shape).epsilon(0.05));
  }
}

TEST_CASE("permutation is a bijection and deterministic") {
  SeededRng a(9), b(9);
  const auto p = dist::permutation(50, a);
  CHECK(p == dist::permutation(50, b));
  CHECK(std::set<std::size_t>(p.begin(), p.end()).size() == 50);
  CHECK(*std::max_element(p.begin(), p.end()) == 49);
}

TEST_CASE("DirichletParams validates its concentrations") {
  CHECK_THROWS(DirichletParams({1.0}));
  CHECK_THROWS(DirichletParams({1.0, 0.0}));
  CHECK_THROWS(DirichletParams({1.0, -2.0}));
  CHECK_THROWS(DirichletParams({1.0, std::nan("")}));
  CHECK(DirichletParams({1.0, 2.5}).total() == 3.5);
}

TEST_CASE("KL of a Dirichlet to itself is zero and KL is non-negative") {
  SeededRng rng(2);
  for (int i = 0; i < 50; ++i) {
    const DirichletParams p(random_alpha(rng, 2 + rng.uniform_index(5)));
    CHECK(std::abs(dist::dirichlet_kl(p, p)) <= 1e-10);
    const DirichletParams q(random_alpha(rng, p.size()));
    CHECK(dist::dirichlet_kl(q, p) >= -1e-12);
  }
}

TEST_CASE("KL to the uniform Dirichlet agrees with the general form") {
  SeededRng rng(3);
  for (int i = 0; i < 50; ++i) {
    const std::size_t K = 2 + rng.uniform_index(8);
    const DirichletParams q(random_alpha(rng, K));
    const DirichletParams u(std::vector<double>(K, 1.0));
    CHECK(dist::dirichlet_kl_to_uniform(q) == doctest::Approx(dist::dirichlet_kl(q, u)).epsilon(1e-12));
  }
}

TEST_CASE("Dirichlet KL, moments and E[log pi] match a Monte-Carlo oracle") {
  SeededRng rng(4);
  for (int set = 0; set < 4; ++set) {
    const std::size_t K = 2 + rng.uniform_index(3);
    const DirichletParams q(random_alpha(rng, K)), p(random_alpha(rng, K));
    const auto mc = testing::dirichlet_mc(q.alpha(), p.alpha(), 200000, 100 + set);
    CHECK(mc.kl.within(dist::dirichlet_kl(q, p)));
    const auto moments = dist::dirichlet_moments(q);
    for (std::size_t k = 0; k < K; ++k) {
      CHECK(mc.mean[k].within(moments.mean[k]));
      CHECK(mc.variance[k].within(moments.variance[k]));
      CHECK(mc.expected_log[k].within(dist::dirichlet_expected_log_prob(q, k)));
    }
  }
}

TEST_CASE("E[log pi_k] at the uniform Dirichlet is psi(1) - psi(K)") {
  for (std::size_t K : {2u, 3u, 10u}) {
    const DirichletParams u(std::vector<double>(K, 1.0));
    double harmonic = 0.0;
    for (std::size_t j = 1; j < K; ++j) harmonic += 1.0 / static_cast<double>(j);
    CHECK(dist::dirichlet_expected_log_prob(u, 0) == doctest::Approx(-harmonic).epsilon(1e-13));
  }
}

TEST_CASE("library Dirichlet sampler lands on the simplex with the right mean") {
  SeededRng rng(6);
  const DirichletParams d({0.5, 2.0, 7.5});
  std::vector<double> sum(3, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto pi = dist::dirichlet_sample(d, rng);
    REQUIRE(std::accumulate(pi.begin(), pi.end(), 0.0) == doctest::Approx(1.0));
    for (int k = 0; k < 3; ++k) {
      REQUIRE(pi[k] > 0.0);
      sum[k] += pi[k];
    }
  }
  const auto m = dist::dirichlet_moments(d);
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(sum[k] / n - m.mean[k]) < 4.0 * std::sqrt(m.variance[k] / n));
  }
}

TEST_CASE("tape Dirichlet routines agree with the scalar versions row by row") {
  SeededRng rng(7);
  const std::size_t N = 4, K = 3;
  ad::Tensor alpha({N, K});
  for (double& v : alpha.data()) v = std::exp(rng.uniform(-1.0, 3.0));
  const std::vector<int> labels{0, 2, 1, 2};
  const DirichletParams ref({1.5, 0.7, 3.0});
  ad::Tape tape;
  const auto a = tape.leaf(alpha);
  const auto kl = dist::tape::kl_to_reference(a, ref).value();
  const auto elp = dist::tape::expected_log_prob(a, labels).value();
  const auto mean = dist::tape::mean(a).value();
  const auto var = dist::tape::variance(a).value();
  for (std::size_t r = 0; r < N; ++r) {
    const auto row = alpha.row_view(r);
    const DirichletParams q(std::vector<double>(row.begin(), row.end()));
    CHECK(kl(r, 0) == doctest::Approx(dist::dirichlet_kl(q, ref)).epsilon(1e-12));
    CHECK(elp(r, 0) == doctest::Approx(dist::dirichlet_expected_log_prob(q, labels[r])).epsilon(1e-12));
    const auto m = dist::dirichlet_moments(q);
    for (std::size_t k = 0; k < K; ++k) {
      CHECK(mean(r, k) == doctest::Approx(m.mean[k]).epsilon(1e-12));
      CHECK(var(r, k) == doctest::Approx(m.variance[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("tape Dirichlet routines have correct gradients") {
  SeededRng rng(8);
  ad::Tensor alpha({3, 4});
  for (double& v : alpha.data()) v = std::exp(rng.uniform(-0.5, 2.0));
  const std::vector<int> labels{3, 0, 1};
  const DirichletParams ref({1.0, 2.0, 0.5, 1.0});
  const testing::ScalarNet net = [&](ad::Tape&, const std::vector<ad::Var>& in) {
    const auto a = in[0];
    return ad::sum(dist::tape::kl_to_reference(a, ref)) +
           ad::sum(dist::tape::expected_log_prob(a, labels)) +
           ad::sum(ad::mul(dist::tape::mean(a), dist::tape::variance(a)));
  };
  CHECK(testing::max_fd_relative_error(net, {alpha}) <= 1e-5);
}

TEST_CASE("diagonal Gaussian KL matches quadrature") {
  SeededRng rng(10);
  for (int i = 0; i < 10; ++i) {
    std::vector<double> mq(3), lq(3), mp(3), lp(3);
    double want = 0.0;
    for (int d = 0; d < 3; ++d) {
      mq[d] = rng.uniform(-2, 2);
      mp[d] = rng.uniform(-2, 2);
      lq[d] = rng.uniform(-3, 1);
      lp[d] = rng.uniform(-1, 1);
      want += gaussian_kl_quadrature(mq[d], std::exp(lq[d]), mp[d], std::exp(lp[d]));
    }
    const double got = dist::gaussian_kl_diag({mq, lq}, {mp, lp});
    CHECK(got == doctest::Approx(want).epsilon(1e-8));

    ad::Tape tape;
    const auto kl = dist::tape::kl_diag(tape.leaf(ad::Tensor({1, 3}, mq)),
                                        tape.leaf(ad::Tensor({1, 3}, lq)), 0.4, -0.7);
    CHECK(kl.value().item() ==
          doctest::Approx(dist::gaussian_kl_diag({mq, lq}, {std::vector<double>(3, 0.4),
                                                            std::vector<double>(3, -0.7)}))
              .epsilon(1e-12));
  }
}

TEST_CASE("Gaussian reparameterization has the target moments") {
  SeededRng rng(12);
  const dist::DiagGaussianParams g({1.5, -2.0}, {std::log(0.25), std::log(4.0)});
  double s0 = 0, s1 = 0, q1 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto x = dist::gaussian_reparam_sample(g, rng);
    s0 += x[0];
    s1 += x[1];
    q1 += (x[1] + 2.0) * (x[1] + 2.0);
  }
  CHECK(std::abs(s0 / n - 1.5) < 4 * 0.5 / std::sqrt(n));
  CHECK(std::abs(s1 / n + 2.0) < 4 * 2.0 / std::sqrt(n));
  CHECK(q1 / n == doctest::Approx(4.0).epsilon(0.02));

  ad::Tape tape;
  const ad::Tensor eps = ad::Tensor::matrix(1, 2, {0.5, -1.0});
  const auto z = dist::tape::reparam(tape.leaf(ad::Tensor::matrix(1, 2, {1.5, -2.0})),
                                     tape.leaf(ad::Tensor::matrix(1, 2, {std::log(0.25), std::log(4.0)})), eps);
  CHECK(z.value()[0] == doctest::Approx(1.75));
  CHECK(z.value()[1] == doctest::Approx(-4.0));
}

TEST_CASE("categorical NLL floors tiny probabilities and validates labels") {
  const std::vector<double> p{0.25, 0.75, 0.0};
  bool floored = true;
  CHECK(dist::categorical_nll(p, 1, &floored) == doctest::Approx(-std::log(0.75)));
  CHECK_FALSE(floored);
  CHECK(dist::categorical_nll(p, 2, &floored) == doctest::Approx(-std::log(dist::kProbabilityFloor)));
  CHECK(floored);
  CHECK_THROWS_AS(dist::categorical_nll(p, 3), std::out_of_range);
  CHECK_THROWS_AS(dist::categorical_nll(p, -1), std::out_of_range);
}

TEST_CASE("closed-form Dirichlet examples") {
  CHECK(dist::dirichlet_kl(DirichletParams({2.0, 1.0}), DirichletParams({1.0, 1.0})) ==
        doctest::Approx(std::log(2.0) - 0.5).epsilon(1e-14));
  const auto u = dist::dirichlet_moments(DirichletParams({1.0, 1.0}));
  CHECK(u.mean[0] == doctest::Approx(0.5));
  CHECK(u.variance[1] == doctest::Approx(1.0 / 12.0));
  const auto s = dist::dirichlet_moments(DirichletParams({10.0, 10.0, 10.0}));
  for (double m : s.mean) CHECK(m == doctest::Approx(1.0 / 3.0));
  const auto b = dist::dirichlet_moments(DirichletParams({2.0, 3.0}));
  CHECK(b.mean[0] == doctest::Approx(0.4));
  CHECK(b.mean[1] == doctest::Approx(0.6));
  CHECK(dist::dirichlet_expected_log_prob(DirichletParams({1.0, 1.0}), 0) == doctest::Approx(-1.0));
  const DirichletParams sym({2.7, 2.7, 2.7, 2.7});
  for (std::size_t k = 1; k < 4; ++k) {
    CHECK(dist::dirichlet_expected_log_prob(sym, k) == dist::dirichlet_expected_log_prob(sym, 0));
  }
}

TEST_CASE("Dirichlet examples checked by Monte Carlo") {
  const auto kl = testing::dirichlet_mc({2.0, 1.0}, {1.0, 1.0}, 1000000, 21);
  CHECK(kl.kl.within(std::log(2.0) - 0.5));
  const auto m = testing::dirichlet_mc({2.0, 3.0}, {1.0, 1.0}, 1000000, 22);
  CHECK(m.mean[0].within(0.4));
  const auto e = testing::dirichlet_mc({2.0, 3.0, 5.0}, {1.0, 1.0, 1.0}, 1000000, 23);
  CHECK(e.expected_log[1].within(dist::dirichlet_expected_log_prob(DirichletParams({2.0, 3.0, 5.0}), 1)));
}

TEST_CASE("library sampler examples") {
  SeededRng rng(31);
  double a = 0.0, b = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    a += dist::dirichlet_sample(DirichletParams({1.0, 1.0}), rng)[0];
    b += dist::dirichlet_sample(DirichletParams({5.0, 1.0}), rng)[0];
  }
  CHECK(std::abs(a / n - 0.5) <= 0.01);
  CHECK(std::abs(b / n - 5.0 / 6.0) <= 0.01);
}

TEST_CASE("Gaussian examples") {
  SeededRng rng(32);
  const dist::DiagGaussianParams sharp({2.0, -3.0}, {-60.0, -60.0});
  const auto x = dist::gaussian_reparam_sample(sharp, rng);
  CHECK(x[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(x[1] == doctest::Approx(-3.0).epsilon(1e-10));

  const dist::DiagGaussianParams g({0.0}, {std::log(3.0)});
  double s = 0, ss = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = dist::gaussian_reparam_sample(g, rng)[0];
    s += v;
    ss += v * v;
  }
  const double var = ss / n - (s / n) * (s / n);
  CHECK(std::abs(var - 3.0) <= 0.05 * 3.0);

  ad::Tape tape;
  const auto mean = tape.leaf(ad::Tensor::matrix(1, 3, {0.1, 0.2, 0.3}));
  const auto lv = tape.leaf(ad::Tensor::matrix(1, 3, {-1.0, 0.0, 1.0}));
  const auto z = dist::tape::reparam(mean, lv, ad::Tensor::matrix(1, 3, {0.3, -2.0, 1.1}));
  CHECK(tape.backward(ad::sum(z))[mean] == ad::Tensor({1, 3}, 1.0));

  const dist::DiagGaussianParams q({0.4, -1.0}, {0.3, -0.2});
  CHECK(dist::gaussian_kl_diag(q, q) == 0.0);
  const double e = std::exp(1.0);
  CHECK(dist::gaussian_kl_diag({{0.0}, {0.0}}, {{0.0}, {1.0}}) == doctest::Approx(1.0 / (2.0 * e)));
  CHECK(gaussian_kl_quadrature(0.0, 1.0, 0.0, e) == doctest::Approx(1.0 / (2.0 * e)).epsilon(1e-9));
  CHECK(dist::gaussian_kl_diag({{1.0}, {0.0}}, {{0.0}, {0.0}}) == doctest::Approx(0.5));
  CHECK(gaussian_kl_quadrature(1.0, 1.0, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("categorical NLL examples") {
  CHECK(dist::categorical_nll(std::vector<double>{0.0, 1.0}, 1) == 0.0);
  CHECK(dist::categorical_nll(std::vector<double>{0.5, 0.5}, 0) == doctest::Approx(std::log(2.0)));
  CHECK(dist::categorical_nll(std::vector<double>{0.7, 0.3}, 1) == doctest::Approx(1.20397).epsilon(1e-5));
}
