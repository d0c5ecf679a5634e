#include "doctest.h"

#include <cmath>
#include <random>

#include "cmvspec/errors.hpp"
#include "cmvspec/torus.hpp"
#include "oracles.hpp"

using namespace cmvspec;

TEST_CASE("reduce_phase maps into [0, 1)") {
  Phase p = reduce_phase(std::vector<double>{-0.25, 3.5, 1.0});
  CHECK(p.x[0] == doctest::Approx(0.75));
  CHECK(p.x[1] == doctest::Approx(0.5));
  CHECK(p.x[2] == 0.0);
}

TEST_CASE("torus distance is the sup norm with wrap-around") {
  std::vector<double> a{0.95, 0.1}, b{0.05, 0.3};
  CHECK(torus_distance(a, b) == doctest::Approx(0.2));
  std::vector<double> c{0.5, 0.5};
  CHECK(torus_distance(c, c) == 0.0);
}

TEST_CASE("Diophantine certificate matches a brute-force scan") {
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  for (auto w : {std::vector<double>{golden}, std::vector<double>{std::sqrt(2.0) - 1.0, std::sqrt(3.0) - 1.0}}) {
    const double q = w.size() + 1.0;
    auto cert = check_diophantine(w, 0.01, q, 20);
    CHECK(cert.worst_ratio == doctest::Approx(oracle::diophantine_ratio(w, q, 20)).epsilon(1e-9));
    CHECK(cert.ok == (cert.worst_ratio >= 0.01));
  }
}

TEST_CASE("rational frequency fails the certificate at the first resonance") {
  std::vector<double> w{0.5, 1.0 / 3.0};
  auto cert = check_diophantine(w, 0.01, 3.0, 10);
  CHECK_FALSE(cert.ok);
  REQUIRE(cert.worst_k.size() == 2);
  CHECK(cert.worst_k[0] == 2);
  CHECK(cert.worst_k[1] == 0);
  CHECK(cert.worst_ratio < 1e-12);
}

TEST_CASE("dist_to_integer") {
  std::vector<int> k{3, -2};
  std::vector<double> w{0.1, 0.4};
  CHECK(dist_to_integer(k, w) == doctest::Approx(0.5));
}

TEST_CASE("sampling function evaluation against a direct Fourier sum") {
  std::vector<FourierTerm> terms{{{1, 0}, {0.2, 0.1}}, {{0, -2}, {0.0, -0.15}}, {{1, 1}, {0.05, 0.0}}};
  SamplingFunction f(2, terms);
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x{u(g), u(g)};
    oracle::cplx ref = 0.0;
    for (const auto& term : terms) ref += term.c * std::polar(1.0, 2 * oracle::kPi * (term.k[0] * x[0] + term.k[1] * x[1]));
    CHECK(std::abs(f.alpha(x) - ref) < 1e-14);
    CHECK(f.rho(x) == doctest::Approx(std::sqrt(1.0 - std::norm(ref))));
  }
  CHECK(f.degree() == 2);
  CHECK(f.sup_bound() < 1.0);
  CHECK(f.strip_width() > 0.0);
}

TEST_CASE("strip certificate dominates sampled values in the strip") {
  SamplingFunction f = SamplingFunction::strong_coupling(0.9);
  const double h = f.strip_width();
  CHECK(f.sup_bound() < 1.0);
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u;
  for (int t = 0; t < 200; ++t) {
    Phase p({u(g), u(g)}, {h / 2 * (2 * u(g) - 1), h / 2 * (2 * u(g) - 1)});
    CHECK(std::abs(f.alpha(p)) <= f.sup_bound());
  }
}

TEST_CASE("strong-coupling example is within its Bessel tail of the closed form") {
  const double lam = 0.95;
  SamplingFunction f = SamplingFunction::strong_coupling(lam);
  double tail = 0.0;  // dropped Bessel modes |k| >= 5
  for (int k = 5; k < 30; ++k) tail += 2 * lam * std::cyl_bessel_j(double(k), 1.0);
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> u;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x{u(g), u(g)};
    oracle::cplx exact = lam * std::polar(1.0, 2 * oracle::kPi * x[0]) *
                         std::exp(oracle::cplx(0.0, std::cos(2 * oracle::kPi * x[1])));
    CHECK(std::abs(f.alpha(x) - exact) <= tail * (1 + 1e-9));
  }
}

TEST_CASE("zero and constant presets") {
  auto z = SamplingFunction::zero(2);
  std::vector<double> x{0.3, 0.7};
  CHECK(z.alpha(x) == oracle::cplx(0.0));
  CHECK(z.rho(x) == 1.0);
  auto c = SamplingFunction::constant(1, {0.5, 0.0});
  CHECK(c.alpha(std::vector<double>{0.123}) == oracle::cplx(0.5));
}

TEST_CASE("sampling function with sup >= 1 is rejected") {
  std::vector<FourierTerm> terms{{{1}, {1.2, 0.0}}};
  CHECK_THROWS_AS(SamplingFunction(1, terms), ConfigError);
}

TEST_CASE("orbit sampler agrees with direct evaluation") {
  SamplingFunction f = SamplingFunction::strong_coupling(0.9);
  std::vector<double> w{std::sqrt(2.0) - 1.0, std::sqrt(3.0) - 1.0}, x0{0.31, 0.77};
  OrbitSampler s(f, w, x0);
  double worst = 0.0;
  for (long n = 0; n < 500; ++n) {
    oracle::cplx v = s.next();
    std::vector<double> xn{x0[0] + n * w[0], x0[1] + n * w[1]};
    worst = std::max(worst, std::abs(v - f.alpha(xn)));
  }
  CHECK(worst < 1e-11);
}

TEST_CASE("shifted_phase equals the reduced naive shift") {
  std::vector<double> w{0.1234, 0.5678}, x0{0.9, 0.2};
  for (long n : {-7L, 0L, 1L, 1000L}) {
    Phase p = shifted_phase(x0, w, n);
    for (int i = 0; i < 2; ++i) {
      double ref = x0[i] + n * w[i];
      ref -= std::floor(ref);
      CHECK(oracle::frac_dist(p.x[i] - ref) < 1e-12);
    }
  }
}

TEST_CASE("Fourier truncation keeps modes with |k|_1 < n^4") {
  std::vector<FourierTerm> terms{{{1, 0}, {0.3, 0.0}}, {{20, 0}, {0.01, 0.0}}};
  SamplingFunction f(2, terms);
  auto tr = truncate_fourier(f, 2);  // keeps |k|_1 < 16
  CHECK(tr.g.terms().size() == 1);
  CHECK(tr.error_bound == doctest::Approx(0.01));
  CHECK(tr.target == doctest::Approx(std::exp(-4.0)));
  CHECK(tr.target_met == (tr.error_bound <= tr.target));
  auto tr3 = truncate_fourier(f, 3);
  CHECK(tr3.g.terms().size() == 2);
  CHECK(tr3.error_bound == 0.0);
}

TEST_CASE("frequency validation") {
  CHECK_THROWS_AS(Frequency::make({}, 0.01, 2.0, 10), ConfigError);
  auto fr = Frequency::make({(std::sqrt(5.0) - 1.0) / 2.0}, 0.01, 2.0, 30);
  CHECK(fr.certificate.ok);
}
