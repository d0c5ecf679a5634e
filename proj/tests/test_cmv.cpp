#include "doctest.h"

#include <random>

#include "cmvspec/cmv.hpp"
#include "cmvspec/errors.hpp"
#include "oracles.hpp"

using namespace cmvspec;

namespace {

struct Instance {
  oracle::Coeffs c;
  VerblunskySequence seq;
  long a, b;
  cplx beta, eta;
};

Instance random_instance(std::mt19937_64& g, long max_n) {
  std::uniform_int_distribution<long> len(1, max_n), start(-6, 6);
  std::uniform_real_distribution<double> u;
  Instance in;
  in.a = start(g);
  in.b = in.a + len(g) - 1;
  in.c.first = in.a - 1;
  for (long s = in.a - 1; s <= in.b; ++s) in.c.v.push_back(oracle::random_disk(g, 0.95));
  in.seq = VerblunskySequence::from_values(in.c.first, in.c.v);
  in.beta = std::polar(1.0, 2 * oracle::kPi * u(g));
  in.eta = std::polar(1.0, 2 * oracle::kPi * u(g));
  return in;
}

}  // namespace

TEST_CASE("Theta block is unitary") {
  std::mt19937_64 g(1);
  for (int t = 0; t < 20; ++t) {
    auto th = theta_block(oracle::random_disk(g, 0.99));
    CHECK((th.adjoint() * th - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() < 1e-15);
  }
  CHECK_THROWS_AS(theta_block({1.5, 0.0}), ConfigError);
}

TEST_CASE("unitary truncation matches the dense oracle built from Theta blocks") {
  std::mt19937_64 g(11);
  for (int t = 0; t < 60; ++t) {
    Instance in = random_instance(g, 40);
    FiniteCMV m = build_finite_cmv(in.seq, in.a, in.b, in.beta, in.eta);
    oracle::Factors f = oracle::truncated_factors(in.c, in.a, in.b, in.beta, in.eta);
    CHECK(m.unitary);
    CHECK((m.dense() - f.L * f.M).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((m.dense_L() - f.L).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((m.dense_M() - f.M).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("plain truncation matches the cropped oracle and is not unitary") {
  std::mt19937_64 g(12);
  Instance in = random_instance(g, 30);
  FiniteCMV m = build_truncation(in.seq, in.a, in.b);
  auto ref = oracle::truncated_cmv(in.c, in.a, in.b, in.c.at(in.a - 1), in.c.at(in.b));
  CHECK((m.dense() - ref).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_FALSE(m.unitary);
}

TEST_CASE("unitarity and factorisation on random truncations") {
  std::mt19937_64 g(13);
  for (int t = 0; t < 50; ++t) {
    Instance in = random_instance(g, 120);
    FiniteCMV m = build_finite_cmv(in.seq, in.a, in.b, in.beta, in.eta);
    auto e = m.dense();
    const long n = m.size();
    CHECK((e.adjoint() * e - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((e - m.dense_L() * m.dense_M()).cwiseAbs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("CMV matrix is pentadiagonal and entry() agrees with dense()") {
  std::mt19937_64 g(14);
  Instance in = random_instance(g, 25);
  FiniteCMV m = build_finite_cmv(in.seq, in.a, in.b, in.beta, in.eta);
  auto e = m.dense();
  for (long i = in.a; i <= in.b; ++i)
    for (long j = in.a; j <= in.b; ++j) {
      CHECK(m.entry(i, j) == e(i - in.a, j - in.a));
      if (std::labs(i - j) > 2) CHECK(m.entry(i, j) == cplx(0.0));
    }
  CHECK_THROWS_AS(m.entry(in.b + 1, in.b), ConfigError);
}

TEST_CASE("apply_cmv equals a dense product") {
  std::mt19937_64 g(15);
  Instance in = random_instance(g, 60);
  FiniteCMV m = build_finite_cmv(in.seq, in.a, in.b, in.beta, in.eta);
  Eigen::VectorXcd v(m.size());
  for (int i = 0; i < v.size(); ++i) v(i) = oracle::random_disk(g, 1.0);
  CHECK((apply_cmv(m, v) - m.dense() * v).norm() < 1e-13);
}

TEST_CASE("free case: alpha = 0 gives a permutation-like unitary with |entries| in {0, 1}") {
  auto seq = VerblunskySequence::from_values(-1, std::vector<cplx>(12, 0.0));
  FiniteCMV m = build_finite_cmv(seq, 0, 10);
  auto e = m.dense();
  for (int i = 0; i < e.rows(); ++i) {
    int ones = 0;
    for (int j = 0; j < e.cols(); ++j) {
      double a = std::abs(e(i, j));
      CHECK((a < 1e-15 || std::abs(a - 1.0) < 1e-15));
      ones += a > 0.5;
    }
    CHECK(ones == 1);
  }
}

TEST_CASE("sequence overrides and sampling") {
  auto seq = VerblunskySequence::from_values(2, {0.1, 0.2, 0.3});
  CHECK(seq.first() == 2);
  CHECK(seq.last() == 4);
  CHECK(seq.alpha(3) == cplx(0.2));
  seq.set_override(3, {0.0, 1.0});
  CHECK(seq.value(3) == cplx(0.0, 1.0));
  CHECK(seq.alpha(3) == cplx(0.2));
  CHECK(seq.rho(3) == doctest::Approx(std::sqrt(1 - 0.04)));
  CHECK_THROWS_AS(seq.alpha(7), ConfigError);

  SamplingFunction f = SamplingFunction::strong_coupling(0.9);
  std::vector<double> w{std::sqrt(2.0) - 1, std::sqrt(3.0) - 1}, x{0.2, 0.4};
  auto s = VerblunskySequence::sample(f, w, x, -3, 5);
  for (long n = -3; n <= 5; ++n) {
    std::vector<double> xn{x[0] + n * w[0], x[1] + n * w[1]};
    CHECK(std::abs(s.alpha(n) - f.alpha(xn)) < 1e-12);
  }
}

TEST_CASE("row window of the extended matrix agrees with a large truncation") {
  std::mt19937_64 g(16);
  oracle::Coeffs c;
  c.first = -20;
  for (int i = 0; i < 41; ++i) c.v.push_back(oracle::random_disk(g, 0.9));
  auto seq = VerblunskySequence::from_values(c.first, c.v);
  RowWindow rw = cmv_row_window(seq, 0, 3);
  auto big = oracle::truncated_cmv(c, -15, 15, c.at(-16), c.at(15));
  for (int r = 0; r < rw.rows.rows(); ++r)
    for (int k = 0; k < rw.rows.cols(); ++k)
      CHECK(std::abs(rw.rows(r, k) - big(rw.row0 + r + 15, rw.col0 + k + 15)) < 1e-14);
}
