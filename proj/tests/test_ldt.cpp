#include "doctest.h"

#include <random>

#include "cmvspec/cmv.hpp"
#include "cmvspec/cocycle.hpp"
#include "cmvspec/errors.hpp"
#include "cmvspec/ldt.hpp"
#include "cmvspec/spectral.hpp"
#include "oracles.hpp"

using namespace cmvspec;

namespace {

const std::vector<double> kW{std::sqrt(2.0) - 1.0, std::sqrt(3.0) - 1.0};

oracle::cplx dense_logdet(const oracle::Mat& a) {
  Eigen::PartialPivLU<oracle::Mat> lu(a);
  oracle::cplx s = 0.0;
  for (int i = 0; i < a.rows(); ++i) s += std::log(lu.matrixLU()(i, i));
  return s;
}

}  // namespace

TEST_CASE("Wilson interval matches the closed form") {
  for (auto [h, n] : std::vector<std::pair<long, long>>{{0, 10}, {3, 10}, {10, 10}, {17, 2000}, {1000, 2000}}) {
    auto e = make_estimate("x", h, n);
    CHECK(e.estimate == doctest::Approx(double(h) / n));
    CHECK(e.upper == doctest::Approx(std::min(1.0, oracle::wilson_upper(h, n))));
    CHECK(e.lower == doctest::Approx(oracle::wilson_lower(h, n)).epsilon(1e-9));
    CHECK(e.lower <= e.estimate);
    CHECK(e.estimate <= e.upper);
  }
  CHECK(make_estimate("x", 0, 0).upper == 0.0);
}

TEST_CASE("zero coefficients give no deviations and zero L_n") {
  SamplingFunction f = SamplingFunction::zero(2);
  std::vector<long> ns{10, 20, 40};
  auto s = ldt_measure_scan(f, kW, SpectralPoint(0.4), ns, 0.3, 50, 1);
  REQUIRE(s.rows.size() == 3);
  for (const auto& r : s.rows) {
    CHECK(r.L_n == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.vacuous);
    CHECK(r.set.hits == 0);
  }
  CHECK(s.nonincreasing);
}

TEST_CASE("scan inputs are validated") {
  SamplingFunction f = SamplingFunction::zero(2);
  std::vector<long> ns{10};
  CHECK_THROWS_AS(ldt_measure_scan(f, kW, SpectralPoint(0.4), ns, 1.2, 50, 1), ConfigError);
  CHECK_THROWS_AS(ldt_measure_scan(f, kW, SpectralPoint(0.4), ns, 0.3, 0, 1), ConfigError);
}

TEST_CASE("scan results do not depend on the worker count") {
  SamplingFunction f = SamplingFunction::strong_coupling(0.9);
  std::vector<long> ns{20, 40};
  auto a = ldt_determinant_scan(f, kW, SpectralPoint(0.5), ns, 0.3, 64, 7, 1.0, 1.0, 1);
  auto b = ldt_determinant_scan(f, kW, SpectralPoint(0.5), ns, 0.3, 64, 7, 1.0, 1.0, 3);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    CHECK(a.rows[i].L_n == b.rows[i].L_n);
    CHECK(a.rows[i].set.hits == b.rows[i].set.hits);
  }
}

TEST_CASE("spectral form predicate agrees with dense linear algebra") {
  SamplingFunction f = SamplingFunction::strong_coupling(0.9);
  std::mt19937_64 g(61);
  std::uniform_real_distribution<double> u;
  for (int t = 0; t < 30; ++t) {
    const long n = 10 + static_cast<long>(u(g) * 40);
    std::vector<double> x{u(g), u(g)};
    auto seq = VerblunskySequence::sample(f, kW, x, -1, n);
    oracle::Coeffs c{-1, {}};
    for (long s = -1; s <= n; ++s) c.v.push_back(seq.alpha(s));
    const oracle::cplx z = std::polar(1.0, 2 * oracle::kPi * u(g));
    oracle::Mat E = oracle::truncated_cmv(c, 0, n - 1, 1.0, 1.0);
    Eigen::ComplexEigenSolver<oracle::Mat> es(E);
    double dist = 1e300;
    for (int i = 0; i < n; ++i) dist = std::min(dist, std::abs(es.eigenvalues()(i) - z));
    double lr = 0.0;
    for (long k = 0; k < n; ++k) lr += std::log(oracle::rho(c.at(k)));
    const double logphi = dense_logdet(z * oracle::Mat::Identity(n, n) - E).real() - lr;

    auto r = spectral_form_predicate(seq, n, 1.0, 1.0, z, 0.5, 0.3, 0.3);
    CHECK(r.dist == doctest::Approx(dist).epsilon(1e-8));
    CHECK(r.log_phi == doctest::Approx(logphi).epsilon(1e-8));
    // the resolvent of a normal matrix has norm 1/dist
    CHECK(r.resolvent_norm == doctest::Approx((z * oracle::Mat::Identity(n, n) - E).inverse().operatorNorm()).epsilon(1e-6));
  }
}

TEST_CASE("spectral form implication on a strong-coupling corpus") {
  SamplingFunction f = SamplingFunction::strong_coupling(0.9);
  std::mt19937_64 g(62);
  std::uniform_real_distribution<double> u;
  int held = 0, antecedent = 0;
  const int cases = 60;
  for (int t = 0; t < cases; ++t) {
    const long n = 20 + 10 * static_cast<long>(u(g) * 5);
    const SpectralPoint z(2 * oracle::kPi * u(g));
    const double Ln = lyapunov_finite(f, kW, z, n, 200, 1000 + t).L_n;
    std::vector<double> x{u(g), u(g)};
    auto seq = VerblunskySequence::sample(f, kW, x, -1, n);
    auto r = spectral_form_predicate(seq, n, 1.0, 1.0, z.z(), 0.5, 0.3, Ln);
    antecedent += r.resolvent_ok;
    held += r.implication_holds();
  }
  CHECK(antecedent > 0);
  CHECK(held == cases);
}

TEST_CASE("covering form check on a free window") {
  // alpha = 0 gives E with a closed-form spectrum and phi = det(z - E)
  auto seq = VerblunskySequence::from_values(-1, std::vector<cplx>(40, cplx(0.0)));
  const long n = 30;
  std::vector<Subwindow> ws;
  for (long m = 0; m < n; ++m) {
    const long a = std::max(0L, m - 10), b = std::min(n - 1, m + 10);
    ws.push_back({m, a, b});
  }
  auto rep = covering_form_check(seq, std::polar(1.0, 0.3), n, ws, 0.3, 5, [](long) { return 0.0; });
  CHECK(rep.dist > 0.0);
  CHECK(rep.bound == doctest::Approx(std::exp(-2.0 * std::pow(21.0, 1.0 - 0.3 / 4.0))));
  CHECK(rep.margin == doctest::Approx(std::log(rep.dist) - std::log(rep.bound)));
  CHECK(rep.fail_length.empty());
  std::vector<Subwindow> missing(ws.begin(), ws.end() - 1);
  CHECK_THROWS_AS(covering_form_check(seq, 1.0, n, missing, 0.3, 5, [](long) { return 0.0; }), ConfigError);
  auto strict = covering_form_check(seq, std::polar(1.0, 0.3), n, ws, 0.3, 50, [](long) { return 0.0; });
  CHECK(strict.fail_length.size() == static_cast<std::size_t>(n));
  CHECK_FALSE(strict.preconditions_ok);
}

TEST_CASE("covering form conclusion whenever its hypotheses hold") {
  SamplingFunction f = SamplingFunction::strong_coupling(0.9);
  std::mt19937_64 g(63);
  std::uniform_real_distribution<double> u;
  int with_hyp = 0;
  for (int t = 0; t < 20; ++t) {
    const long n = 60;
    std::vector<double> x{u(g), u(g)};
    auto seq = VerblunskySequence::sample(f, kW, x, -1, n);
    const SpectralPoint z(2 * oracle::kPi * u(g));
    std::vector<Subwindow> ws;
    for (long m = 0; m < n; ++m) ws.push_back({m, std::max(0L, m - 20), std::min(n - 1, m + 20)});
    auto rep = covering_form_check(seq, z.z(), n, ws, 0.3, 10, [](long) { return 0.0; });
    if (rep.preconditions_ok) {
      ++with_hyp;
      CHECK(rep.conclusion_ok);
    }
  }
  CHECK(with_hyp > 0);
}

TEST_CASE("union covering check keeps nearby spectra away from a far target") {
  SamplingFunction f = SamplingFunction::strong_coupling(0.9);
  std::vector<double> x0{0.2, 0.7};
  std::vector<Subwindow> ws{{5, 0, 20}, {15, 10, 30}, {25, 20, 40}};
  auto seq = VerblunskySequence::sample(f, kW, x0, -1, 41);
  auto spec = eigenvalues(build_finite_cmv(seq, 0, 40, 1.0, 1.0));
  // a target point in the middle of the widest spectral gap
  std::vector<double> th;
  for (cplx z : spec) th.push_back(std::arg(z) < 0 ? std::arg(z) + 2 * oracle::kPi : std::arg(z));
  std::sort(th.begin(), th.end());
  double best = 2 * oracle::kPi + th.front() - th.back(), mid = th.back() + best / 2;
  for (std::size_t i = 1; i < th.size(); ++i)
    if (th[i] - th[i - 1] > best) best = th[i] - th[i - 1], mid = (th[i] + th[i - 1]) / 2;
  std::vector<cplx> Z{std::polar(1.0, mid)};
  auto r = union_covering_check(f, kW, x0, Z, ws, 2.0, 1.8, 8, 3);
  CHECK(r.bound == doctest::Approx(0.5 * std::exp(-2.0)));
  CHECK(r.samples == 8);
  if (r.preconditions_ok) CHECK(r.conclusion_ok);
  std::vector<Subwindow> holey{{5, 0, 10}, {25, 20, 40}};
  CHECK_THROWS_AS(union_covering_check(f, kW, x0, Z, holey, 2.0, 1.8, 8, 3), ConfigError);
}
