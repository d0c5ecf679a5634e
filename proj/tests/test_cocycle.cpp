#include "doctest.h"

#include <random>

#include "cmvspec/cocycle.hpp"
#include "cmvspec/errors.hpp"
#include "oracles.hpp"

using namespace cmvspec;

namespace {

const std::vector<double> kW2{std::sqrt(2.0) - 1.0, std::sqrt(3.0) - 1.0};
const std::vector<double> kW1{(std::sqrt(5.0) - 1.0) / 2.0};

}  // namespace

TEST_CASE("spectral point keeps theta in [0, 2 pi) and a consistent root") {
  SpectralPoint z(-0.5);
  CHECK(z.theta() == doctest::Approx(2 * oracle::kPi - 0.5));
  CHECK(std::abs(z.sqrt_z() * z.sqrt_z() - z.z()) < 1e-15);
  SpectralPoint w = SpectralPoint::from_z(std::polar(1.0, 2.0));
  CHECK(w.theta() == doctest::Approx(2.0));
}

TEST_CASE("cocycle step matches the oracle and has determinant one") {
  std::mt19937_64 g(21);
  std::uniform_real_distribution<double> u;
  for (int t = 0; t < 30; ++t) {
    cplx a = oracle::random_disk(g, 0.95);
    SpectralPoint z(2 * oracle::kPi * u(g));
    auto m = cocycle_matrix(a, std::conj(a), z);
    CHECK((m - oracle::szego(a, z.sqrt_z())).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(m.determinant() - 1.0) < 1e-13);
  }
}

TEST_CASE("transfer product equals the ordered product of steps") {
  SamplingFunction f = SamplingFunction::strong_coupling(0.9);
  SpectralPoint z(0.7);
  std::vector<double> x0{0.13, 0.58};
  const long n = 60;
  Eigen::Matrix2cd ref = Eigen::Matrix2cd::Identity();
  for (long j = 0; j < n; ++j) {
    std::vector<double> xj{x0[0] + j * kW2[0], x0[1] + j * kW2[1]};
    ref = oracle::szego(f.alpha(xj), z.sqrt_z()) * ref;
  }
  CocycleProduct p = transfer_product(f, kW2, z, Phase(x0), n);
  Eigen::Matrix2cd full = p.full();
  CHECK((full - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(p.log_op_norm() == doctest::Approx(std::log(oracle::svd_norm(ref))).epsilon(1e-10));
  CHECK(p.matrix.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("renormalised products survive lengths whose norms overflow") {
  auto f = SamplingFunction::constant(1, {0.9, 0.0});
  CocycleProduct p = transfer_product(f, kW1, SpectralPoint(0.0), Phase({0.0}), 5000);
  CHECK(std::isfinite(p.log_op_norm()));
  CHECK(p.log_op_norm() / 5000 == doctest::Approx(oracle::floquet_lyapunov(0.9, 1.0)).epsilon(1e-3));
  // the determinant cancels to rounding only on short products
  CocycleProduct q = transfer_product(f, kW1, SpectralPoint(0.0), Phase({0.0}), 5);
  CHECK(std::abs(q.log_abs_det()) < 1e-8);
}

TEST_CASE("then() composes later * earlier") {
  SamplingFunction f = SamplingFunction::strong_coupling(0.9);
  SpectralPoint z(1.1);
  Phase x({0.4, 0.9});
  CocycleProduct a = transfer_product(f, kW2, z, x, 17);
  CocycleProduct b = transfer_product(f, kW2, z, shifted_phase(x.x, kW2, 17), 23);
  CocycleProduct ab = transfer_product(f, kW2, z, x, 40);
  CHECK((a.then(b).full() - ab.full()).cwiseAbs().maxCoeff() / ab.full().cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("free case has zero Lyapunov exponent") {
  auto f = SamplingFunction::zero(1);
  for (double th : {0.0, 1.0, 3.0}) {
    auto e = lyapunov_finite(f, kW1, SpectralPoint(th), 100, 8, 1);
    CHECK(std::abs(e.L_n) < 1e-14);
  }
}

TEST_CASE("constant coefficients: L_n matches the Floquet exponent") {
  for (double a : {0.3, 0.5, 0.8})
    for (double th : {0.0, 0.4, 2.0, 3.1}) {
      auto f = SamplingFunction::constant(1, {a, 0.0});
      auto e = lyapunov_finite(f, kW1, SpectralPoint(th), 400, 4, 1);
      const double L = oracle::floquet_lyapunov(a, std::polar(1.0, th));
      // inside a band L = 0 and the finite-n value decays like 1/n
      CHECK(std::abs(e.L_n - L) < 0.02);
    }
  auto f = SamplingFunction::constant(1, {0.5, 0.0});
  auto e = lyapunov_finite(f, kW1, SpectralPoint(0.0), 100, 16, 1);
  CHECK(std::abs(e.L_n - std::log(std::sqrt(3.0))) < 1e-3);
}

TEST_CASE("estimates are reproducible and independent of the worker count") {
  SamplingFunction f = SamplingFunction::strong_coupling(0.9);
  auto a = lyapunov_finite(f, kW2, SpectralPoint(0.5), 80, 33, 9, 1);
  auto b = lyapunov_finite(f, kW2, SpectralPoint(0.5), 80, 33, 9, 4);
  CHECK(a.L_n == b.L_n);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("sample statistics") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  auto s = sample_stats(v);
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
}

TEST_CASE("avalanche principle: commuting hyperbolic matrices give zero") {
  std::vector<Mat2> a;
  for (double mu : {50.0, 80.0, 120.0, 60.0, 200.0}) a.push_back(oracle::hyperbolic(mu, 0.3, -0.3));
  CHECK(std::abs(avalanche_expression(a)) <= 1e-12);
}

TEST_CASE("avalanche principle: bound holds on random hyperbolic-dominated sequences") {
  std::mt19937_64 g(31);
  std::uniform_real_distribution<double> u;
  int used = 0;
  while (used < 50) {
    const int m = 2 + static_cast<int>(u(g) * 10);
    std::vector<Mat2> a;
    std::vector<Eigen::Matrix2cd> ref;
    for (int j = 0; j < m; ++j) {
      double mu = m * (20.0 + 200.0 * u(g));
      a.push_back(oracle::hyperbolic(mu, 2 * oracle::kPi * u(g), 2 * oracle::kPi * u(g)));
      ref.push_back(a.back());
    }
    auto h = avalanche_hypotheses(a);
    if (!(h.norm_floor_ok && h.pair_defect_ok)) continue;
    ++used;
    const double e = avalanche_expression(a);
    CHECK(e == doctest::Approx(oracle::ap_expression(ref)).epsilon(1e-6).scale(1e-9));
    CHECK(e < 10.0 * m / h.mu);
  }
}

TEST_CASE("avalanche hypotheses detect a weak link") {
  std::vector<Mat2> a{oracle::hyperbolic(100, 0.0, 0.0), oracle::hyperbolic(1.5, 0.0, 0.0), oracle::hyperbolic(100, 0.0, 0.0)};
  auto h = avalanche_hypotheses(a);
  CHECK_FALSE(h.norm_floor_ok);
  std::vector<Mat2> b{oracle::hyperbolic(100, 0.0, 0.0), oracle::hyperbolic(100, oracle::kPi / 2, 0.0)};
  auto hb = avalanche_hypotheses(b);
  CHECK_FALSE(hb.pair_defect_ok);
}

TEST_CASE("avalanche Lyapunov estimate agrees with the direct one in a gap") {
  auto f = SamplingFunction::constant(1, {0.5, 0.0});
  auto av = lyapunov_avalanche(f, kW1, SpectralPoint(0.0), 50, 3, 8, 1);
  CHECK(av.n == 400);
  CHECK(av.method == LyapunovMethod::avalanche);
  CHECK(std::abs(av.L_n - std::log(std::sqrt(3.0))) < 1e-3);
}

TEST_CASE("avalanche estimate refuses when hypotheses fail") {
  auto f = SamplingFunction::zero(1);
  CHECK_THROWS_AS(lyapunov_avalanche(f, kW1, SpectralPoint(0.0), 10, 2, 4, 1), HypothesisError);
}

TEST_CASE("L_n is approximately nonincreasing in n") {
  SamplingFunction f = SamplingFunction::strong_coupling(0.9);
  std::vector<long> scales{25, 50, 100, 200};
  auto r = check_ln_monotonicity(f, kW2, SpectralPoint(0.5), scales, 64, 3);
  CHECK(r.estimates.size() == 4);
  CHECK(r.pairs.size() == 6);  // every pair (m, n) with m | n
  CHECK(r.ok);
  CHECK(std::isfinite(r.fitted_C));
}

TEST_CASE("strip continuity and uniform upper bound") {
  SamplingFunction f = SamplingFunction::strong_coupling(0.9);
  const double h = f.strip_width();
  std::vector<RealVec> ys{{h / 8, 0.0}, {0.0, -h / 8}};
  double ratio = strip_continuity_check(f, kW2, SpectralPoint(0.5), 50, ys, 16, 1);
  CHECK(std::isfinite(ratio));
  CHECK(ratio >= 0.0);
  std::vector<RealVec> bad{{h, 0.0}};
  CHECK_THROWS_AS(strip_continuity_check(f, kW2, SpectralPoint(0.5), 50, bad, 4, 1), ConfigError);

  auto up = uniform_upper_check(f, kW2, SpectralPoint(0.5), 40, 32);
  CHECK(up.sup_log_norm >= 40 * up.L_n);
  CHECK(up.excess == doctest::Approx(up.sup_log_norm - 40 * up.L_n));
}
