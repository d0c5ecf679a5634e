#include "doctest.h"

#include <algorithm>
#include <random>

#include "cmvspec/cocycle.hpp"
#include "cmvspec/errors.hpp"
#include "cmvspec/multiscale.hpp"
#include "cmvspec/spectral.hpp"
#include "oracles.hpp"

using namespace cmvspec;

namespace {

MultiscaleProblem desk_problem() {
  MultiscaleProblem P{SamplingFunction::strong_coupling(0.95), {std::sqrt(2.0) - 1.0, std::sqrt(3.0) - 1.0}, 1.0, 1.0,
                      0.0};
  auto L = lyapunov_finite(P.f, P.w, SpectralPoint(0.8), 200, 64, 1);
  P.gamma = L.L_n - 3 * L.std_error;
  return P;
}

bool has_failure(const std::vector<Check>& fs, const std::string& id) {
  return std::any_of(fs.begin(), fs.end(), [&](const Check& c) { return c.id == id; });
}

}  // namespace

TEST_CASE("desk schedule exponents and first scale") {
  ScaleSchedule S = ScaleSchedule::desk();
  CHECK(S.delta_hat() == doctest::Approx(std::pow(0.8, 3.5)));
  CHECK(S.beta_hat() == doctest::Approx(0.64));
  CHECK(S.mu_hat() == doctest::Approx(std::pow(0.8, 3.2)));
  CHECK(S.A_hat() == doctest::Approx(1.0 / 0.64));
  CHECK(S.scale(0) == 16);
  CHECK(S.scale(1) == static_cast<long>(std::floor(std::pow(16.0, 1.0 / 0.64))));
  CHECK(S.scale(1) == 76);
  CHECK(S.radius(1) == doctest::Approx(std::exp(-std::pow(76.0, S.delta_hat()))));
  CHECK_NOTHROW(S.validate());
  for (const auto& l : S.ordering_chain()) CHECK(l.ok);
}

TEST_CASE("schedule validation rejects bad constants") {
  auto bad = [](auto mutate) {
    ScaleSchedule S = ScaleSchedule::desk();
    mutate(S);
    CHECK_THROWS_AS(S.validate(), ConfigError);
  };
  bad([](ScaleSchedule& s) { s.nu = 1.0; });
  bad([](ScaleSchedule& s) { s.nu_prime = 0.95; });
  bad([](ScaleSchedule& s) { s.tau = 0.0; });
  bad([](ScaleSchedule& s) { s.C2 = 2.9; });
  bad([](ScaleSchedule& s) { s.C0 = 4.1; });
  bad([](ScaleSchedule& s) { s.N0 = 1; });
  bad([](ScaleSchedule& s) { s.factor = 0.5; });
  bad([](ScaleSchedule& s) { s.factor = 100.0; });
}

TEST_CASE("scales clamp at max_scale") {
  ScaleSchedule S = ScaleSchedule::desk();
  S.max_scale = 100;
  CHECK(S.scale(1) == 76);
  CHECK_FALSE(S.clamped(1));
  CHECK(S.scale(2) == 100);
  CHECK(S.clamped(2));
  S.s_max = 3;
  CHECK_THROWS_AS(S.validate(), ConfigError);
}

TEST_CASE("upsilon distance against a brute-force orbit") {
  std::vector<double> w{std::sqrt(2.0) - 1.0, std::sqrt(3.0) - 1.0};
  std::mt19937_64 g(71);
  std::uniform_real_distribution<double> u;
  for (int t = 0; t < 10; ++t) {
    std::vector<double> h{u(g), u(g)};
    const long N = 5 + t;
    double best = 1e300;
    for (long n = -(3 * N) / 2; n <= (3 * N) / 2; ++n) {
      double d = 0.0;
      for (int i = 0; i < 2; ++i) d = std::max(d, oracle::frac_dist(h[i] - n * w[i]));
      best = std::min(best, d);
    }
    CHECK(upsilon_distance(h, w, N) == doctest::Approx(best).epsilon(1e-12));
  }
  std::vector<double> on{0.0, 0.0};
  CHECK(upsilon_distance(on, w, 3) == 0.0);
}

TEST_CASE("arc_between") {
  auto e = [](double t) { return std::polar(1.0, t); };
  CHECK(arc_between(e(0.1), e(0.5), e(1.0)));
  CHECK_FALSE(arc_between(e(0.1), e(1.5), e(1.0)));
  CHECK(arc_between(e(6.0), e(0.1), e(0.5)));
  CHECK(arc_between(e(0.1), e(0.1), e(1.0)));
}

TEST_CASE("solve_phase lands on an eigenvalue of the window") {
  MultiscaleProblem P = desk_problem();
  const long a = -10, b = 10;
  RealVec phi{0.1};
  auto eig_at = [&](double t) {
    RealVec x{phi[0], t};
    auto seq = VerblunskySequence::sample(P.f, P.w, x, a - 1, b);
    return eigenvalues(build_finite_cmv(seq, a, b, P.beta, P.eta));
  };
  const double tstar = 0.37;
  auto zs = eig_at(tstar);
  const cplx target = zs[zs.size() / 2];
  PhaseSolve s = solve_phase(P, a, b, phi, target, tstar + 1e-3, target);
  REQUIRE(s.converged);
  CHECK(s.residual < 1e-10);
  CHECK(nearest_value(eig_at(s.x[1]), target).second < 1e-9);
}

TEST_CASE("desk multiscale run: depth 0 verifies and advances") {
  MultiscaleProblem P = desk_problem();
  ScaleSchedule S = ScaleSchedule::desk();
  InitOptions io;
  io.pad = 3;
  InductiveState st = initialize_state(P, S, std::polar(1.0, 0.8), {0.1}, io);
  CHECK(st.first() == -19);
  CHECK(st.last() == 19);
  CHECK(std::abs(st.center().zk - std::polar(1.0, 0.8)) < 1e-10);

  VerifyReport rep = verify_conditions_ABCD(P, S, st);
  for (const auto& c : rep.failures()) MESSAGE(describe(c));
  CHECK(rep.ok());
  st.verified = rep.ok();

  AdvanceReport ar = inductive_advance(P, S, st);
  for (const auto& c : ar.failures()) MESSAGE(describe(c));
  CHECK(ar.ok());
  CHECK(ar.next.depth == 1);
  CHECK(ar.next.N == 76);

  SUBCASE("forced failure with an oversized gamma") {
    MultiscaleProblem Q = P;
    Q.gamma = 1e3;
    AdvanceOptions ao;
    ao.require_verified = false;
    AdvanceReport bad = inductive_advance(Q, S, st, ao);
    CHECK_FALSE(bad.ok());
    CHECK(has_failure(bad.failures(), "phase_shift_bound"));
  }
  SUBCASE("advancing past s_max is a no-op") {
    AdvanceReport nop = inductive_advance(P, S, ar.next);
    CHECK(nop.noop);
    CHECK(nop.ok());
    CHECK(nop.next.depth == 1);
  }
  SUBCASE("unverified states are refused") {
    InductiveState raw = st;
    raw.verified = false;
    CHECK_THROWS_AS(inductive_advance(P, S, raw), HypothesisError);
  }
}

TEST_CASE("window pad is bounded by sqrt(N0)") {
  MultiscaleProblem P = desk_problem();
  InitOptions io;
  io.pad = 5;
  CHECK_THROWS_AS(initialize_state(P, ScaleSchedule::desk(), std::polar(1.0, 0.8), {0.1}, io), ConfigError);
}
