#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmvspec/cmv.hpp"
#include "cmvspec/ldt.hpp"
#include "cmvspec/torus.hpp"

namespace cmvspec {

struct ScaleSchedule {
  double nu_prime = 0.1;
  double nu = 0.1;
  double tau = 0.3;
  double C0 = 3.5, C1 = 2.0, C2 = 3.2;
  double factor = 1.0;  // required ratio between neighbours of the ordering chain
  long N0 = 16;
  int s_max = 1;
  long max_scale = 4096;

  double delta_hat() const;
  double beta_hat() const;
  double mu_hat() const;
  double A_hat() const;

  struct Link {
    std::string smaller, larger;
    double a = 0.0, b = 0.0;
    bool ok = false;
  };
  // beta^2 < delta < mu < beta nu < beta < nu
  std::vector<Link> ordering_chain() const;

  // Throws ConfigError on any violated constraint.
  void validate() const;

  long scale(int s) const;
  bool clamped(int s) const;  // floor(N_{s-1}^A) exceeded max_scale
  double radius(int s) const;  // exp(-N_s^delta)

  // nu' = 0.8, nu = 0.9, N0 = 16: first step lands at N1 = 76.
  static ScaleSchedule desk();
};

struct MultiscaleProblem {
  SamplingFunction f;
  RealVec w;
  cplx beta = 1.0, eta = 1.0;
  double gamma = 0.0;
};

// One inequality evaluated by the harness: ok iff lhs < rhs (or <= when noted).
struct Check {
  std::string id;
  std::string inequality;
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
  std::string detail;
};

std::string describe(const Check& c);

struct GridNode {
  RealVec phi;
  cplx z = 1.0;
  RealVec x;
  bool converged = false;
  int k = -1;
  cplx zk = 1.0;
  double residual = 0.0;    // |z_k(x) - z|
  double separation = 0.0;  // min_{j != k} |z_j(x) - z|
  Eigen::VectorXcd u;       // on the state window
};

struct InductiveState {
  int depth = 0;
  long N = 0;
  long n_left = 0, n_right = 0;  // window [-n_left, n_right]
  cplx z_center = 1.0;
  double r = 0.0;
  RealVec phi_center;
  std::vector<GridNode> grid;  // grid[0] sits at (phi_center, z_center)
  bool verified = false;

  long first() const { return -n_left; }
  long last() const { return n_right; }
  const GridNode& center() const { return grid.front(); }
};

struct PhaseSolve {
  RealVec x;
  bool converged = false;
  int iterations = 0;
  cplx zk = 1.0;
  double residual = 0.0;
  std::string reason;
};

// Solves z_k(phi, t) = z for the last coordinate t by guarded Newton on the
// eigenvalue phase, following the eigenvalue that starts nearest to ref at t0.
PhaseSolve solve_phase(const MultiscaleProblem& P, long a, long b, const RealVec& phi, cplx z, double t0, cplx ref);

struct InitOptions {
  int grid_per_axis = 3;  // odd
  int seed_grid = 64;     // t values scanned for a starting branch
  int max_candidates = 8;
  long pad = 0;           // depth-0 window [-(N0 + pad), N0 + pad], |pad| < sqrt(N0)
};

// Depth-0 state on [-N0 - pad, N0 + pad]; throws HypothesisError when no centred branch
// can be continued to z0.
InductiveState initialize_state(const MultiscaleProblem& P, const ScaleSchedule& S, cplx z0, const RealVec& phi0,
                                const InitOptions& opt = {});

struct VerifyOptions {
  bool full = true;  // false: tracking and decay only
  long samples = 64;
  std::uint64_t seed = 1;
  int workers = 1;
  std::optional<RealVec> h_hat;             // probe for the exceptional-set check
  std::optional<std::vector<cplx>> h0;      // direction for the gradient check
  double residual_tol = 1e-10;
};

struct ConditionReport {
  std::string name;
  bool evaluated = false;
  bool ok = false;
  std::vector<Check> checks;
  std::optional<ExceptionalSetEstimate> estimate;
  double measure = 0.0;  // estimate scaled by |I_s|
};

struct VerifyReport {
  ConditionReport tracking, decay, exceptional, gradient;
  bool ok() const;
  std::vector<Check> failures() const;
};

VerifyReport verify_conditions_ABCD(const MultiscaleProblem& P, const ScaleSchedule& S, const InductiveState& state,
                                    const VerifyOptions& opt = {});

// Distance from h to {n w : |n| <= 3N/2} in the torus sup norm.
double upsilon_distance(std::span<const double> h, std::span<const double> w, long N);

struct LocalizationStepReport {
  bool hypotheses_ok = false;
  bool refused = false;
  std::string reason;
  long n_left = 0, n_right = 0;  // assembled window [-n', n'']
  std::vector<Check> hypotheses;
  std::vector<Check> conclusions;
  int k0 = -1, k = -1;
  bool ok() const;
};

// x0 is the phase at which the small-window branch sits at z0; windows are the
// per-site intervals J_m. Conclusions are evaluated at x0 and at `probes`
// phases drawn from |x - x0| < exp(-2 N0^beta).
LocalizationStepReport finite_localization_step(const MultiscaleProblem& P, const RealVec& x0, cplx z0, long N0,
                                                long n0_left, long n0_right, const std::vector<Subwindow>& windows,
                                                double beta_hat, long probes = 4, std::uint64_t seed = 1,
                                                bool refuse_on_hypothesis = true);

struct AdvanceOptions {
  bool require_verified = true;
  std::uint64_t seed = 1;
  int phi_attempts = 32;
  long probes = 4;
  std::optional<cplx> z_next;  // defaults to the current centre
};

struct AdvanceReport {
  bool noop = false;
  InductiveState next;
  std::vector<Check> checks;
  LocalizationStepReport step;
  VerifyReport next_report;  // tracking and decay at the new depth
  bool ok() const;
  std::vector<Check> failures() const;
};

AdvanceReport inductive_advance(const MultiscaleProblem& P, const ScaleSchedule& S, const InductiveState& state,
                                const AdvanceOptions& opt = {});

// True when b lies on the counterclockwise arc from a to c (endpoints included).
bool arc_between(cplx a, cplx b, cplx c);

}  // namespace cmvspec
