#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cmvspec/cmv.hpp"
#include "cmvspec/cocycle.hpp"

namespace cmvspec {

struct ExceptionalSetEstimate {
  std::string description;
  long samples = 0;
  long hits = 0;
  double estimate = 0.0;
  double lower = 0.0;  // Wilson 95% interval
  double upper = 0.0;
};

ExceptionalSetEstimate make_estimate(std::string description, long hits, long samples);

struct LdtRow {
  long n = 0;
  double L_n = 0.0;
  double threshold = 0.0;  // n^{1 - tau}
  bool vacuous = false;    // measured L_n not positive
  ExceptionalSetEstimate set;
};

struct LdtScan {
  std::vector<LdtRow> rows;
  // no consecutive pair where the later interval lies strictly above the earlier one
  bool nonincreasing = true;
};

// Fraction of phases with |log||M_n(x)|| - n L_n| > n^{1-tau}.
LdtScan ldt_measure_scan(const SamplingFunction& f, std::span<const double> w, const SpectralPoint& z,
                         std::span<const long> n_list, double tau, long samples, std::uint64_t seed,
                         int workers = 1);

// Same with log|phi_[0,n-1](x)| (determinant over rho_0...rho_{n-1}) in place
// of log||M_n||. A sample where z is an eigenvalue counts as deviating.
LdtScan ldt_determinant_scan(const SamplingFunction& f, std::span<const double> w, const SpectralPoint& z,
                             std::span<const long> n_list, double tau, long samples, std::uint64_t seed,
                             cplx beta = 1.0, cplx eta = 1.0, int workers = 1);

struct SpectralFormResult {
  double dist = 0.0;            // dist(z, spectrum)
  double resolvent_norm = 0.0;  // 1 / dist for the unitary truncation
  double log_phi = 0.0;
  bool resolvent_ok = false;    // ||(E - z)^{-1}|| <= C exp(n^{nu/2})
  bool logphi_ok = false;       // log|phi| > n L_n - n^{1 - tau/2}
  bool implication_holds() const { return !resolvent_ok || logphi_ok; }
};

SpectralFormResult spectral_form_predicate(const VerblunskySequence& seq, long n, cplx beta, cplx eta, cplx z,
                                           double nu, double tau, double L_n, double C = 1.0);

struct Subwindow {
  long m = 0, a = 0, b = 0;
};

struct CoveringFormReport {
  bool preconditions_ok = true;
  std::vector<long> fail_separation;  // (i)
  std::vector<long> fail_length;      // (ii)
  std::vector<long> fail_logphi;      // (iii)
  double dist = 0.0;                  // dist(z0, spectrum) by eigensolve
  double bound = 0.0;                 // exp(-2 max |I_m|^{1 - tau/4})
  bool conclusion_ok = false;
  double margin = 0.0;                // log(dist) - log(bound)
};

// L_of_length(k) supplies L_k(z0) for the subwindow lengths.
CoveringFormReport covering_form_check(const VerblunskySequence& seq, cplx z0, long n,
                                       const std::vector<Subwindow>& windows, double tau, long min_length,
                                       const std::function<double(long)>& L_of_length, cplx beta = 1.0,
                                       cplx eta = 1.0);

struct UnionCoveringReport {
  bool preconditions_ok = true;
  std::vector<std::string> failures;
  long samples = 0;
  double min_dist = 0.0;  // over sampled x of dist(spectrum on J, Z)
  double bound = 0.0;     // exp(-K) / 2
  bool conclusion_ok = false;
};

// Windows J_m = [a, b] for each m; the union must be an interval.
UnionCoveringReport union_covering_check(const SamplingFunction& f, std::span<const double> w,
                                         std::span<const double> x0, const std::vector<cplx>& Z,
                                         const std::vector<Subwindow>& windows, double K, double nu, long samples,
                                         std::uint64_t seed, cplx beta = 1.0, cplx eta = 1.0);

}  // namespace cmvspec
