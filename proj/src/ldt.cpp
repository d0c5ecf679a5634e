#include "cmvspec/ldt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cmvspec/errors.hpp"
#include "cmvspec/green.hpp"
#include "cmvspec/parallel.hpp"
#include "cmvspec/rng.hpp"
#include "cmvspec/spectral.hpp"

namespace cmvspec {

ExceptionalSetEstimate make_estimate(std::string description, long hits, long samples) {
  ExceptionalSetEstimate e;
  e.description = std::move(description);
  e.samples = samples;
  e.hits = hits;
  if (samples <= 0) return e;
  const double zc = 1.959963984540054;
  const double n = static_cast<double>(samples);
  const double p = hits / n;
  const double den = 1.0 + zc * zc / n;
  const double center = (p + zc * zc / (2.0 * n)) / den;
  const double half = zc * std::sqrt(p * (1.0 - p) / n + zc * zc / (4.0 * n * n)) / den;
  e.estimate = p;
  e.lower = std::max(0.0, std::min(p, center - half));
  e.upper = std::min(1.0, std::max(p, center + half));
  return e;
}

namespace {

void finish_trend(LdtScan& scan) {
  for (std::size_t i = 1; i < scan.rows.size(); ++i)
    if (scan.rows[i].set.lower > scan.rows[i - 1].set.upper) scan.nonincreasing = false;
}

template <class Quantity>
LdtScan run_scan(const SamplingFunction& f, std::span<const double> w, const SpectralPoint& z,
                 std::span<const long> n_list, double tau, long samples, std::uint64_t seed, int workers,
                 const std::string& what, Quantity&& quantity) {
  if (samples < 1) throw ConfigError("LDT scan: samples must be >= 1");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("LDT scan: tau must lie in (0,1)");
  LdtScan scan;
  for (long n : n_list) {
    if (n < 1) throw ConfigError("LDT scan: n must be >= 1");
    std::vector<double> lognorm(samples), q(samples);
    parallel_for(samples, workers, [&](std::size_t i) {
      Phase x(random_phase(seed, i, f.dim()));
      lognorm[i] = transfer_product(f, w, z, x, n).log_op_norm();
      q[i] = quantity(x, n, lognorm[i]);
    });
    LdtRow row;
    row.n = n;
    double sum = 0.0;
    for (double v : lognorm) sum += v;
    row.L_n = sum / samples / n;
    row.threshold = std::pow(static_cast<double>(n), 1.0 - tau);
    row.vacuous = !(row.L_n > 1e-12);
    long hits = 0;
    for (double v : q)
      if (!(std::abs(v - n * row.L_n) <= row.threshold)) ++hits;
    row.set = make_estimate("|" + what + " - n L_n| > n^(1-tau), n=" + std::to_string(n), hits, samples);
    scan.rows.push_back(row);
  }
  finish_trend(scan);
  return scan;
}

}  // namespace

LdtScan ldt_measure_scan(const SamplingFunction& f, std::span<const double> w, const SpectralPoint& z,
                         std::span<const long> n_list, double tau, long samples, std::uint64_t seed, int workers) {
  return run_scan(f, w, z, n_list, tau, samples, seed, workers, "log||M_n||",
                  [](const Phase&, long, double lognorm) { return lognorm; });
}

LdtScan ldt_determinant_scan(const SamplingFunction& f, std::span<const double> w, const SpectralPoint& z,
                             std::span<const long> n_list, double tau, long samples, std::uint64_t seed, cplx beta,
                             cplx eta, int workers) {
  return run_scan(f, w, z, n_list, tau, samples, seed, workers, "log|phi|",
                  [&](const Phase& x, long n, double) {
                    auto seq = VerblunskySequence::sample(f, w, x.x, -1, n);
                    CharDet d = char_det(seq, 0, n - 1, beta, eta, z.z());
                    if (d.singular) return -std::numeric_limits<double>::infinity();
                    double lr = 0.0;
                    for (long k = 0; k < n; ++k) lr += std::log(seq.rho(k));
                    return d.log_abs - lr;
                  });
}

SpectralFormResult spectral_form_predicate(const VerblunskySequence& seq, long n, cplx beta, cplx eta, cplx z,
                                           double nu, double tau, double L_n, double C) {
  if (n < 2) throw ConfigError("spectral_form_predicate: n must be >= 2");
  FiniteCMV m = build_finite_cmv(seq, 0, n - 1, beta, eta);
  SpectralFormResult r;
  r.dist = nearest_value(eigenvalues(m), z).second;
  r.resolvent_norm = r.dist > 0.0 ? 1.0 / r.dist : std::numeric_limits<double>::infinity();
  r.resolvent_ok = r.dist >= 1e-12 && r.resolvent_norm <= C * std::exp(std::pow(double(n), nu / 2.0));
  CharDet d = char_det(m, z);
  double lr = 0.0;
  for (long k = 0; k < n; ++k) lr += std::log(seq.rho(k));
  r.log_phi = d.singular ? -std::numeric_limits<double>::infinity() : d.log_abs - lr;
  r.logphi_ok = r.log_phi > n * L_n - std::pow(double(n), 1.0 - tau / 2.0);
  return r;
}

CoveringFormReport covering_form_check(const VerblunskySequence& seq, cplx z0, long n,
                                       const std::vector<Subwindow>& windows, double tau, long min_length,
                                       const std::function<double(long)>& L_of_length, cplx beta, cplx eta) {
  if (n < 2) throw ConfigError("covering_form_check: n must be >= 2");
  std::vector<bool> seen(n, false);
  CoveringFormReport r;
  long max_len = 0;
  for (const auto& wdw : windows) {
    if (wdw.m < 0 || wdw.m >= n || wdw.a < 0 || wdw.b > n - 1 || wdw.a > wdw.m || wdw.m > wdw.b)
      throw ConfigError("covering_form_check: subwindow must contain m and lie in [0, n-1]");
    seen[wdw.m] = true;
    const long len = wdw.b - wdw.a + 1;
    max_len = std::max(max_len, len);
    // distance from m to the part of [0, n-1] outside I_m
    double sep = std::numeric_limits<double>::infinity();
    if (wdw.a > 0) sep = std::min(sep, double(wdw.m - wdw.a + 1));
    if (wdw.b < n - 1) sep = std::min(sep, double(wdw.b - wdw.m + 1));
    if (sep < len / 100.0) r.fail_separation.push_back(wdw.m);
    if (len < min_length) r.fail_length.push_back(wdw.m);
    double lphi = std::log(std::abs(normalized_phi(seq, wdw.a, wdw.b, beta, eta, z0)));
    if (!(lphi > len * L_of_length(len) - std::pow(double(len), 1.0 - tau / 4.0))) r.fail_logphi.push_back(wdw.m);
  }
  for (long m = 0; m < n; ++m)
    if (!seen[m]) throw ConfigError("covering_form_check: site " + std::to_string(m) + " has no subwindow");
  r.preconditions_ok = r.fail_separation.empty() && r.fail_length.empty() && r.fail_logphi.empty();
  r.dist = nearest_value(eigenvalues(build_finite_cmv(seq, 0, n - 1, beta, eta)), z0).second;
  r.bound = std::exp(-2.0 * std::pow(double(max_len), 1.0 - tau / 4.0));
  r.conclusion_ok = r.dist >= r.bound;
  r.margin = std::log(r.dist) - std::log(r.bound);
  return r;
}

UnionCoveringReport union_covering_check(const SamplingFunction& f, std::span<const double> w,
                                         std::span<const double> x0, const std::vector<cplx>& Z,
                                         const std::vector<Subwindow>& windows, double K, double nu, long samples,
                                         std::uint64_t seed, cplx beta, cplx eta) {
  if (windows.empty() || Z.empty()) throw ConfigError("union_covering_check: need windows and a target set");
  UnionCoveringReport r;
  long lo = windows.front().a, hi = windows.front().b;
  long min_len = std::numeric_limits<long>::max();
  for (const auto& j : windows) {
    lo = std::min(lo, j.a);
    hi = std::max(hi, j.b);
    min_len = std::min(min_len, j.b - j.a + 1);
  }
  std::vector<bool> cover(hi - lo + 1, false);
  for (const auto& j : windows)
    for (long s = j.a; s <= j.b; ++s) cover[s - lo] = true;
  if (std::find(cover.begin(), cover.end(), false) != cover.end())
    throw ConfigError("union_covering_check: windows do not cover an interval");

  auto dist_to_Z = [&](const std::vector<cplx>& spec) {
    double d = std::numeric_limits<double>::infinity();
    for (cplx zz : Z) d = std::min(d, nearest_value(spec, zz).second);
    return d;
  };

  if (!(K < 0.5 * std::pow(double(min_len), nu / 2.0)))
    r.failures.push_back("K = " + std::to_string(K) + " is not below min|J_m|^(nu/2)/2 = " +
                         std::to_string(0.5 * std::pow(double(min_len), nu / 2.0)));
  auto seq0 = VerblunskySequence::sample(f, w, x0, lo - 1, hi);
  for (const auto& j : windows) {
    const long len = j.b - j.a + 1;
    if (std::min(j.m - j.a, j.b - j.m) < len / 100.0)
      r.failures.push_back("m=" + std::to_string(j.m) + ": dist(m, boundary of J_m) < |J_m|/100");
    double d = dist_to_Z(eigenvalues(build_finite_cmv(seq0, j.a, j.b, beta, eta)));
    if (!(d >= std::exp(-K)))
      r.failures.push_back("m=" + std::to_string(j.m) + ": dist(spectrum on J_m, Z) = " + std::to_string(d) +
                           " < exp(-K)");
  }
  r.preconditions_ok = r.failures.empty();
  r.bound = 0.5 * std::exp(-K);
  r.samples = samples;
  const double rad = std::exp(-2.0 * K);
  std::vector<double> dists(samples + 1);
  dists[0] = dist_to_Z(eigenvalues(build_finite_cmv(seq0, lo, hi, beta, eta)));
  parallel_for(samples, 1, [&](std::size_t i) {
    Stream st(seed, i);
    RealVec x(x0.begin(), x0.end());
    for (auto& v : x) v += st.uniform(-rad, rad);
    auto seq = VerblunskySequence::sample(f, w, reduce_phase(x).x, lo - 1, hi);
    dists[i + 1] = dist_to_Z(eigenvalues(build_finite_cmv(seq, lo, hi, beta, eta)));
  });
  r.min_dist = *std::min_element(dists.begin(), dists.end());
  r.conclusion_ok = r.min_dist >= r.bound;
  return r;
}

}  // namespace cmvspec
