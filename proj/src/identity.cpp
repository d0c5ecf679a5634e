#include "cmvspec/identity.hpp"

#include <algorithm>
#include <cmath>

#include "cmvspec/cmv.hpp"
#include "cmvspec/cocycle.hpp"
#include "cmvspec/errors.hpp"
#include "cmvspec/green.hpp"
#include "cmvspec/parallel.hpp"
#include "cmvspec/rng.hpp"
#include "cmvspec/spectral.hpp"

namespace cmvspec {

namespace {

long draw_between(Stream& st, long lo, long hi) {
  return lo + static_cast<long>(st.bits() % static_cast<std::uint64_t>(hi - lo + 1));
}

cplx draw_disk(Stream& st, double radius) {
  return std::polar(radius * std::sqrt(st.uniform()), kTwoPi * st.uniform());
}

void unitary_case(const IdentitySuiteOptions& opt, long i, IdentityCase& u, IdentityCase& fz) {
  Stream st(opt.seed, static_cast<std::uint64_t>(i));
  const long n = draw_between(st, 1, opt.max_unitary_n);
  const long a = draw_between(st, -5, 5);
  std::vector<cplx> vals;
  for (long s = a - 1; s <= a + n - 1; ++s) vals.push_back(draw_disk(st, 0.95));
  auto seq = VerblunskySequence::from_values(a - 1, vals);
  FiniteCMV m = build_finite_cmv(seq, a, a + n - 1, opt.beta, opt.eta);
  Eigen::MatrixXcd e = m.dense();
  u = {"unitarity", i, n, a,
       (e.adjoint() * e - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff()};
  fz = {"factorization", i, n, a, (e - m.dense_L() * m.dense_M()).cwiseAbs().maxCoeff()};
}

IdentityCase relation_case(const SamplingFunction& f, std::span<const double> w, const IdentitySuiteOptions& opt,
                           long i) {
  Stream st(opt.seed ^ 0x1000000000000000ULL, static_cast<std::uint64_t>(i));
  const long n = draw_between(st, 2, opt.max_relation_n);
  SpectralPoint z(kTwoPi * st.uniform());
  RealVec x(f.dim());
  for (auto& v : x) v = st.uniform();
  return {"relation", i, n, 0, relation_residual(f, w, z, x, n).residual};
}

IdentityCase green_case(const SamplingFunction& f, std::span<const double> w, const IdentitySuiteOptions& opt,
                        long i) {
  Stream st(opt.seed ^ 0x2000000000000000ULL, static_cast<std::uint64_t>(i));
  const long n = draw_between(st, 2, opt.max_green_n);
  const long a = draw_between(st, -5, 5), b = a + n - 1;
  RealVec x(f.dim());
  for (auto& v : x) v = st.uniform();
  auto seq = VerblunskySequence::sample(f, w, x, a - 1, b);
  long j = draw_between(st, a, b), k = draw_between(st, a, b);
  if (j > k) std::swap(j, k);
  // keep z away from the spectrum so both sides are well conditioned
  auto vals = eigenvalues(build_finite_cmv(seq, a, b, opt.beta, opt.eta));
  cplx z = std::polar(1.0, kTwoPi * st.uniform());
  for (int t = 0; t < 64 && nearest_value(vals, z).second < 1e-3; ++t) z = std::polar(1.0, kTwoPi * st.uniform());
  return {"green", i, n, a, green_value(seq, a, b, opt.beta, opt.eta, j, k, z).relative_gap()};
}

IdentityCase poisson_case(const SamplingFunction& f, std::span<const double> w, const IdentitySuiteOptions& opt,
                          long i) {
  Stream st(opt.seed ^ 0x3000000000000000ULL, static_cast<std::uint64_t>(i));
  const long n = draw_between(st, 8, std::max<long>(8, opt.max_poisson_n));
  const long A = draw_between(st, -5, 5), B = A + n - 1;
  RealVec x(f.dim());
  for (auto& v : x) v = st.uniform();
  auto seq = VerblunskySequence::sample(f, w, x, A - 1, B);
  EigenDecomposition d = eigensolve(build_finite_cmv(seq, A, B, opt.beta, opt.eta));
  // alternate the parity of the left end across cases
  long a = A + 2;
  if (((a % 2) != 0) != (i % 2 != 0)) ++a;
  const long b = B - 2 - draw_between(st, 0, 1);
  // an eigenvalue of E_[A,B] that is not (nearly) one of E_[a,b]
  auto inner = eigenvalues(build_finite_cmv(seq, a, b, opt.beta, opt.eta));
  const long np = static_cast<long>(d.pairs.size());
  const long start = draw_between(st, 0, np - 1);
  long pick = start;
  double best = -1.0;
  for (long t = 0; t < np; ++t) {
    const long k = (start + t) % np;
    const double dd = nearest_value(inner, d.pairs[k].z).second;
    if (dd >= 1e-4) {
      pick = k;
      break;
    }
    if (dd > best) {
      best = dd;
      pick = k;
    }
  }
  const auto& p = d.pairs[pick];
  double res = 0.0;
  for (long m = a + 1; m < b; ++m)
    res = std::max(res, poisson_residual(seq, a, b, opt.beta, opt.eta, p.z, p.u, A, m));
  return {"poisson", i, b - a + 1, a, res};
}

}  // namespace

double IdentitySuiteReport::max_residual(const std::string& suite) const {
  double m = 0.0;
  for (const auto& c : cases)
    if (c.suite == suite) m = std::max(m, c.residual);
  return m;
}

IdentitySuiteReport run_identity_suite(const SamplingFunction& f, std::span<const double> w,
                                       const IdentitySuiteOptions& opt) {
  if (opt.cases < 1) throw ConfigError("identity suite: cases must be >= 1");
  if (static_cast<int>(w.size()) != f.dim()) throw ConfigError("identity suite: frequency dimension mismatch");
  const std::size_t n = static_cast<std::size_t>(opt.cases);
  std::vector<IdentityCase> uni(n), fac(n), rel(n), grn(n), poi(n);
  parallel_for(n, opt.workers, [&](std::size_t i) {
    const long li = static_cast<long>(i);
    unitary_case(opt, li, uni[i], fac[i]);
    rel[i] = relation_case(f, w, opt, li);
    grn[i] = green_case(f, w, opt, li);
    poi[i] = poisson_case(f, w, opt, li);
  });
  IdentitySuiteReport rep;
  for (auto* v : {&uni, &fac, &rel, &grn, &poi}) rep.cases.insert(rep.cases.end(), v->begin(), v->end());
  return rep;
}

}  // namespace cmvspec
