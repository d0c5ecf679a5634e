#include "cmvspec/green.hpp"

#include <cmath>

#include "cmvspec/errors.hpp"

namespace cmvspec {

namespace {

CharDet det_of(const FiniteCMV& m, cplx z) {
  CharDet d;
  d.a = m.a;
  d.b = m.b;
  d.left = m.left;
  d.right = m.right;
  BandLU lu(m.size(), 2, 2, [&](int i, int j) {
    cplx e = -m.band[i][j - i + 2];
    return i == j ? e + z : e;
  });
  d.singular = lu.singular();
  d.log_abs = lu.log_abs_det();
  d.phase = lu.det_phase();
  return d;
}

bool is_odd(long k) { return (k % 2 + 2) % 2 == 1; }

}  // namespace

CharDet char_det(const FiniteCMV& m, cplx z) { return det_of(m, z); }

CharDet char_det(const VerblunskySequence& seq, long a, long b, cplx beta, cplx eta, cplx z) {
  return det_of(build_finite_cmv(seq, a, b, beta, eta), z);
}

CharDet char_det_cut(const VerblunskySequence& seq, long a, long b, std::optional<cplx> left,
                     std::optional<cplx> right, cplx z) {
  if (a > b) {
    CharDet d;
    d.a = a;
    d.b = b;
    return d;
  }
  return det_of(build_truncation(seq, a, b, left, right), z);
}

cplx normalized_phi(const VerblunskySequence& seq, long a, long b, std::optional<cplx> left,
                    std::optional<cplx> right, cplx z) {
  if (a > b) return 1.0;
  CharDet d = char_det_cut(seq, a, b, left, right, z);
  if (d.singular) return 0.0;
  double lr = 0.0;
  for (long k = a; k <= b; ++k) lr += std::log(seq.rho(k));
  return std::exp(d.log_abs - lr) * d.phase;
}

RelationResult relation_residual(const SamplingFunction& f, std::span<const double> w, const SpectralPoint& z,
                                 std::span<const double> x, long n) {
  if (n < 2) throw ConfigError("relation_residual: n must be >= 2");
  VerblunskySequence seq = VerblunskySequence::sample(f, w, x, -1, n);
  const cplx am1 = seq.alpha(-1);
  if (std::abs(am1) < 1e-8) throw NumericError("relation_residual: formula singular; choose different base phase");

  RelationResult out;
  out.transfer = transfer_product(f, w, z, Phase(RealVec(x.begin(), x.end())), n).full();

  const cplx zz = z.z();
  cplx pref = std::pow(z.sqrt_z(), -static_cast<double>(n));
  double lr = 0.0;
  for (long j = 0; j < n; ++j) lr -= std::log(seq.rho(j));
  pref *= std::exp(lr);
  const cplx p1 = char_det_cut(seq, 1, n - 1, std::nullopt, std::nullopt, zz).value();
  const cplx p0 = char_det_cut(seq, 0, n - 1, std::nullopt, std::nullopt, zz).value();
  const cplx bb = (zz * p1 - p0) / am1;
  const cplx zn1 = std::pow(zz, static_cast<double>(n - 1));
  auto star = [&](cplx v) { return zn1 * std::conj(v); };
  out.from_dets << zz * p1, bb, zz * star(bb), star(p1);
  out.from_dets *= pref;
  out.residual = (out.transfer - out.from_dets).cwiseAbs().maxCoeff() / out.transfer.cwiseAbs().maxCoeff();
  return out;
}

double GreenValue::relative_gap() const {
  double d = std::abs(value);
  return std::abs(magnitude - d) / std::max(d, 1e-300);
}

GreenSolver::GreenSolver(const FiniteCMV& m, cplx z) : a_(m.a), n_(m.size()) {
  auto l = factor_rows(m, true);
  auto mm = factor_rows(m, false);
  lu_ = std::make_unique<BandLU>(n_, 1, 1, [&](int i, int j) {
    // (L*)(i, j) = conj(L(j, i))
    cplx lstar = std::conj(l[j][i - j + 1]);
    return z * lstar - mm[i][j - i + 1];
  });
}

bool GreenSolver::singular() const { return lu_->singular() || lu_->min_pivot() < 1e-12; }

Eigen::VectorXcd GreenSolver::column(long k) const {
  if (singular()) throw SingularError("Green's function: z is (numerically) an eigenvalue of the truncation");
  if (k < a_ || k >= a_ + n_) throw ConfigError("Green's function: index outside interval");
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n_);
  e(k - a_) = 1.0;
  return lu_->solve(e);
}

GreenValue green_value(const VerblunskySequence& seq, long a, long b, cplx beta, cplx eta, long j, long k, cplx z) {
  if (!(a <= j && j <= k && k <= b)) throw ConfigError("green_value: need a <= j <= k <= b");
  FiniteCMV m = build_finite_cmv(seq, a, b, beta, eta);
  GreenSolver g(m, z);
  GreenValue out{a, b, j, k, 0.0, 0.0};
  out.value = g(j, k);
  CharDet full = char_det(m, z);
  if (full.singular) throw SingularError("green_value: z is an eigenvalue of the truncation");
  cplx num = normalized_phi(seq, a, j - 1, beta, std::nullopt, z) * normalized_phi(seq, k + 1, b, std::nullopt, eta, z);
  cplx den = normalized_phi(seq, a, b, beta, eta, z);
  out.magnitude = std::abs(num / den) / seq.rho(k);
  return out;
}

PoissonTerms poisson_terms(const VerblunskySequence& seq, long a, long b, cplx beta, cplx eta, cplx z,
                           const Eigen::VectorXcd& u, long u_first) {
  if (b - a < 1) throw ConfigError("poisson_terms: window needs at least two sites");
  auto U = [&](long s) -> cplx {
    long i = s - u_first;
    if (i < 0 || i >= u.size()) throw ConfigError("poisson_terms: vector does not cover the window");
    return u(i);
  };
  PoissonTerms t;
  const cplx aa = seq.alpha(a), ab = seq.alpha(b - 1);
  const double ra = seq.rho(a), rb = seq.rho(b - 1);
  if (is_odd(a))
    t.f_left = -(z * std::conj(beta) + std::conj(aa)) * U(a) - ra * U(a + 1);
  else
    t.f_left = (beta + z * aa) * U(a) + z * ra * U(a + 1);
  if (is_odd(b))
    t.f_right = -(std::conj(eta) + z * std::conj(ab)) * U(b) + z * rb * U(b - 1);
  else
    t.f_right = (z * eta + ab) * U(b) - rb * U(b - 1);
  t.w_left = std::abs(beta + z * aa) + ra;
  t.w_right = std::abs(z * eta + ab) + rb;
  return t;
}

double poisson_residual(const VerblunskySequence& seq, long a, long b, cplx beta, cplx eta, cplx z,
                        const Eigen::VectorXcd& u, long u_first, long m) {
  if (!(a < m && m < b)) throw ConfigError("poisson_residual: need a < m < b");
  PoissonTerms t = poisson_terms(seq, a, b, beta, eta, z, u, u_first);
  GreenSolver g(build_finite_cmv(seq, a, b, beta, eta), z);
  cplx rhs = g.column(a)(m - a) * t.f_left + g.column(b)(m - a) * t.f_right;
  return std::abs(rhs - u(m - u_first));
}

CoveringValue covering_predicate(const VerblunskySequence& seq, cplx z, long m, long am, long bm, long a, long b,
                                 cplx beta, cplx eta) {
  if (!(a + 1 <= am && bm <= b - 1 && am <= m && m <= bm))
    throw ConfigError("covering_predicate: need m in I_m inside [a+1, b-1]");
  if (bm - am < 1) throw ConfigError("covering_predicate: |I_m| must be at least 2");
  CoveringValue out;
  GreenSolver g(build_finite_cmv(seq, am, bm, beta, eta), z);
  if (g.singular()) {
    out.singular = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  const double wl = std::abs(beta + z * seq.alpha(am)) + seq.rho(am);
  const double wr = std::abs(z * eta + seq.alpha(bm - 1)) + seq.rho(bm - 1);
  out.value = std::abs(g.column(am)(m - am)) * wl + std::abs(g.column(bm)(m - am)) * wr;
  out.holds = out.value < 1.0;
  return out;
}

}  // namespace cmvspec
