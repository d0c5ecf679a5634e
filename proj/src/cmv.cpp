#include "cmvspec/cmv.hpp"

#include <cmath>
#include <iomanip>
#include <string>

#include "cmvspec/errors.hpp"

namespace cmvspec {

namespace {

bool is_even(long k) { return (k % 2 + 2) % 2 == 0; }

double rho_of(cplx a) { return std::sqrt(std::max(0.0, 1.0 - std::norm(a))); }

// Tridiagonal storage of a block-diagonal factor: d[r][0..2] = (r, r-1..r+1).
using Tri = std::vector<std::array<cplx, 3>>;

void place(Tri& t, long a, const ThetaBlock& blk) {
  long r = blk.site - a;
  if (blk.size == 1) {
    t[r][1] = blk.m(0, 0);
    return;
  }
  t[r][1] = blk.m(0, 0);
  t[r][2] = blk.m(0, 1);
  t[r + 1][0] = blk.m(1, 0);
  t[r + 1][1] = blk.m(1, 1);
}

Eigen::MatrixXcd blocks_dense(const std::vector<ThetaBlock>& blocks, long a, int n) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& blk : blocks) {
    long r = blk.site - a;
    for (int i = 0; i < blk.size; ++i)
      for (int j = 0; j < blk.size; ++j) out(r + i, r + j) = blk.m(i, j);
  }
  return out;
}

}  // namespace

VerblunskySequence VerblunskySequence::from_values(long first, std::vector<cplx> values) {
  for (const auto& v : values)
    if (!(std::abs(v) < 1.0)) throw ConfigError("Verblunsky coefficient outside the open unit disk");
  VerblunskySequence s;
  s.first_ = first;
  s.vals_ = std::move(values);
  return s;
}

VerblunskySequence VerblunskySequence::sample(const SamplingFunction& f, std::span<const double> w,
                                              std::span<const double> x, long first, long last) {
  if (last < first) throw ConfigError("sample: empty index window");
  if (static_cast<int>(w.size()) != f.dim() || static_cast<int>(x.size()) != f.dim())
    throw ConfigError("sample: dimension mismatch");
  std::vector<cplx> v;
  v.reserve(last - first + 1);
  for (long n = first; n <= last; ++n) v.push_back(f.alpha(shifted_phase(x, w, n)));
  return from_values(first, std::move(v));
}

cplx VerblunskySequence::alpha(long n) const {
  if (!contains(n))
    throw ConfigError("Verblunsky index " + std::to_string(n) + " outside window [" + std::to_string(first()) +
                      "," + std::to_string(last()) + "]");
  return vals_[n - first_];
}

double VerblunskySequence::rho(long n) const { return rho_of(alpha(n)); }

cplx VerblunskySequence::value(long n) const {
  auto it = overrides_.find(n);
  return it != overrides_.end() ? it->second : alpha(n);
}

void VerblunskySequence::set_override(long n, cplx v) {
  if (std::abs(std::abs(v) - 1.0) > 1e-12) throw ConfigError("boundary value must have unit modulus");
  overrides_[n] = v;
}

Eigen::Matrix2cd theta_block(cplx alpha) {
  if (std::abs(alpha) > 1.0 + 1e-15) throw ConfigError("theta_block: |alpha| must be <= 1");
  double r = rho_of(alpha);
  Eigen::Matrix2cd t;
  t << std::conj(alpha), r, r, -alpha;
  return t;
}

cplx FiniteCMV::entry(long i, long j) const {
  long r = i - a, c = j - a;
  if (r < 0 || c < 0 || r >= size() || c >= size()) throw ConfigError("FiniteCMV::entry: index outside interval");
  long off = c - r;
  if (off < -2 || off > 2) return 0.0;
  return band[r][off + 2];
}

Eigen::MatrixXcd FiniteCMV::dense() const {
  const int n = size();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (int r = 0; r < n; ++r)
    for (int off = -2; off <= 2; ++off) {
      int c = r + off;
      if (c >= 0 && c < n) out(r, c) = band[r][off + 2];
    }
  return out;
}

Eigen::MatrixXcd FiniteCMV::dense_L() const { return blocks_dense(L, a, size()); }
Eigen::MatrixXcd FiniteCMV::dense_M() const { return blocks_dense(M, a, size()); }

FiniteCMV build_truncation(const VerblunskySequence& seq, long a, long b, std::optional<cplx> left,
                           std::optional<cplx> right) {
  if (b < a) throw ConfigError("build_truncation: empty interval");
  FiniteCMV m;
  m.a = a;
  m.b = b;
  m.left = left ? *left : seq.value(a - 1);
  m.right = right ? *right : seq.value(b);
  m.unitary = std::abs(std::abs(m.left) - 1.0) <= 1e-12 && std::abs(std::abs(m.right) - 1.0) <= 1e-12;
  const int n = m.size();

  for (long k = a - 1; k <= b; ++k) {
    ThetaBlock blk;
    if (k == a - 1) {
      blk.site = a;
      blk.size = 1;
      blk.m(0, 0) = -m.left;
    } else if (k == b) {
      blk.site = b;
      blk.size = 1;
      blk.m(0, 0) = std::conj(m.right);
    } else {
      blk.site = k;
      blk.m = theta_block(seq.value(k));
    }
    // a single-site interval gets both cuts; a-1 and b have opposite parity
    (is_even(k) ? m.L : m.M).push_back(blk);
  }

  Tri tl(n), tm(n);
  for (auto& row : tl) row.fill(0.0);
  for (auto& row : tm) row.fill(0.0);
  for (const auto& blk : m.L) place(tl, a, blk);
  for (const auto& blk : m.M) place(tm, a, blk);

  m.band.assign(n, {});
  for (int r = 0; r < n; ++r) {
    m.band[r].fill(0.0);
    for (int dt = -1; dt <= 1; ++dt) {
      int t = r + dt;
      if (t < 0 || t >= n) continue;
      cplx lv = tl[r][dt + 1];
      if (lv == 0.0) continue;
      for (int dc = -1; dc <= 1; ++dc) {
        int c = t + dc;
        if (c < 0 || c >= n) continue;
        m.band[r][c - r + 2] += lv * tm[t][dc + 1];
      }
    }
  }
  return m;
}

FiniteCMV build_finite_cmv(const VerblunskySequence& seq, long a, long b, cplx beta, cplx eta) {
  if (std::abs(std::abs(beta) - 1.0) > 1e-12 || std::abs(std::abs(eta) - 1.0) > 1e-12)
    throw ConfigError("build_finite_cmv: boundary values must have unit modulus");
  return build_truncation(seq, a, b, beta, eta);
}

std::vector<std::array<cplx, 3>> factor_rows(const FiniteCMV& m, bool left_factor) {
  Tri t(m.size());
  for (auto& row : t) row.fill(0.0);
  for (const auto& blk : left_factor ? m.L : m.M) place(t, m.a, blk);
  return t;
}

Eigen::VectorXcd apply_cmv(const FiniteCMV& m, const Eigen::VectorXcd& v) {
  const int n = m.size();
  if (v.size() != n) throw ConfigError("apply_cmv: dimension mismatch");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
  for (int r = 0; r < n; ++r) {
    cplx s = 0.0;
    for (int off = -2; off <= 2; ++off) {
      int c = r + off;
      if (c >= 0 && c < n) s += m.band[r][off + 2] * v(c);
    }
    out(r) = s;
  }
  return out;
}

RowWindow cmv_row_window(const VerblunskySequence& seq, long n, int w) {
  if (w < 2) throw ConfigError("cmv_row_window: halfwidth must be >= 2");
  // rows n-w..n+w only see Theta_k for k in [n-w-3, n+w+2]; all cut effects sit outside
  FiniteCMV big = build_truncation(seq, n - w - 3, n + w + 3);
  RowWindow out;
  out.row0 = n - w;
  out.col0 = n - w - 2;
  out.rows = Eigen::MatrixXcd::Zero(2 * w + 1, 2 * w + 5);
  for (int r = 0; r <= 2 * w; ++r)
    for (int c = 0; c <= 2 * w + 4; ++c) out.rows(r, c) = big.entry(out.row0 + r, out.col0 + c);
  return out;
}

void write_cmv_csv(std::ostream& os, const FiniteCMV& m) {
  os << "row,col,re,im\n";
  os << std::setprecision(17);
  for (int r = 0; r < m.size(); ++r)
    for (int c = 0; c < m.size(); ++c) {
      cplx v = (std::abs(c - r) <= 2) ? m.band[r][c - r + 2] : cplx(0.0);
      os << (m.a + r) << ',' << (m.a + c) << ',' << v.real() << ',' << v.imag() << '\n';
    }
}

}  // namespace cmvspec
