#pragma once

#include <array>
#include <complex>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "cmvspec/torus.hpp"

namespace cmvspec {

// Verblunsky coefficients alpha_n on a finite index window [first, last],
// with optional unit-modulus replacements used as boundary conditions.
class VerblunskySequence {
 public:
  VerblunskySequence() = default;

  static VerblunskySequence from_values(long first, std::vector<cplx> values);
  // alpha_n = f(x + n w) for n in [first, last].
  static VerblunskySequence sample(const SamplingFunction& f, std::span<const double> w,
                                   std::span<const double> x, long first, long last);

  long first() const { return first_; }
  long last() const { return first_ + static_cast<long>(vals_.size()) - 1; }
  bool contains(long n) const { return n >= first() && n <= last(); }

  cplx alpha(long n) const;  // original coefficient
  double rho(long n) const;  // from the original coefficient
  cplx value(long n) const;  // override if present

  void set_override(long n, cplx v);
  void clear_overrides() { overrides_.clear(); }
  const std::map<long, cplx>& overrides() const { return overrides_; }

 private:
  long first_ = 0;
  std::vector<cplx> vals_;
  std::map<long, cplx> overrides_;
};

// One diagonal block of L or M: a 2x2 Theta on (site, site+1), or a scalar at site.
struct ThetaBlock {
  long site = 0;
  int size = 2;
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
};

struct FiniteCMV {
  long a = 0, b = -1;
  cplx left = 1.0;   // coefficient used at a-1
  cplx right = 1.0;  // coefficient used at b
  bool unitary = false;
  // band[r][c - r + 2] holds entry (a + r, a + c) for |c - r| <= 2
  std::vector<std::array<cplx, 5>> band;
  std::vector<ThetaBlock> L, M;

  int size() const { return static_cast<int>(b - a + 1); }
  cplx entry(long i, long j) const;  // absolute indices
  Eigen::MatrixXcd dense() const;
  Eigen::MatrixXcd dense_L() const;
  Eigen::MatrixXcd dense_M() const;
};

Eigen::Matrix2cd theta_block(cplx alpha);

// Restriction of the extended CMV matrix to [a, b]. The coefficient at a-1 is
// `left` if given (else the sequence value) and the one at b is `right`.
FiniteCMV build_truncation(const VerblunskySequence& seq, long a, long b,
                           std::optional<cplx> left = std::nullopt,
                           std::optional<cplx> right = std::nullopt);

// Unitary truncation with boundary phases beta at a-1 and eta at b.
FiniteCMV build_finite_cmv(const VerblunskySequence& seq, long a, long b, cplx beta = 1.0, cplx eta = 1.0);

// Rows of the factor L (or M): rows[r][d + 1] = entry (a + r, a + r + d), |d| <= 1.
std::vector<std::array<cplx, 3>> factor_rows(const FiniteCMV& m, bool left_factor);

Eigen::VectorXcd apply_cmv(const FiniteCMV& m, const Eigen::VectorXcd& v);

struct RowWindow {
  long row0 = 0;  // absolute index of the first row
  long col0 = 0;  // absolute index of the first column
  Eigen::MatrixXcd rows;
};

// Rows n-w..n+w of the extended matrix, columns n-w-2..n+w+2.
RowWindow cmv_row_window(const VerblunskySequence& seq, long n, int w);

void write_cmv_csv(std::ostream& os, const FiniteCMV& m);

}  // namespace cmvspec
