#pragma once

#include <memory>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "cmvspec/banded.hpp"
#include "cmvspec/cmv.hpp"
#include "cmvspec/cocycle.hpp"

namespace cmvspec {

// det(z - E) for a truncation on [a, b].
struct CharDet {
  long a = 0, b = -1;
  cplx left = 1.0, right = 1.0;
  double log_abs = 0.0;
  cplx phase = 1.0;
  bool singular = false;

  cplx value() const { return singular ? cplx(0.0) : std::exp(log_abs) * phase; }
};

CharDet char_det(const FiniteCMV& m, cplx z);
CharDet char_det(const VerblunskySequence& seq, long a, long b, cplx beta, cplx eta, cplx z);
// Cut coefficients default to the sequence values (plain truncation).
CharDet char_det_cut(const VerblunskySequence& seq, long a, long b, std::optional<cplx> left,
                     std::optional<cplx> right, cplx z);

// det(z - E) / (rho_a ... rho_b) with the sequence's own rho's; 1 when a > b.
cplx normalized_phi(const VerblunskySequence& seq, long a, long b, std::optional<cplx> left,
                    std::optional<cplx> right, cplx z);

struct RelationResult {
  double residual = 0.0;  // max entry difference / max entry of M_n
  Mat2 transfer;          // M_n from the cocycle
  Mat2 from_dets;         // right-hand side from characteristic determinants
};

// Compares M_n(x) with its expression through det(z - E_[1,n-1]) and
// det(z - E_[0,n-1]) (plain truncations, sequence sampled from f at x).
RelationResult relation_residual(const SamplingFunction& f, std::span<const double> w, const SpectralPoint& z,
                                 std::span<const double> x, long n);

struct GreenValue {
  long a = 0, b = -1, j = 0, k = 0;
  double magnitude = 0.0;  // from the determinant ratio
  cplx value = 0.0;        // from the banded solve
  double relative_gap() const;
};

// Tridiagonal z L* - M of a truncation, factored once and reused.
class GreenSolver {
 public:
  GreenSolver(const FiniteCMV& m, cplx z);
  // G(., k) as a vector over [a, b]
  Eigen::VectorXcd column(long k) const;
  cplx operator()(long j, long k) const { return column(k)(j - a_); }
  bool singular() const;

 private:
  long a_;
  int n_;
  std::unique_ptr<BandLU> lu_;
};

GreenValue green_value(const VerblunskySequence& seq, long a, long b, cplx beta, cplx eta, long j, long k, cplx z);

struct PoissonTerms {
  cplx f_left = 0.0, f_right = 0.0;
  double w_left = 0.0, w_right = 0.0;
};

// Boundary terms of Poisson's formula for u on the window [a, b] with b - a >= 1.
// `u` is indexed by absolute site via u_first.
PoissonTerms poisson_terms(const VerblunskySequence& seq, long a, long b, cplx beta, cplx eta, cplx z,
                           const Eigen::VectorXcd& u, long u_first);

// |G(m,a) f_a + G(m,b) f_b - u(m)| for a < m < b.
double poisson_residual(const VerblunskySequence& seq, long a, long b, cplx beta, cplx eta, cplx z,
                        const Eigen::VectorXcd& u, long u_first, long m);

struct CoveringValue {
  double value = 0.0;  // |G(m,a_m)| w_left + |G(m,b_m)| w_right
  bool holds = false;  // value < 1
  bool singular = false;
};

// Covering-lemma sum at site m for the window I_m = [am, bm] inside [a+1, b-1].
CoveringValue covering_predicate(const VerblunskySequence& seq, cplx z, long m, long am, long bm, long a, long b,
                                 cplx beta, cplx eta);

}  // namespace cmvspec
