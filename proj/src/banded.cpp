#include "cmvspec/banded.hpp"

#include <cmath>
#include <limits>

#include <lapacke.h>

#include "cmvspec/errors.hpp"

namespace cmvspec {

BandLU::BandLU(int n, int kl, int ku, const std::function<cplx(int, int)>& entry)
    : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1) {
  if (n < 1) throw ConfigError("BandLU: empty matrix");
  ab_.assign(static_cast<std::size_t>(ldab_) * n, cplx(0.0));
  ipiv_.assign(n, 0);
  for (int j = 0; j < n; ++j)
    for (int i = std::max(0, j - ku); i <= std::min(n - 1, j + kl); ++i)
      ab_[static_cast<std::size_t>(j) * ldab_ + kl + ku + i - j] = entry(i, j);

  lapack_int info = LAPACKE_zgbtrf(LAPACK_COL_MAJOR, n, n, kl, ku,
                                   reinterpret_cast<lapack_complex_double*>(ab_.data()), ldab_, ipiv_.data());
  if (info < 0) throw NumericError("zgbtrf rejected argument " + std::to_string(-info));
  singular_ = info > 0;

  min_pivot_ = std::numeric_limits<double>::infinity();
  log_abs_det_ = 0.0;
  det_phase_ = 1.0;
  for (int j = 0; j < n; ++j) {
    cplx u = ab_[static_cast<std::size_t>(j) * ldab_ + kl + ku];
    double m = std::abs(u);
    min_pivot_ = std::min(min_pivot_, m);
    if (m == 0.0) {
      log_abs_det_ = -std::numeric_limits<double>::infinity();
    } else {
      log_abs_det_ += std::log(m);
      det_phase_ *= u / m;
    }
    if (ipiv_[j] != j + 1) det_phase_ = -det_phase_;
  }
  // keep the phase on the circle after many products
  det_phase_ /= std::abs(det_phase_);
}

cplx BandLU::det() const {
  if (singular_) return 0.0;
  return std::exp(log_abs_det_) * det_phase_;
}

Eigen::VectorXcd BandLU::solve(const Eigen::VectorXcd& rhs) const {
  if (singular_) throw SingularError("BandLU::solve on a singular matrix");
  if (rhs.size() != n_) throw ConfigError("BandLU::solve: dimension mismatch");
  Eigen::VectorXcd x = rhs;
  lapack_int info = LAPACKE_zgbtrs(LAPACK_COL_MAJOR, 'N', n_, kl_, ku_, 1,
                                   reinterpret_cast<const lapack_complex_double*>(ab_.data()), ldab_,
                                   ipiv_.data(), reinterpret_cast<lapack_complex_double*>(x.data()), n_);
  if (info != 0) throw NumericError("zgbtrs failed");
  return x;
}

}  // namespace cmvspec
