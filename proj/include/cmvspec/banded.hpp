#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace cmvspec {

using cplx = std::complex<double>;

// LU factorization with partial pivoting of an n x n band matrix (LAPACK zgbtrf).
class BandLU {
 public:
  // entry(i, j) is queried for |i - j| within the band only.
  BandLU(int n, int kl, int ku, const std::function<cplx(int, int)>& entry);

  int size() const { return n_; }
  bool singular() const { return singular_; }
  double min_pivot() const { return min_pivot_; }
  double log_abs_det() const { return log_abs_det_; }
  cplx det_phase() const { return det_phase_; }
  cplx det() const;

  Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const;

 private:
  int n_, kl_, ku_, ldab_;
  std::vector<cplx> ab_;
  std::vector<int> ipiv_;
  bool singular_ = false;
  double min_pivot_ = 0.0;
  double log_abs_det_ = 0.0;
  cplx det_phase_ = 1.0;
};

}  // namespace cmvspec
