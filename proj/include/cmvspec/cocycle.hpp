#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmvspec/torus.hpp"

namespace cmvspec {

using Mat2 = Eigen::Matrix2cd;

// z = e^{i theta} with theta reduced to [0, 2 pi); sqrt(z) = e^{i theta / 2}.
class SpectralPoint {
 public:
  explicit SpectralPoint(double theta = 0.0);
  static SpectralPoint from_z(cplx z);
  double theta() const { return theta_; }
  cplx z() const { return z_; }
  cplx sqrt_z() const { return sqrt_z_; }

 private:
  double theta_;
  cplx z_, sqrt_z_;
};

double op_norm(const Mat2& m);

// One Szego step with alpha and the (possibly continued) conjugate coefficient.
Mat2 cocycle_matrix(cplx alpha, cplx alpha_bar, const SpectralPoint& z);
Mat2 cocycle_step(const SamplingFunction& f, const SpectralPoint& z, const Phase& x);

struct CocycleProduct {
  long n = 0;
  Mat2 matrix = Mat2::Identity();  // max entry modulus 1
  double log_norm = 0.0;           // stripped scale

  double log_op_norm() const { return log_norm + std::log(op_norm(matrix)); }
  double log_abs_det() const { return 2.0 * log_norm + std::log(std::abs(matrix.determinant())); }
  Mat2 full() const { return std::exp(log_norm) * matrix; }

  void multiply_left(const Mat2& a);
  CocycleProduct then(const CocycleProduct& later) const;  // later * this
};

// M_n(x) = M(x + (n-1) w) ... M(x).
CocycleProduct transfer_product(const SamplingFunction& f, std::span<const double> w, const SpectralPoint& z,
                                const Phase& x, long n);
CocycleProduct transfer_product_values(std::span<const cplx> alphas, const SpectralPoint& z);

enum class LyapunovMethod { direct, avalanche };
std::string to_string(LyapunovMethod m);

struct LyapunovEstimate {
  long n = 0;
  double L_n = 0.0;
  long sample_count = 0;
  double std_error = 0.0;
  LyapunovMethod method = LyapunovMethod::direct;
};

struct SampleStats {
  double mean = 0.0;
  double std_error = 0.0;
};
SampleStats sample_stats(std::span<const double> v);

RealVec random_phase(std::uint64_t seed, std::uint64_t index, int dim);

LyapunovEstimate lyapunov_finite(const SamplingFunction& f, std::span<const double> w, const SpectralPoint& z,
                                 long n, long samples, std::uint64_t seed, int workers = 1);

// |log||A_m...A_1|| + sum_{j=2}^{m-1} log||A_j|| - sum_{j=1}^{m-1} log||A_{j+1} A_j|||
double avalanche_expression(std::span<const Mat2> a);

struct AvalancheHypotheses {
  double mu = 0.0;          // min_j ||A_j||
  double max_defect = 0.0;  // max_j log||A_{j+1}|| + log||A_j|| - log||A_{j+1}A_j||
  int worst_pair = -1;
  bool norm_floor_ok = false;   // mu >= m
  bool pair_defect_ok = false;  // max_defect < log(mu) / 2
};
AvalancheHypotheses avalanche_hypotheses(std::span<const Mat2> a);

// Two-block avalanche estimate 2 L_{2n} - L_n at n = n0 2^level for each
// level; returns the finest level. Throws HypothesisError if a sampled pair
// violates the norm floor or the pair defect bound.
LyapunovEstimate lyapunov_avalanche(const SamplingFunction& f, std::span<const double> w, const SpectralPoint& z,
                                    long n0, int levels, long samples, std::uint64_t seed, int workers = 1);

struct MonotonicityPair {
  long m = 0, n = 0;
  double diff = 0.0;  // L_n - L_m
  double std_error = 0.0;
  bool ok = false;
};

struct MonotonicityReport {
  std::vector<LyapunovEstimate> estimates;
  std::vector<MonotonicityPair> pairs;
  bool ok = true;
  double fitted_C = 0.0;  // max over n of (L_n - L_nmax) n / (log n)^{1/sigma}
};

MonotonicityReport check_ln_monotonicity(const SamplingFunction& f, std::span<const double> w,
                                         const SpectralPoint& z, std::span<const long> scales, long samples,
                                         std::uint64_t seed, int workers = 1, double sigma = 1.0);

// max over y of |L_n(y) - L_n(0)| / sum |y_i| on a shared phase sample.
double strip_continuity_check(const SamplingFunction& f, std::span<const double> w, const SpectralPoint& z, long n,
                              const std::vector<RealVec>& y_list, long samples, std::uint64_t seed,
                              int workers = 1);

struct UniformUpperReport {
  double sup_log_norm = 0.0;
  double L_n = 0.0;  // grid average of (1/n) log||M_n||
  double excess = 0.0;
};
UniformUpperReport uniform_upper_check(const SamplingFunction& f, std::span<const double> w,
                                       const SpectralPoint& z, long n, int grid, int workers = 1);

}  // namespace cmvspec
