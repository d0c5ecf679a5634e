#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace cmvspec {

using cplx = std::complex<double>;
using RealVec = std::vector<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Point of T^d, optionally displaced into the complex strip by y.
struct Phase {
  RealVec x;
  RealVec y;  // empty means real

  Phase() = default;
  explicit Phase(RealVec coords) : x(std::move(coords)) {}
  Phase(RealVec coords, RealVec imag) : x(std::move(coords)), y(std::move(imag)) {}

  std::size_t dim() const { return x.size(); }
  bool is_real() const;
  double imag_sup() const;
};

Phase reduce_phase(std::span<const double> raw);

// Distance on T^d in the sup norm over coordinates.
double torus_distance(std::span<const double> a, std::span<const double> b);

struct DiophantineCertificate {
  bool ok = false;
  std::vector<int> worst_k;
  double worst_ratio = 0.0;  // min over k of ||k.w|| |k|^q
};

// Exhaustive scan over nonzero k with |k|_1 <= k_max (one of each +-k pair).
DiophantineCertificate check_diophantine(std::span<const double> w, double p, double q, int k_max);

// Distance from k.w to the nearest integer, with a compensated dot product.
double dist_to_integer(std::span<const int> k, std::span<const double> w);

struct Frequency {
  RealVec w;
  double p = 0.0;
  double q = 0.0;
  int k_max = 0;
  DiophantineCertificate certificate;

  std::size_t dim() const { return w.size(); }
  // Validates and runs the certificate scan. Does not require ok.
  static Frequency make(RealVec w, double p, double q, int k_max);
};

struct FourierTerm {
  std::vector<int> k;
  cplx c;
};

class SamplingFunction {
 public:
  SamplingFunction() = default;
  // h <= 0 picks the largest h = 2^-j for which the strip certificate is < 1.
  SamplingFunction(int dim, std::vector<FourierTerm> terms, double h = 0.0);

  int dim() const { return dim_; }
  double strip_width() const { return h_; }
  double sup_bound() const { return sup_bound_; }
  const std::vector<FourierTerm>& terms() const { return terms_; }
  int degree() const;  // max |k|_1

  cplx alpha(const Phase& x) const;
  cplx alpha(std::span<const double> x) const;
  // Analytic continuation of conj(alpha) off the real torus.
  cplx alpha_conj(const Phase& x) const;
  double rho(std::span<const double> x) const;

  // Certified sup of |alpha| over |Im| <= strip/2 for a given strip width.
  double certify(double strip) const;

  static SamplingFunction zero(int dim);
  static SamplingFunction constant(int dim, cplx a);
  // lambda e^{2 pi i x1} exp(i cos 2 pi x2), Fourier series cut at |k2| <= 4;
  // the stock strong-coupling example.
  static SamplingFunction strong_coupling(double lambda);

 private:
  double grid_sup() const;
  int grid_points() const;
  mutable double grid_sup_ = -1.0;
  int dim_ = 0;
  double h_ = 0.0;
  double sup_bound_ = 0.0;
  std::vector<FourierTerm> terms_;
};

cplx eval_alpha(const SamplingFunction& f, const Phase& x);
double eval_rho(const SamplingFunction& f, const Phase& x);

struct TruncationResult {
  SamplingFunction g;
  double error_bound = 0.0;  // sum of dropped |c_k|, which dominates the sup error
  double target = 0.0;       // exp(-n^2)
  bool target_met = false;
};

// Keeps modes with |k|_1 < n^4.
TruncationResult truncate_fourier(const SamplingFunction& f, int n);

// reduce_phase(x0 + n w), with n*w formed without losing the low bits.
Phase shifted_phase(std::span<const double> x0, std::span<const double> w, long n);

std::vector<Phase> orbit(const Phase& x0, const Frequency& w, int n);

// Sequential evaluator of alpha(x + j w), j = 0, 1, ..., using per-mode
// phase rotation with an exact resync every 64 steps.
class OrbitSampler {
 public:
  OrbitSampler(const SamplingFunction& f, std::span<const double> w, std::span<const double> x0);
  cplx next();
  long index() const { return j_; }

 private:
  void resync();
  const SamplingFunction& f_;
  RealVec w_, x0_;
  std::vector<cplx> cur_, step_;
  long j_ = 0;
};

}  // namespace cmvspec
