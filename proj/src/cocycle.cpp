#include "cmvspec/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cmvspec/errors.hpp"
#include "cmvspec/parallel.hpp"
#include "cmvspec/rng.hpp"

namespace cmvspec {

SpectralPoint::SpectralPoint(double theta) {
  if (!std::isfinite(theta)) throw ConfigError("spectral point: non-finite theta");
  theta_ = std::fmod(theta, kTwoPi);
  if (theta_ < 0.0) theta_ += kTwoPi;
  if (theta_ >= kTwoPi) theta_ = 0.0;
  z_ = std::polar(1.0, theta_);
  sqrt_z_ = std::polar(1.0, 0.5 * theta_);
}

SpectralPoint SpectralPoint::from_z(cplx z) { return SpectralPoint(std::arg(z)); }

double op_norm(const Mat2& m) {
  double fro2 = m.squaredNorm();
  double det = std::abs(m.determinant());
  double disc = std::max(0.0, fro2 * fro2 - 4.0 * det * det);
  return std::sqrt(0.5 * (fro2 + std::sqrt(disc)));
}

Mat2 cocycle_matrix(cplx alpha, cplx alpha_bar, const SpectralPoint& z) {
  cplx rho = std::sqrt(1.0 - alpha * alpha_bar);
  cplx s = z.sqrt_z();
  Mat2 m;
  m << s, -alpha_bar / s, -alpha * s, 1.0 / s;
  return m / rho;
}

Mat2 cocycle_step(const SamplingFunction& f, const SpectralPoint& z, const Phase& x) {
  cplx a = f.alpha(x);
  if (x.is_real()) {
    if (!(std::abs(a) < 1.0)) throw NumericError("cocycle_step: |alpha| >= 1");
    return cocycle_matrix(a, std::conj(a), z);
  }
  return cocycle_matrix(a, f.alpha_conj(x), z);
}

void CocycleProduct::multiply_left(const Mat2& a) {
  matrix = a * matrix;
  double s = matrix.cwiseAbs().maxCoeff();
  if (!(s > 0.0) || !std::isfinite(s)) throw NumericError("cocycle product degenerated");
  matrix /= s;
  log_norm += std::log(s);
  ++n;
}

CocycleProduct CocycleProduct::then(const CocycleProduct& later) const {
  CocycleProduct out;
  out.n = n + later.n;
  out.matrix = later.matrix * matrix;
  double s = out.matrix.cwiseAbs().maxCoeff();
  out.matrix /= s;
  out.log_norm = log_norm + later.log_norm + std::log(s);
  return out;
}

CocycleProduct transfer_product(const SamplingFunction& f, std::span<const double> w, const SpectralPoint& z,
                                const Phase& x, long n) {
  if (n < 1) throw ConfigError("transfer_product: n must be >= 1");
  if (static_cast<int>(w.size()) != f.dim() || static_cast<int>(x.dim()) != f.dim())
    throw ConfigError("transfer_product: dimension mismatch");
  CocycleProduct p;
  if (x.is_real()) {
    OrbitSampler orb(f, w, x.x);
    for (long j = 0; j < n; ++j) {
      cplx a = orb.next();
      p.multiply_left(cocycle_matrix(a, std::conj(a), z));
    }
    return p;
  }
  for (long j = 0; j < n; ++j) {
    Phase xj = shifted_phase(x.x, w, j);
    xj.y = x.y;
    p.multiply_left(cocycle_step(f, z, xj));
  }
  return p;
}

CocycleProduct transfer_product_values(std::span<const cplx> alphas, const SpectralPoint& z) {
  CocycleProduct p;
  for (cplx a : alphas) p.multiply_left(cocycle_matrix(a, std::conj(a), z));
  return p;
}

std::string to_string(LyapunovMethod m) { return m == LyapunovMethod::direct ? "direct" : "avalanche"; }

SampleStats sample_stats(std::span<const double> v) {
  SampleStats s;
  if (v.empty()) return s;
  // sequential sums keep the result independent of how samples were produced
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / v.size();
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std_error = std::sqrt(ss / (v.size() - 1) / v.size());
  }
  return s;
}

RealVec random_phase(std::uint64_t seed, std::uint64_t index, int dim) {
  Stream st(seed, index);
  RealVec x(dim);
  for (auto& v : x) v = st.uniform();
  return x;
}

LyapunovEstimate lyapunov_finite(const SamplingFunction& f, std::span<const double> w, const SpectralPoint& z,
                                 long n, long samples, std::uint64_t seed, int workers) {
  if (samples < 1) throw ConfigError("lyapunov_finite: samples must be >= 1");
  std::vector<double> u(samples);
  parallel_for(samples, workers, [&](std::size_t i) {
    Phase x(random_phase(seed, i, f.dim()));
    u[i] = transfer_product(f, w, z, x, n).log_op_norm() / n;
  });
  auto st = sample_stats(u);
  LyapunovEstimate e;
  e.n = n;
  e.L_n = st.mean;
  e.std_error = st.std_error;
  e.sample_count = samples;
  return e;
}

double avalanche_expression(std::span<const Mat2> a) {
  const std::size_t m = a.size();
  if (m < 2) throw ConfigError("avalanche_expression: need at least two matrices");
  CocycleProduct all;
  for (const auto& x : a) all.multiply_left(x);
  double s = all.log_op_norm();
  for (std::size_t j = 1; j + 1 < m; ++j) s += std::log(op_norm(a[j]));
  for (std::size_t j = 0; j + 1 < m; ++j) {
    CocycleProduct pair;
    pair.multiply_left(a[j]);
    pair.multiply_left(a[j + 1]);
    s -= pair.log_op_norm();
  }
  return std::abs(s);
}

AvalancheHypotheses avalanche_hypotheses(std::span<const Mat2> a) {
  AvalancheHypotheses h;
  const std::size_t m = a.size();
  if (m < 2) throw ConfigError("avalanche_hypotheses: need at least two matrices");
  h.mu = std::numeric_limits<double>::infinity();
  for (const auto& x : a) h.mu = std::min(h.mu, op_norm(x));
  h.max_defect = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j + 1 < m; ++j) {
    double d = std::log(op_norm(a[j + 1])) + std::log(op_norm(a[j])) - std::log(op_norm(a[j + 1] * a[j]));
    if (d > h.max_defect) {
      h.max_defect = d;
      h.worst_pair = static_cast<int>(j);
    }
  }
  h.norm_floor_ok = h.mu >= static_cast<double>(m);
  h.pair_defect_ok = h.max_defect < 0.5 * std::log(h.mu);
  return h;
}

LyapunovEstimate lyapunov_avalanche(const SamplingFunction& f, std::span<const double> w, const SpectralPoint& z,
                                    long n0, int levels, long samples, std::uint64_t seed, int workers) {
  if (n0 < 1 || levels < 1 || samples < 1) throw ConfigError("lyapunov_avalanche: n0, levels, samples must be >= 1");
  LyapunovEstimate est;
  for (int lev = 0; lev < levels; ++lev) {
    const long n = n0 << lev;
    std::vector<double> q(samples);
    std::vector<double> log_mu(samples), defect(samples);
    parallel_for(samples, workers, [&](std::size_t i) {
      Phase x(random_phase(seed, i, f.dim()));
      CocycleProduct p1 = transfer_product(f, w, z, x, n);
      CocycleProduct p2 = transfer_product(f, w, z, shifted_phase(x.x, w, n), n);
      CocycleProduct p = p1.then(p2);
      double l1 = p1.log_op_norm(), l2 = p2.log_op_norm(), l = p.log_op_norm();
      log_mu[i] = std::min(l1, l2);
      defect[i] = l1 + l2 - l;
      q[i] = (l - l1) / n;
    });
    for (long i = 0; i < samples; ++i) {
      if (log_mu[i] < std::log(2.0))
        throw HypothesisError("avalanche: norm-floor hypothesis violated at level " + std::to_string(lev) +
                              " (n=" + std::to_string(n) + "), sample " + std::to_string(i) +
                              ": min block norm " + std::to_string(std::exp(log_mu[i])) + " < m = 2");
      if (!(defect[i] < 0.5 * log_mu[i]))
        throw HypothesisError("avalanche: pair-defect hypothesis violated at level " + std::to_string(lev) +
                              " (n=" + std::to_string(n) + "), sample " + std::to_string(i) + ", pair (1,2): defect " +
                              std::to_string(defect[i]) + " >= log(mu)/2 = " + std::to_string(0.5 * log_mu[i]));
    }
    auto st = sample_stats(q);
    est.n = 2 * n;
    est.L_n = st.mean;
    est.std_error = st.std_error;
    est.sample_count = samples;
    est.method = LyapunovMethod::avalanche;
  }
  return est;
}

MonotonicityReport check_ln_monotonicity(const SamplingFunction& f, std::span<const double> w,
                                         const SpectralPoint& z, std::span<const long> scales, long samples,
                                         std::uint64_t seed, int workers, double sigma) {
  if (scales.empty()) throw ConfigError("check_ln_monotonicity: no scales");
  if (!std::is_sorted(scales.begin(), scales.end()) || scales.front() < 1)
    throw ConfigError("check_ln_monotonicity: scales must be positive and sorted");
  const std::size_t ns = scales.size();
  const long nmax = scales.back();
  std::vector<std::vector<double>> u(ns, std::vector<double>(samples));
  parallel_for(samples, workers, [&](std::size_t i) {
    Phase x(random_phase(seed, i, f.dim()));
    OrbitSampler orb(f, w, x.x);
    CocycleProduct p;
    std::size_t next = 0;
    for (long j = 1; j <= nmax; ++j) {
      cplx a = orb.next();
      p.multiply_left(cocycle_matrix(a, std::conj(a), z));
      while (next < ns && scales[next] == j) {
        u[next][i] = p.log_op_norm() / j;
        ++next;
      }
    }
  });
  MonotonicityReport rep;
  for (std::size_t s = 0; s < ns; ++s) {
    auto st = sample_stats(u[s]);
    LyapunovEstimate e;
    e.n = scales[s];
    e.L_n = st.mean;
    e.std_error = st.std_error;
    e.sample_count = samples;
    rep.estimates.push_back(e);
  }
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t t = s + 1; t < ns; ++t) {
      if (scales[t] % scales[s] != 0 || scales[t] == scales[s]) continue;
      std::vector<double> d(samples);
      for (long i = 0; i < samples; ++i) d[i] = u[t][i] - u[s][i];
      auto st = sample_stats(d);
      MonotonicityPair pr{scales[s], scales[t], st.mean, st.std_error, st.mean <= 3.0 * st.std_error + 1e-12};
      rep.ok = rep.ok && pr.ok;
      rep.pairs.push_back(pr);
    }
  const double linf = rep.estimates.back().L_n;
  for (std::size_t s = 0; s + 1 < ns; ++s) {
    long n = scales[s];
    if (n < 2) continue;
    double c = (rep.estimates[s].L_n - linf) * n / std::pow(std::log(static_cast<double>(n)), 1.0 / sigma);
    rep.fitted_C = std::max(rep.fitted_C, c);
  }
  return rep;
}

double strip_continuity_check(const SamplingFunction& f, std::span<const double> w, const SpectralPoint& z, long n,
                              const std::vector<RealVec>& y_list, long samples, std::uint64_t seed, int workers) {
  for (const auto& y : y_list) {
    if (static_cast<int>(y.size()) != f.dim()) throw ConfigError("strip_continuity_check: y dimension mismatch");
    double sup = 0.0;
    for (double v : y) sup = std::max(sup, std::abs(v));
    if (!(sup < 0.5 * f.strip_width())) throw ConfigError("strip_continuity_check: strip violation, |y| >= h/2");
  }
  std::vector<double> base(samples);
  std::vector<std::vector<double>> shifted(y_list.size(), std::vector<double>(samples));
  parallel_for(samples, workers, [&](std::size_t i) {
    Phase x(random_phase(seed, i, f.dim()));
    base[i] = transfer_product(f, w, z, x, n).log_op_norm() / n;
    for (std::size_t k = 0; k < y_list.size(); ++k) {
      Phase xy(x.x, y_list[k]);
      shifted[k][i] = xy.is_real() ? base[i] : transfer_product(f, w, z, xy, n).log_op_norm() / n;
    }
  });
  double l0 = sample_stats(base).mean;
  double worst = 0.0;
  for (std::size_t k = 0; k < y_list.size(); ++k) {
    double s1 = 0.0;
    for (double v : y_list[k]) s1 += std::abs(v);
    if (s1 == 0.0) continue;
    double ly = sample_stats(shifted[k]).mean;
    worst = std::max(worst, std::abs(ly - l0) / s1);
  }
  return worst;
}

UniformUpperReport uniform_upper_check(const SamplingFunction& f, std::span<const double> w,
                                       const SpectralPoint& z, long n, int grid, int workers) {
  if (grid < 32) throw ConfigError("uniform_upper_check: grid must have >= 32 points per dimension");
  const int d = f.dim();
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= grid;
  std::vector<double> v(total);
  parallel_for(total, workers, [&](std::size_t idx) {
    RealVec x(d);
    std::size_t r = idx;
    for (int i = 0; i < d; ++i) {
      x[i] = static_cast<double>(r % grid) / grid;
      r /= grid;
    }
    v[idx] = transfer_product(f, w, z, Phase(x), n).log_op_norm();
  });
  UniformUpperReport rep;
  double sum = 0.0;
  rep.sup_log_norm = -std::numeric_limits<double>::infinity();
  for (double x : v) {
    sum += x;
    rep.sup_log_norm = std::max(rep.sup_log_norm, x);
  }
  rep.L_n = sum / total / n;
  rep.excess = rep.sup_log_norm - n * rep.L_n;
  return rep;
}

}  // namespace cmvspec
