#include "cmvspec/torus.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "cmvspec/errors.hpp"

namespace cmvspec {

namespace {

double frac01(double v) {
  double r = v - std::floor(v);
  return r >= 1.0 ? 0.0 : r;
}

// frac(x + n w) with the product n*w carried in two parts.
double shifted_coord(double x, double w, long n) {
  double nw = static_cast<double>(n) * w;
  double err = std::fma(static_cast<double>(n), w, -nw);
  double hi = frac01(nw);
  return frac01(hi + err + x);
}

int l1(std::span<const int> k) {
  int s = 0;
  for (int v : k) s += std::abs(v);
  return s;
}

// k.w - nearest integer, in [-1/2, 1/2], with compensated products.
double signed_frac(std::span<const int> k, std::span<const double> w) {
  double hi = 0.0, lo = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    double p = static_cast<double>(k[i]) * w[i];
    double pe = std::fma(static_cast<double>(k[i]), w[i], -p);
    double pr = p - std::nearbyint(p);
    double s = hi + pr;
    double bb = s - hi;
    double se = (hi - (s - bb)) + (pr - bb);
    hi = s;
    lo += se + pe;
  }
  double r = hi - std::nearbyint(hi) + lo;
  return r - std::nearbyint(r);
}

}  // namespace

bool Phase::is_real() const {
  return std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; });
}

double Phase::imag_sup() const {
  double m = 0.0;
  for (double v : y) m = std::max(m, std::abs(v));
  return m;
}

Phase reduce_phase(std::span<const double> raw) {
  RealVec out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = frac01(raw[i]);
  return Phase(std::move(out));
}

double torus_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("torus_distance: dimension mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = frac01(a[i] - b[i]);
    m = std::max(m, std::min(d, 1.0 - d));
  }
  return m;
}

double dist_to_integer(std::span<const int> k, std::span<const double> w) {
  return std::abs(signed_frac(k, w));
}

DiophantineCertificate check_diophantine(std::span<const double> w, double p, double q, int k_max) {
  const int d = static_cast<int>(w.size());
  if (d < 1) throw ConfigError("check_diophantine: empty frequency");
  if (!(p > 0.0)) throw ConfigError("check_diophantine: p must be positive");
  if (!(q > d)) throw ConfigError("check_diophantine: q must exceed the dimension d");
  if (k_max < 1) throw ConfigError("check_diophantine: K_max must be at least 1");

  DiophantineCertificate cert;
  cert.worst_ratio = std::numeric_limits<double>::infinity();
  std::vector<int> k(d, 0);

  for (int r = 1; r <= k_max; ++r) {
    const double rq = std::pow(static_cast<double>(r), q);
    std::function<void(int, int, bool)> rec = [&](int pos, int rem, bool nonzero) {
      if (pos == d - 1) {
        for (int s : {1, -1}) {
          int v = s * rem;
          if (rem == 0 && s == -1) break;
          if (!nonzero && v < 0) continue;
          if (!nonzero && v == 0) continue;
          k[pos] = v;
          double ratio = dist_to_integer(k, w) * rq;
          if (ratio < cert.worst_ratio) {
            cert.worst_ratio = ratio;
            cert.worst_k = k;
          }
        }
        return;
      }
      for (int v = -rem; v <= rem; ++v) {
        if (!nonzero && v < 0) continue;
        k[pos] = v;
        rec(pos + 1, rem - std::abs(v), nonzero || v != 0);
      }
    };
    rec(0, r, false);
  }
  cert.ok = cert.worst_ratio >= p;
  return cert;
}

Frequency Frequency::make(RealVec w, double p, double q, int k_max) {
  Frequency f;
  for (double& v : w) v = frac01(v);
  f.w = std::move(w);
  f.p = p;
  f.q = q;
  f.k_max = k_max;
  f.certificate = check_diophantine(f.w, p, q, k_max);
  return f;
}

SamplingFunction::SamplingFunction(int dim, std::vector<FourierTerm> terms, double h)
    : dim_(dim), terms_(std::move(terms)) {
  if (dim < 1) throw ConfigError("sampling function: dim must be >= 1");
  for (const auto& t : terms_) {
    if (static_cast<int>(t.k.size()) != dim) throw ConfigError("sampling function: mode dimension mismatch");
    if (!std::isfinite(t.c.real()) || !std::isfinite(t.c.imag()))
      throw ConfigError("sampling function: non-finite coefficient");
  }
  if (h > 0.0) {
    h_ = h;
    sup_bound_ = certify(h_);
    if (!(sup_bound_ < 1.0))
      throw ConfigError("sampling function: certified sup " + std::to_string(sup_bound_) +
                        " is not below 1 on the requested strip");
    return;
  }
  double strip = 1.0;
  double bound = certify(strip);
  for (int it = 0; it < 50 && !(bound < 1.0); ++it) {
    strip *= 0.5;
    bound = certify(strip);
  }
  if (!(bound < 1.0))
    throw ConfigError("sampling function: certified sup " + std::to_string(bound) + " is not below 1");
  h_ = strip;
  sup_bound_ = bound;
}

int SamplingFunction::degree() const {
  int m = 0;
  for (const auto& t : terms_) m = std::max(m, l1(t.k));
  return m;
}

cplx SamplingFunction::alpha(std::span<const double> x) const {
  cplx s = 0.0;
  for (const auto& t : terms_) {
    double ph = 0.0;
    for (int i = 0; i < dim_; ++i) ph += t.k[i] * x[i];
    ph -= std::nearbyint(ph);
    s += t.c * std::polar(1.0, kTwoPi * ph);
  }
  return s;
}

cplx SamplingFunction::alpha(const Phase& x) const {
  if (static_cast<int>(x.dim()) != dim_) throw ConfigError("eval_alpha: phase dimension mismatch");
  if (x.is_real()) return alpha(std::span<const double>(x.x));
  if (!(x.imag_sup() < h_)) throw ConfigError("eval_alpha: strip violation, |y| must be below h");
  cplx s = 0.0;
  for (const auto& t : terms_) {
    double ph = 0.0, damp = 0.0;
    for (int i = 0; i < dim_; ++i) {
      ph += t.k[i] * x.x[i];
      damp += t.k[i] * x.y[i];
    }
    ph -= std::nearbyint(ph);
    s += t.c * std::polar(std::exp(-kTwoPi * damp), kTwoPi * ph);
  }
  return s;
}

cplx SamplingFunction::alpha_conj(const Phase& x) const {
  if (x.is_real()) return std::conj(alpha(std::span<const double>(x.x)));
  if (!(x.imag_sup() < h_)) throw ConfigError("eval_alpha: strip violation, |y| must be below h");
  cplx s = 0.0;
  for (const auto& t : terms_) {
    double ph = 0.0, damp = 0.0;
    for (int i = 0; i < dim_; ++i) {
      ph += t.k[i] * x.x[i];
      damp += t.k[i] * x.y[i];
    }
    ph -= std::nearbyint(ph);
    s += std::conj(t.c) * std::polar(std::exp(kTwoPi * damp), -kTwoPi * ph);
  }
  return s;
}

double SamplingFunction::rho(std::span<const double> x) const {
  return std::sqrt(std::max(0.0, 1.0 - std::norm(alpha(x))));
}

double SamplingFunction::grid_sup() const {
  const int g = grid_points();
  double grid_max = 0.0;
  long total = 1;
  for (int i = 0; i < dim_; ++i) total *= g;
  RealVec x(dim_);
  for (long idx = 0; idx < total; ++idx) {
    long r = idx;
    for (int i = 0; i < dim_; ++i) {
      x[i] = static_cast<double>(r % g) / g;
      r /= g;
    }
    grid_max = std::max(grid_max, std::abs(alpha(std::span<const double>(x))));
  }
  return grid_max;
}

int SamplingFunction::grid_points() const { return dim_ <= 2 ? 256 : 64; }

double SamplingFunction::certify(double strip) const {
  if (grid_sup_ < 0.0) grid_sup_ = grid_sup();
  double lip = 0.0, strip_term = 0.0;
  for (const auto& t : terms_) {
    int a = l1(t.k);
    lip += std::abs(t.c) * a;
    strip_term += std::abs(t.c) * std::expm1(M_PI * strip * a);
  }
  return grid_sup_ + kTwoPi * lip / (2.0 * grid_points()) + strip_term;
}

SamplingFunction SamplingFunction::zero(int dim) { return SamplingFunction(dim, {}); }

SamplingFunction SamplingFunction::constant(int dim, cplx a) {
  return SamplingFunction(dim, {FourierTerm{std::vector<int>(dim, 0), a}});
}

SamplingFunction SamplingFunction::strong_coupling(double lambda) {
  // e^{i cos t} = sum_k i^|k| J_|k|(1) e^{ikt}, kept for |k| <= 4
  std::vector<FourierTerm> terms;
  for (int k = -4; k <= 4; ++k) {
    const int a = std::abs(k);
    const cplx ipow = (a % 4 == 0) ? cplx(1, 0) : (a % 4 == 1) ? cplx(0, 1) : (a % 4 == 2) ? cplx(-1, 0) : cplx(0, -1);
    terms.push_back(FourierTerm{{1, k}, lambda * ipow * std::cyl_bessel_j(static_cast<double>(a), 1.0)});
  }
  return SamplingFunction(2, std::move(terms));
}

cplx eval_alpha(const SamplingFunction& f, const Phase& x) { return f.alpha(x); }

double eval_rho(const SamplingFunction& f, const Phase& x) {
  if (!x.is_real()) throw ConfigError("eval_rho: phase must be real");
  return f.rho(std::span<const double>(x.x));
}

TruncationResult truncate_fourier(const SamplingFunction& f, int n) {
  if (n < 2) throw ConfigError("truncate_fourier: n must be >= 2");
  const double cut = std::pow(static_cast<double>(n), 4);
  std::vector<FourierTerm> kept;
  double tail = 0.0;
  for (const auto& t : f.terms()) {
    if (l1(t.k) < cut)
      kept.push_back(t);
    else
      tail += std::abs(t.c);
  }
  TruncationResult out;
  out.g = SamplingFunction(f.dim(), std::move(kept), f.strip_width());
  out.error_bound = tail;
  out.target = std::exp(-static_cast<double>(n) * n);
  out.target_met = tail <= out.target;
  return out;
}

std::vector<Phase> orbit(const Phase& x0, const Frequency& w, int n) {
  if (n < 1) throw ConfigError("orbit: n must be >= 1");
  if (x0.dim() != w.dim()) throw ConfigError("orbit: dimension mismatch");
  std::vector<Phase> out;
  out.reserve(n);
  for (int j = 0; j < n; ++j) {
    out.push_back(shifted_phase(x0.x, w.w, j));
  }
  return out;
}

OrbitSampler::OrbitSampler(const SamplingFunction& f, std::span<const double> w, std::span<const double> x0)
    : f_(f), w_(w.begin(), w.end()), x0_(x0.begin(), x0.end()) {
  const auto& terms = f_.terms();
  cur_.resize(terms.size());
  step_.resize(terms.size());
  for (std::size_t t = 0; t < terms.size(); ++t) {
    step_[t] = std::polar(1.0, kTwoPi * signed_frac(terms[t].k, w_));
  }
  resync();
}

void OrbitSampler::resync() {
  RealVec x(x0_.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = shifted_coord(x0_[i], w_[i], j_);
  const auto& terms = f_.terms();
  for (std::size_t t = 0; t < terms.size(); ++t) {
    double ph = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) ph += terms[t].k[i] * x[i];
    ph -= std::nearbyint(ph);
    cur_[t] = std::polar(1.0, kTwoPi * ph);
  }
}

cplx OrbitSampler::next() {
  const auto& terms = f_.terms();
  cplx s = 0.0;
  for (std::size_t t = 0; t < terms.size(); ++t) s += terms[t].c * cur_[t];
  ++j_;
  if (j_ % 64 == 0) {
    resync();
  } else {
    for (std::size_t t = 0; t < terms.size(); ++t) cur_[t] *= step_[t];
  }
  return s;
}

Phase shifted_phase(std::span<const double> x0, std::span<const double> w, long n) {
  RealVec c(x0.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = shifted_coord(x0[i], w[i], n);
  return Phase(std::move(c));
}

}  // namespace cmvspec
