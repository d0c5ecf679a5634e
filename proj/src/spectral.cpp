#include "cmvspec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "cmvspec/errors.hpp"

namespace cmvspec {

namespace {

double phase01(cplx z) {
  double t = std::arg(z);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

}  // namespace

double EigenPair::theta() const { return phase01(z); }

std::uint64_t matrix_hash(const Eigen::MatrixXcd& a) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ULL;
    }
  };
  long rows = a.rows(), cols = a.cols();
  mix(&rows, sizeof rows);
  mix(&cols, sizeof cols);
  mix(a.data(), sizeof(cplx) * a.size());
  return h;
}

void fix_gauge(Eigen::VectorXcd& u) {
  if (u.size() == 0) return;
  int best = 0;
  double bm = std::abs(u(0));
  for (int i = 1; i < u.size(); ++i) {
    double m = std::abs(u(i));
    if (m > bm) {
      bm = m;
      best = i;
    }
  }
  if (bm == 0.0) return;
  u *= std::conj(u(best)) / bm;
  u(best) = bm;
}

EigenDecomposition eigensolve_unitary(const Eigen::MatrixXcd& a, const EigenOptions& opt) {
  const int n = static_cast<int>(a.rows());
  if (n < 1 || a.cols() != n) throw ConfigError("eigensolve: matrix must be square and nonempty");
  if (n > opt.max_size) throw ConfigError("eigensolve: size " + std::to_string(n) + " exceeds limit");
  EigenDecomposition out;
  out.matrix_hash = matrix_hash(a);

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(n);
  schur.compute(a, opt.vectors);
  if (schur.info() != Eigen::Success) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(out.matrix_hash));
    throw NumericError(std::string("eigensolve: Schur iteration did not converge, matrix hash ") + buf);
  }
  const auto& t = schur.matrixT();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> th(n);
  for (int i = 0; i < n; ++i) th[i] = phase01(t(i, i));
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return th[x] < th[y]; });

  out.pairs.resize(n);
  for (int r = 0; r < n; ++r) {
    int i = order[r];
    EigenPair& p = out.pairs[r];
    p.index = r;
    cplx raw = t(i, i);
    p.modulus_defect = std::abs(std::abs(raw) - 1.0);
    p.z = raw / std::abs(raw);
    out.max_modulus_defect = std::max(out.max_modulus_defect, p.modulus_defect);
    if (opt.vectors) {
      p.u = schur.matrixU().col(i);
      fix_gauge(p.u);
      p.residual = (a * p.u - p.z * p.u).norm();
      out.max_residual = std::max(out.max_residual, p.residual);
    }
  }
  return out;
}

EigenDecomposition eigensolve(const FiniteCMV& m, const EigenOptions& opt) {
  EigenDecomposition d = eigensolve_unitary(m.dense(), opt);
  d.a = m.a;
  return d;
}

std::vector<cplx> eigenvalues(const FiniteCMV& m) {
  EigenDecomposition d = eigensolve(m, EigenOptions{false, 4096});
  std::vector<cplx> out;
  out.reserve(d.pairs.size());
  for (const auto& p : d.pairs) out.push_back(p.z);
  return out;
}

std::pair<int, double> nearest_value(const std::vector<cplx>& zs, cplx z) {
  if (zs.empty()) throw ConfigError("nearest_eigen: empty spectrum");
  int best = 0;
  double bd = std::abs(zs[0] - z);
  for (int i = 1; i < static_cast<int>(zs.size()); ++i) {
    double d = std::abs(zs[i] - z);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return {best, bd};
}

std::pair<int, double> nearest_eigen(const std::vector<EigenPair>& pairs, cplx z) {
  std::vector<cplx> zs;
  zs.reserve(pairs.size());
  for (const auto& p : pairs) zs.push_back(p.z);
  return nearest_value(zs, z);
}

double separation_gap(const std::vector<cplx>& zs, int k) {
  if (zs.size() < 2) throw ConfigError("separation_gap: need at least two eigenvalues");
  if (k < 0 || k >= static_cast<int>(zs.size())) throw ConfigError("separation_gap: index out of range");
  double m = std::numeric_limits<double>::infinity();
  for (int j = 0; j < static_cast<int>(zs.size()); ++j)
    if (j != k) m = std::min(m, std::abs(zs[j] - zs[k]));
  return m;
}

double separation_gap(const std::vector<EigenPair>& pairs, int k) {
  std::vector<cplx> zs;
  for (const auto& p : pairs) zs.push_back(p.z);
  return separation_gap(zs, k);
}

LocalizationProfile localization_profile(const Eigen::VectorXcd& u, long first_site, int n0, double gamma,
                                         long origin) {
  if (u.size() == 0) throw ConfigError("localization_profile: empty vector");
  LocalizationProfile p;
  p.fit_from = (3L * n0 + 3) / 4;  // ceil(3 N0 / 4)
  double bm = -1.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  p.pass = true;
  p.worst_margin = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (int i = 0; i < u.size(); ++i) {
    long s = first_site + i;
    double m = std::abs(u(i));
    double lm = m > 0.0 ? std::log(m) : -std::numeric_limits<double>::infinity();
    p.sites.push_back(s);
    p.log_abs_u.push_back(lm);
    if (m > bm) {
      bm = m;
      p.center = s;
    }
    long ds = std::labs(s - origin);
    if (ds < p.fit_from) continue;
    any = true;
    double margin = lm + gamma * ds / 20.0;
    if (margin > p.worst_margin) {
      p.worst_margin = margin;
      p.worst_site = s;
    }
    if (!(margin < 0.0)) p.pass = false;
    if (m > 0.0) {
      sx += ds;
      sy += lm;
      sxx += double(ds) * ds;
      sxy += ds * lm;
      ++cnt;
    }
  }
  if (!any) throw ConfigError("localization_profile: window has no sites with |s| >= 3N0/4");
  if (cnt >= 2) {
    double den = cnt * sxx - sx * sx;
    if (den > 0.0) p.fitted_rate = -(cnt * sxy - sx * sy) / den;
  }
  return p;
}

PerturbReport perturb_eigen_check(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& phi, cplx z, double eps_tilde,
                                  double eps_hat) {
  const int n = static_cast<int>(a.rows());
  if (phi.size() != n) throw ConfigError("perturb_eigen_check: dimension mismatch");
  if (std::abs(phi.norm() - 1.0) > 1e-10) throw ConfigError("perturb_eigen_check: phi must be a unit vector");
  if (std::abs(std::abs(z) - 1.0) > 1e-12) throw ConfigError("perturb_eigen_check: z must be unimodular");
  PerturbReport r;
  r.residual = (a * phi - z * phi).norm();
  r.hypothesis_ok = r.residual < eps_tilde;
  if (!r.hypothesis_ok) {
    r.note = "hypothesis ||(A - z) phi|| < eps_tilde fails";
    return r;
  }
  EigenDecomposition d = eigensolve_unitary(a);
  r.a_overlap_floor = 1.0 / std::sqrt(2.0 * n);
  const double ra = std::sqrt(2.0) * eps_tilde;
  for (const auto& p : d.pairs) {
    double dist = std::abs(p.z - z);
    if (dist < ra) {
      double ov = std::abs(p.u.dot(phi));
      if (ov > r.a_overlap) {
        r.a_overlap = ov;
        r.a_index = p.index;
        r.z0 = p.z;
        r.a_distance = dist;
      }
    }
    if (dist < eps_hat) ++r.eigen_in_disk;
  }
  r.part_a_ok = r.a_index >= 0 && r.a_overlap >= r.a_overlap_floor;
  r.b_bound = std::sqrt(2.0) * eps_tilde / eps_hat;
  if (r.eigen_in_disk != 1) {
    r.part_b_applicable = false;
    r.note = "second part refused: " + std::to_string(r.eigen_in_disk) + " eigenvalues in D(z, eps_hat)";
    return r;
  }
  r.part_b_applicable = true;
  int k = -1;
  for (const auto& p : d.pairs)
    if (std::abs(p.z - z) < eps_hat) k = p.index;
  r.b_distance = aligned_distance(phi, 0, d.pairs[k].u, 0);
  r.part_b_ok = r.b_distance < r.b_bound;
  return r;
}

Eigen::VectorXcd pad_vector(const Eigen::VectorXcd& u, long u_first, long first, long last) {
  long u_last = u_first + u.size() - 1;
  if (u_first < first || u_last > last) throw ConfigError("pad_vector: target window must contain the vector");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(last - first + 1);
  out.segment(u_first - first, u.size()) = u;
  return out;
}

double aligned_distance(const Eigen::VectorXcd& u, long u_first, const Eigen::VectorXcd& v, long v_first) {
  long first = std::min(u_first, v_first);
  long last = std::max(u_first + u.size() - 1, v_first + v.size() - 1);
  Eigen::VectorXcd pu = pad_vector(u, u_first, first, last);
  Eigen::VectorXcd pv = pad_vector(v, v_first, first, last);
  cplx ip = pv.dot(pu);  // <v, u>
  cplx c = std::abs(ip) > 0.0 ? ip / std::abs(ip) : cplx(1.0);
  return (pu - c * pv).norm();
}

std::vector<std::pair<int, int>> pair_by_phase(const std::vector<EigenPair>& a, const std::vector<EigenPair>& b) {
  const int n = static_cast<int>(a.size());
  if (static_cast<int>(b.size()) != n) throw ConfigError("pair_by_phase: spectra differ in size");
  int best_shift = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  double best_overlap = -1.0;
  for (int s = 0; s < n; ++s) {
    double cost = 0.0;
    for (int i = 0; i < n; ++i) cost = std::max(cost, std::abs(a[i].z - b[(i + s) % n].z));
    double overlap = 0.0;
    if (!a.empty() && a[0].u.size() > 0 && b[0].u.size() == a[0].u.size())
      for (int i = 0; i < n; ++i) overlap += std::abs(a[i].u.dot(b[(i + s) % n].u));
    bool better = cost < best_cost - 1e-14 || (std::abs(cost - best_cost) <= 1e-14 && overlap > best_overlap);
    if (better) {
      best_cost = cost;
      best_shift = s;
      best_overlap = overlap;
    }
  }
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n; ++i) out.emplace_back(i, (i + best_shift) % n);
  return out;
}

}  // namespace cmvspec
