#include "cmvspec/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

#include "cmvspec/cmv.hpp"
#include "cmvspec/cocycle.hpp"
#include "cmvspec/errors.hpp"
#include "cmvspec/multiscale.hpp"
#include "cmvspec/parallel.hpp"
#include "cmvspec/spectral.hpp"

namespace cmvspec {

namespace {

struct SampleSpectrum {
  RealVec x;
  std::vector<cplx> z;  // eigenvalues whose vectors pass the edge test
};

double edge_size(const Eigen::VectorXcd& u) {
  const long n = u.size();
  double e = 0.0;
  for (long i = 0; i < std::min<long>(2, n); ++i) e = std::max({e, std::abs(u(i)), std::abs(u(n - 1 - i))});
  return e;
}

SampleSpectrum admissible(const SamplingFunction& f, std::span<const double> w, const RealVec& x, long N,
                          double edge_cap, const CoverageOptions& opt) {
  auto seq = VerblunskySequence::sample(f, w, x, -N - 1, N);
  EigenDecomposition d = eigensolve(build_finite_cmv(seq, -N, N, opt.beta, opt.eta));
  SampleSpectrum s;
  s.x = x;
  for (const auto& p : d.pairs)
    if (edge_size(p.u) <= edge_cap) s.z.push_back(p.z);
  return s;
}

std::vector<CoveredArc> runs(const std::vector<CoveragePoint>& pts, bool want, bool wrap, double step) {
  std::vector<CoveredArc> out;
  const long n = static_cast<long>(pts.size());
  long i = 0;
  while (i < n) {
    if (pts[i].covered != want) {
      ++i;
      continue;
    }
    long j = i;
    while (j + 1 < n && pts[j + 1].covered == want) ++j;
    out.push_back({pts[i].theta, pts[j].theta, j - i + 1});
    i = j + 1;
  }
  if (wrap && out.size() > 1 && pts.front().covered == want && pts.back().covered == want) {
    CoveredArc first = out.front();
    out.erase(out.begin());
    out.back().to = first.to + kTwoPi;
    out.back().points += first.points;
  }
  if (wrap && out.size() == 1 && out.front().points == n) out.front().to = out.front().from + n * step;
  return out;
}

}  // namespace

CoverageReport interval_coverage_scan(const SamplingFunction& f, std::span<const double> w, double theta1,
                                      double theta2, long M, long N, double tol, const CoverageOptions& opt) {
  if (M < 2) throw ConfigError("coverage scan: need at least 2 grid points");
  if (!(theta2 > theta1)) throw ConfigError("coverage scan: arc must satisfy theta1 < theta2");
  if (N < 1 || 2 * N + 1 > 4096) throw ConfigError("coverage scan: window [-N, N] outside eigensolve limits");
  if (!(tol > 0.0)) throw ConfigError("coverage scan: tol must be positive");
  if (opt.phase_samples < 1) throw ConfigError("coverage scan: phase_samples must be >= 1");
  if (static_cast<int>(w.size()) != f.dim()) throw ConfigError("coverage scan: frequency dimension mismatch");

  CoverageReport rep;
  rep.N = N;
  rep.tol = tol;
  rep.full_circle = theta2 - theta1 >= kTwoPi - 1e-12;
  const double step = rep.full_circle ? kTwoPi / M : (theta2 - theta1) / (M - 1);
  const double edge_cap = std::sqrt(tol);

  std::vector<SampleSpectrum> spectra(opt.phase_samples);
  parallel_for(opt.phase_samples, opt.workers, [&](std::size_t i) {
    spectra[i] = admissible(f, w, random_phase(opt.seed, i, f.dim()), N, edge_cap, opt);
  });

  rep.points.resize(M);
  parallel_for(M, opt.workers, [&](std::size_t g) {
    CoveragePoint& p = rep.points[g];
    p.theta = theta1 + static_cast<double>(g) * step;
    const cplx z = std::polar(1.0, p.theta);
    p.best_dist = std::numeric_limits<double>::infinity();
    for (const auto& s : spectra) {
      if (s.z.empty()) continue;
      double d = nearest_value(s.z, z).second;
      if (d < p.best_dist) {
        p.best_dist = d;
        p.phase = s.x;
      }
    }
    p.covered = p.best_dist <= tol;
  });

  // Newton refinement on the last phase coordinate for the first uncovered
  // points of each run
  if (opt.refine > 0) {
    MultiscaleProblem P{f, RealVec(w.begin(), w.end()), opt.beta, opt.eta, 0.0};
    std::vector<std::size_t> todo;
    int in_run = 0;
    for (std::size_t g = 0; g < rep.points.size(); ++g) {
      if (rep.points[g].covered || rep.points[g].phase.empty()) {
        in_run = 0;
        continue;
      }
      if (in_run++ < opt.refine) todo.push_back(g);
    }
    parallel_for(todo.size(), opt.workers, [&](std::size_t i) {
      CoveragePoint& p = rep.points[todo[i]];
      const cplx z = std::polar(1.0, p.theta);
      RealVec phi(p.phase.begin(), p.phase.end() - 1);
      PhaseSolve ps = solve_phase(P, -N, N, phi, z, p.phase.back(), z);
      SampleSpectrum s = admissible(f, w, ps.x, N, edge_cap, opt);
      if (s.z.empty()) return;
      double d = nearest_value(s.z, z).second;
      if (d < p.best_dist) {
        p.best_dist = d;
        p.phase = ps.x;
        p.covered = d <= tol;
      }
    });
  }

  rep.arcs = runs(rep.points, true, rep.full_circle, step);
  rep.gaps = runs(rep.points, false, rep.full_circle, step);
  return rep;
}

void write_coverage_csv(std::ostream& os, const CoverageReport& r, int dim) {
  os << "theta,covered,best_dist";
  for (int i = 0; i < dim; ++i) os << ",phase_x" << (i + 1);
  os << '\n' << std::setprecision(17);
  for (const auto& p : r.points) {
    os << p.theta << ',' << (p.covered ? 1 : 0) << ',' << p.best_dist;
    for (int i = 0; i < dim; ++i) os << ',' << (i < static_cast<int>(p.phase.size()) ? p.phase[i] : 0.0);
    os << '\n';
  }
}

}  // namespace cmvspec
